"""Command-line entry point and bit-exact run artifact serialization.

Artifacts per run directory:
  timeseries.csv  per-step states and controls (fixed column order)
  beliefs.csv     belief snapshot rows (t + one column per hypothesis)
  summary.txt     key-value document: estimates, metrics, phases, config echo

Floats are rendered with 9 significant digits; identical flags produce
byte-identical files.
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import replace
from typing import List, Optional

from . import __version__
from .scenario import (
    CollisionDetected,
    Mode,
    Phase,
    RunLog,
    ScenarioKind,
    VehicleClass,
    default_config,
    metric_cumulative_abs_control,
    metric_velocity_deviation,
    run_scenario,
)


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.9g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="probedrive", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--scenario", choices=["lane-advise", "gap-create"],
                   required=True)
    p.add_argument("--mode", choices=["active", "passive"], required=True)
    p.add_argument("--config", type=str, default=None,
                   help="INI config file; flags override file values")
    p.add_argument("--out", type=str, default=None,
                   help="output directory for run artifacts")
    p.add_argument("--duration", type=float, default=None, help="seconds")
    p.add_argument("--seed", type=int, default=None)
    return p


# configuration keys -> (section, attribute path, type)
_CONFIG_KEYS = {
    ("scenario", "duration"): ("duration", float),
    ("scenario", "seed"): ("rng_seed", int),
    ("scenario", "cutoff_velocity"): ("cutoff_velocity", float),
    ("scenario", "probe_cap"): ("probe_cap", float),
    ("scenario", "probe_jsd_threshold"): ("probe_jsd_threshold", float),
    ("scenario", "phase_block"): ("phase_block", float),
    ("scenario", "block_margin"): ("block_margin", float),
    ("scenario", "align_tol"): ("align_tol", float),
    ("scenario", "slot_slack"): ("slot_slack", float),
    ("scenario", "lane_end"): ("lane_end", float),
    ("scenario", "snapshot_period"): ("snapshot_period", float),
    ("scenario", "log_full_beliefs"): ("log_full_beliefs", bool),
    ("dynamics", "dt"): ("dynamics.dt", float),
    ("dynamics", "robot_v_max"): ("dynamics.robot_v_max", float),
    ("model", "beta"): ("model.rationality_beta", float),
    ("model", "w_speed"): ("model.w_speed", float),
    ("model", "w_headway"): ("model.w_headway", float),
    ("model", "w_safety"): ("model.w_safety", float),
    ("model", "v_ref"): ("model.v_ref", float),
    ("model", "lookahead"): ("model.lookahead", float),
    ("planner", "horizon_steps"): ("planner.horizon_steps", int),
    ("planner", "plan_dt"): ("planner.plan_dt", float),
    ("planner", "safety_weight"): ("planner.safety_weight", float),
    ("planner", "d_safe"): ("planner.d_safe", float),
}


def _key_line_number(path: str, section: str, key: str) -> Optional[int]:
    current = None
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if stripped.startswith("[") and stripped.endswith("]"):
                    current = stripped[1:-1].strip().lower()
                elif "=" in stripped and current == section:
                    if stripped.split("=", 1)[0].strip().lower() == key:
                        return lineno
    except OSError:
        return None
    return None


def apply_config_file(config, path: str):
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    except configparser.Error as e:
        raise ConfigError(f"config parse error in {path}: {e}")
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = _CONFIG_KEYS.get((section.lower(), key.lower()))
            if spec is None:
                line = _key_line_number(path, section.lower(), key.lower())
                where = f"line {line}, " if line else ""
                raise ConfigError(
                    f"unknown config key ({where}section [{section}], "
                    f"key '{key}')")
            attr_path, typ = spec
            try:
                if typ is bool:
                    value = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    value = typ(raw)
            except ValueError:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r}")
            config = _set_path(config, attr_path, value)
    return config


def _set_path(config, attr_path: str, value):
    parts = attr_path.split(".")
    if len(parts) == 1:
        return replace(config, **{parts[0]: value})
    sub = getattr(config, parts[0])
    sub = replace(sub, **{parts[1]: value})
    return replace(config, **{parts[0]: sub})


def write_timeseries(log: RunLog, path: str):
    n_bg = len(log.records[0].background) if log.records else 0
    cols = ["t", "phase", "robot_x", "robot_v", "robot_lane", "robot_a",
            "human_x", "human_v", "human_lane", "human_a"]
    for i in range(n_bg):
        cols.extend([f"bg{i}_x", f"bg{i}_v", f"bg{i}_a"])
    lines = [",".join(cols)]
    for r in log.records:
        row = [_fmt(r.t), r.phase.value,
               _fmt(r.robot.x), _fmt(r.robot.v), str(r.robot.lane),
               _fmt(r.robot_a),
               _fmt(r.human.x), _fmt(r.human.v), str(r.human.lane),
               _fmt(r.human_a)]
        for i in range(n_bg):
            veh = r.background[i]
            row.extend([_fmt(veh.x), _fmt(veh.v), _fmt(r.background_a[i])])
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_beliefs(log: RunLog, path: str):
    rows = log.full_beliefs if log.config.log_full_beliefs else log.snapshots
    n = len(log.config.model.grid)
    header = ",".join(["t"] + [f"p{k + 1}" for k in range(n)])
    lines = [header]
    for t, probs in rows:
        lines.append(",".join([_fmt(t)] + [_fmt(p) for p in probs]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _config_echo(log: RunLog) -> List[str]:
    cfg = log.config
    dyn = cfg.dynamics
    model = cfg.model
    pl = cfg.planner
    out = []

    def put(key, value):
        if isinstance(value, float):
            out.append(f"config.{key} = {_fmt(value)}")
        else:
            out.append(f"config.{key} = {value}")

    put("scenario", cfg.kind.value)
    put("mode", cfg.mode.value)
    put("duration", cfg.duration)
    put("seed", cfg.rng_seed)
    put("cutoff_velocity", cfg.cutoff_velocity)
    put("phase_block", cfg.phase_block)
    put("replan_period", cfg.replan_period)
    put("probe_jsd_threshold", cfg.probe_jsd_threshold)
    put("probe_cap", cfg.probe_cap)
    put("block_margin", cfg.block_margin)
    put("align_tol", cfg.align_tol)
    put("pos_weight", cfg.pos_weight)
    put("vel_weight", cfg.vel_weight)
    put("slot_slack", cfg.slot_slack)
    put("snapshot_period", cfg.snapshot_period)
    put("lane_end", "none" if cfg.lane_end is None else _fmt(cfg.lane_end))
    put("robot_initial", f"{_fmt(cfg.robot_initial[0])}@{_fmt(cfg.robot_initial[1])}")
    put("human_initial", f"{_fmt(cfg.human_initial[0])}@{_fmt(cfg.human_initial[1])}")
    for i, b in enumerate(cfg.background):
        put(f"background{i}",
            f"x={_fmt(b.x)} v={_fmt(b.v)} v_des={_fmt(b.idm.v_des)}")
    put("human_idm",
        " ".join(f"{k}={_fmt(getattr(cfg.human_idm, k))}"
                 for k in ("u_max", "b_pref", "v_des", "tau_gap", "d_min")))
    put("dynamics.dt", dyn.dt)
    put("dynamics.robot_v_max", dyn.robot_v_max)
    put("dynamics.robot_accel_grid",
        " ".join(_fmt(a) for a in dyn.robot_accel_grid))
    put("dynamics.human_accel_grid",
        " ".join(_fmt(a) for a in dyn.human_accel_grid))
    put("model.grid_kind", model.grid.kind.value)
    put("model.grid_base", model.grid.values[0])
    put("model.grid_step", model.grid.step)
    put("model.grid_size", len(model.grid))
    put("model.beta", model.rationality_beta)
    put("model.w_speed", model.w_speed)
    put("model.w_headway", model.w_headway)
    put("model.w_safety", model.w_safety)
    put("model.v_ref", model.v_ref)
    put("model.lookahead", model.lookahead)
    put("model.pen_distance", model.pen_distance)
    put("planner.horizon_steps", pl.horizon_steps)
    put("planner.plan_dt", pl.plan_dt)
    put("planner.safety_weight", pl.safety_weight)
    put("planner.d_safe", pl.d_safe)
    put("planner.plan_accel_grid",
        " ".join(_fmt(a) for a in pl.plan_accel_grid))
    return out


def write_summary(log: RunLog, path: str):
    lines = [f"tool_version = {__version__}"]
    lines.append(f"collision = {'none' if log.collision_time is None else _fmt(log.collision_time)}")
    if log.termination_time is not None:
        lines.append(f"probe_termination_time = {_fmt(log.termination_time)}")
        lines.append(f"phi_map_termination = {_fmt(log.phi_map_termination)}")
        lines.append(f"phi_mean_termination = {_fmt(log.phi_mean_termination)}")
    else:
        lines.append("probe_termination_time = none")
    if log.phi_map_final is not None:
        lines.append(f"phi_map_final = {_fmt(log.phi_map_final)}")
        lines.append(f"phi_mean_final = {_fmt(log.phi_mean_final)}")
    lines.append(f"cutoff_not_met = {str(log.cutoff_not_met).lower()}")
    for key, value in (("influence_start", log.influence_start),
                       ("influence_complete", log.influence_complete),
                       ("robot_merge_time", log.robot_merge_time),
                       ("human_merge_time", log.human_merge_time)):
        lines.append(f"{key} = {'none' if value is None else _fmt(value)}")
    for cls in VehicleClass:
        dev = metric_velocity_deviation(log, cls)
        lines.append(f"velocity_deviation_min.{cls.value} = {_fmt(min(dev))}")
        lines.append(f"velocity_deviation_max.{cls.value} = {_fmt(max(dev))}")
        cum = metric_cumulative_abs_control(log, cls)
        lines.append(f"cumulative_abs_control.{cls.value} = {_fmt(cum)}")
    for t, phase in log.phase_boundaries:
        lines.append(f"phase_boundary.{_fmt(t)} = {phase.value}")
    for t, name in log.objective_events:
        lines.append(f"objective.{_fmt(t)} = {name}")
    lines.extend(_config_echo(log))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_artifacts(log: RunLog, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    written = []
    try:
        for name, writer in (("timeseries.csv", write_timeseries),
                             ("beliefs.csv", write_beliefs),
                             ("summary.txt", write_summary)):
            path = os.path.join(out_dir, name)
            writer(log, path)
            written.append(path)
    except OSError:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        parser.print_usage(sys.stderr)
        return 1
    try:
        kind = ScenarioKind(args.scenario)
        mode = Mode(args.mode)
        config = default_config(kind, mode)
        if args.config:
            config = apply_config_file(config, args.config)
        if args.duration is not None:
            config = replace(config, duration=args.duration)
        if args.seed is not None:
            config = replace(config, rng_seed=args.seed)
        if config.duration < config.dynamics.dt:
            raise ConfigError(
                f"duration {config.duration} s is shorter than one step "
                f"({config.dynamics.dt} s)")
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1

    exit_code = 0
    try:
        log = run_scenario(config)
    except CollisionDetected as e:
        sys.stderr.write(f"aborted: {e}\n")
        log = e.log
        exit_code = 2

    if args.out:
        try:
            write_artifacts(log, args.out)
        except OSError as e:
            sys.stderr.write(f"error writing artifacts: {e}\n")
            return 2
    return exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
