"""Benchmark the compiled planner kernels against the pure-Python fallback.

Usage: python benchmarks/bench_planner.py
"""
import time

import probedrive.planning as planning
from probedrive import _fallback
from probedrive.dynamics import DynamicsConfig
from probedrive.inference import HumanUtilityModel
from probedrive.model import (
    Belief,
    GridKind,
    JointState,
    VehicleState,
    headway_grid,
    velocity_grid,
)
from probedrive.planning import (
    PlanObjective,
    PlannerConfig,
    TrackingObjective,
    influence_plan,
    probe_plan,
)

try:
    from probedrive import _speedups
except ImportError:
    _speedups = None


def _probe_case(grid, beta):
    model = HumanUtilityModel(grid=grid, rationality_beta=beta,
                              w_speed=1.0 if grid.kind is GridKind.DESIRED_VELOCITY else 0.02,
                              w_headway=120.0)
    cfg = DynamicsConfig()
    state = JointState(robot=VehicleState(0.0, 20.0, 1),
                       human=VehicleState(-100.0, 20.0, 1))
    planner = PlannerConfig(horizon_steps=5)
    return state, Belief.uniform(len(grid)), model, cfg, planner


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if _speedups is None:
        print("compiled kernels not available; nothing to compare")
        return
    cases = [
        ("probe 30-hypothesis velocity grid, T=5",
         _probe_case(velocity_grid(), 0.02), 3, 1),
        ("probe 30-hypothesis headway grid, T=5",
         _probe_case(headway_grid(), 0.1), 3, 1),
    ]
    print(f"{'case':45s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, (state, bel, model, cfg, planner), rep_c, rep_p in cases:
        planning._impl = _speedups
        t_c = _time(lambda: probe_plan(state, bel, model, cfg, planner), rep_c)
        planning._impl = _fallback
        t_p = _time(lambda: probe_plan(state, bel, model, cfg, planner), rep_p)
        planning._impl = _speedups
        print(f"{name:45s} {t_c * 1e3:8.1f}ms {t_p * 1e3:8.1f}ms "
              f"{t_p / t_c:7.1f}x")

    # influence planner (cheap either way, included for completeness)
    state, bel, model, cfg, _ = _probe_case(velocity_grid(), 0.02)
    planner = PlannerConfig(horizon_steps=5, objective=PlanObjective.INFLUENCE,
                            plan_accel_grid=(-3.0, -1.0, -0.5, 0.0, 0.5, 1.0))
    obj = TrackingObjective(kind="velocity", target=21.5)
    planning._impl = _speedups
    t_c = _time(lambda: influence_plan(state, 23.56, model, cfg, planner, obj), 10)
    planning._impl = _fallback
    t_p = _time(lambda: influence_plan(state, 23.56, model, cfg, planner, obj), 3)
    planning._impl = _speedups
    print(f"{'influence tracking, 6 actions, T=5':45s} {t_c * 1e3:8.1f}ms "
          f"{t_p * 1e3:8.1f}ms {t_p / t_c:7.1f}x")


if __name__ == "__main__":
    main()
