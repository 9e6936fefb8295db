"""Receding-horizon planners: information probing and estimate exploitation.

Both planners solve their finite-horizon problem exactly over a discretized
robot action set by depth-first dynamic programming with memoization, which
is guaranteed to match exhaustive enumeration of all action sequences. The
hot search loops live in a compiled extension when available
(`probedrive._speedups`), with a bit-identical pure-Python fallback; set
PROBEDRIVE_PURE_PYTHON=1 to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from . import _fallback
from .divergence import jsd
from .dynamics import DynamicsConfig
from .inference import (
    HumanUtilityModel,
    MIN_MODEL_GAP,
    SAFETY_PENALTY_CAP,
    action_utilities,
    softmax_probs,
)
from .model import (
    Belief,
    Control,
    GridKind,
    JointState,
    VehicleState,
    grid_value,
    normalize,
)

try:  # pragma: no cover - exercised indirectly via the backend tests
    from . import _speedups as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

if _compiled is not None and not os.environ.get("PROBEDRIVE_PURE_PYTHON"):
    _impl = _compiled
    BACKEND = "compiled"
else:
    _impl = _fallback
    BACKEND = "python"


class HorizonTooLarge(ValueError):
    """The action tree exceeds the configured node budget."""


class PlanObjective(Enum):
    PROBE = "probe"
    INFLUENCE = "influence"


@dataclass(frozen=True)
class PlannerConfig:
    horizon_steps: int = 5
    plan_dt: float = 1.0  # [s] per planning step (coarser than the sim dt)
    safety_weight: float = 0.5  # λ
    objective: PlanObjective = PlanObjective.PROBE
    d_safe: float = 10.0  # [m] distance scale of the safety objective
    effort_weight: float = 0.05  # comfort term on the robot's own |u|^2
    plan_v_min: float = 0.0  # admissible planned velocity band
    plan_v_max: Optional[float] = None  # None: the dynamics' robot_v_max
    # Planning action set; a subset of the admissible robot grid keeps the
    # per-replan tree small enough for 1 Hz receding-horizon use.
    plan_accel_grid: Tuple[float, ...] = (-3.0, -1.5, 0.0, 1.0, 2.0)
    node_budget: int = 2_000_000

    def __post_init__(self):
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if self.plan_dt <= 0:
            raise ValueError("plan_dt must be positive")


@dataclass(frozen=True)
class PlanResult:
    controls: Tuple[Control, ...]
    value: float
    explored_nodes: int
    expected_terminal_jsd: Optional[float] = None


@dataclass(frozen=True)
class TrackingObjective:
    """Quadratic tracking term supplied by the scenario to the influence MPC."""

    kind: str  # "velocity" or "position"
    target: float
    rate: float = 0.0  # target advance per second (moving setpoints)
    weight: float = 1.0
    damp_weight: float = 0.0  # velocity damping toward `rate` (position kind)


def _tie_order(grid: Sequence[float]) -> List[int]:
    # Smallest |accel| first, then the smaller signed value.
    return sorted(range(len(grid)), key=lambda i: (abs(grid[i]), grid[i]))


def _check_budget(planner: PlannerConfig):
    n = len(planner.plan_accel_grid)
    if n ** planner.horizon_steps > planner.node_budget:
        raise HorizonTooLarge(
            f"{n}^{planner.horizon_steps} sequences exceed the node budget "
            f"{planner.node_budget}; coarsen the action grid or horizon")


def best_response(state: JointState, robot_u: Control, phi_index: int,
                  model: HumanUtilityModel, config: DynamicsConfig,
                  dt: Optional[float] = None) -> Control:
    """Human action maximizing its utility at the one-step successor.

    Ties break toward the smallest |acceleration|, then the lower value.
    """
    value = grid_value(model.grid, phi_index)
    utils = action_utilities(state, robot_u, value, model, config, dt=dt)
    grid = config.human_accel_grid
    order = _tie_order(grid)
    best = order[0]
    for j in order[1:]:
        if utils[j] > utils[best]:
            best = j
    return Control(accel=grid[best])


def _model_kernel_args(model: HumanUtilityModel):
    kind = (_fallback.GRID_VELOCITY
            if model.grid.kind is GridKind.DESIRED_VELOCITY
            else _fallback.GRID_HEADWAY)
    return kind, (model.rationality_beta, model.w_speed, model.w_headway,
                  model.w_safety, model.v_ref, model.pen_distance,
                  SAFETY_PENALTY_CAP, MIN_MODEL_GAP)


def probe_plan(state: JointState, belief: Belief, model: HumanUtilityModel,
               config: DynamicsConfig, planner: PlannerConfig) -> PlanResult:
    """Optimal probing sequence: maximize the expected terminal divergence
    from the current belief plus the weighted safety objective."""
    if planner.objective is not PlanObjective.PROBE:
        raise ValueError("planner.objective must be PROBE")
    _check_budget(planner)
    kind, params = _model_kernel_args(model)
    robot_acc = list(planner.plan_accel_grid)
    human_acc = list(config.human_accel_grid)
    same_lane = state.robot.lane == state.human.lane
    value, indices, nodes = _impl.probe_search(
        planner.horizon_steps, planner.plan_dt, model.lookahead,
        state.robot.x, state.robot.v, state.human.x, state.human.v,
        list(belief.probabilities), list(model.grid.values), kind,
        1 if same_lane else 0, *params,
        robot_acc, _tie_order(robot_acc), human_acc, _tie_order(human_acc),
        planner.safety_weight, planner.d_safe, planner.effort_weight,
        planner.plan_v_min,
        planner.plan_v_max if planner.plan_v_max is not None
        else config.robot_v_max, 1e-12)
    controls = tuple(Control(accel=robot_acc[i]) for i in indices)
    diag = evaluate_probe_rollout(state, belief, controls, model, config, planner)
    return PlanResult(controls=controls, value=value, explored_nodes=nodes,
                      expected_terminal_jsd=diag.expected_terminal_jsd)


def influence_plan(state: JointState, phi_hat: float, model: HumanUtilityModel,
                   config: DynamicsConfig, planner: PlannerConfig,
                   objective: TrackingObjective) -> PlanResult:
    """Optimal exploitation sequence for one atomic tracking objective.

    The human is predicted by its best response under the point estimate
    `phi_hat` while it shares the robot's lane; background vehicles are
    predicted at constant velocity and enter through the safety term.
    """
    if planner.objective is not PlanObjective.INFLUENCE:
        raise ValueError("planner.objective must be INFLUENCE")
    _check_budget(planner)
    kind, params = _model_kernel_args(model)
    robot_acc = list(planner.plan_accel_grid)
    human_acc = list(config.human_accel_grid)
    coupled = state.robot.lane == state.human.lane
    obj_kind = {"velocity": _fallback.OBJ_VELOCITY,
                "position": _fallback.OBJ_POSITION}[objective.kind]
    bg_x = [b.x for b in state.background]
    bg_v = [b.v for b in state.background]
    bg_same = [1 if b.lane == state.robot.lane else 0 for b in state.background]
    value, indices, nodes = _impl.influence_search(
        planner.horizon_steps, planner.plan_dt, model.lookahead,
        state.robot.x, state.robot.v, state.human.x, state.human.v,
        1 if coupled else 0, phi_hat, kind, *params,
        bg_x, bg_v, bg_same,
        obj_kind, objective.weight, objective.target, objective.rate,
        objective.damp_weight,
        robot_acc, _tie_order(robot_acc), human_acc, _tie_order(human_acc),
        planner.safety_weight, planner.d_safe, planner.effort_weight,
        planner.plan_v_min,
        planner.plan_v_max if planner.plan_v_max is not None
        else config.robot_v_max)
    controls = tuple(Control(accel=robot_acc[i]) for i in indices)
    return PlanResult(controls=controls, value=value, explored_nodes=nodes)


@dataclass(frozen=True)
class ProbeRollout:
    """Diagnostics of one probing control sequence, stage by stage."""

    stage_values: Tuple[float, ...]  # belief-weighted stage rewards
    value: float
    expected_terminal_jsd: float
    jsd_increments: Tuple[Tuple[float, ...], ...]  # per step, per branch
    terminal_divergences: Tuple[float, ...]  # per branch


def evaluate_probe_rollout(state: JointState, belief: Belief,
                           controls: Sequence[Control],
                           model: HumanUtilityModel, config: DynamicsConfig,
                           planner: PlannerConfig) -> ProbeRollout:
    """Replay a control sequence through the probing model.

    Pure-Python mirror of the search rollout, used for the telescoping and
    Bellman-additivity checks and for the probing termination test.
    """
    n = len(model.grid)
    dt = planner.plan_dt
    bel0 = belief
    rx, rv = state.robot.x, state.robot.v
    branches = []
    for p in range(n):
        branches.append({
            "hx": state.human.x, "hv": state.human.v, "bel": belief,
            "d_prev": 0.0,
        })
    same_lane = state.robot.lane == state.human.lane
    sgn_h = 1.0 if state.robot.x >= state.human.x else -1.0
    grid = config.human_accel_grid
    order = _tie_order(grid)
    stage_values = []
    jsd_increments = []
    for t, u in enumerate(controls):
        ar = u.accel
        rx2 = rx + rv * dt + 0.5 * ar * dt * dt
        rv2 = max(0.0, rv + ar * dt)
        stage = 0.0
        increments = []
        for p, br in enumerate(branches):
            sub = JointState(
                robot=VehicleState(x=rx, v=rv, lane=state.robot.lane),
                human=VehicleState(x=br["hx"], v=br["hv"],
                                   lane=state.human.lane),
                time=0.0)
            utils = action_utilities(sub, u, model.grid.values[p], model,
                                     config)
            j_star = order[0]
            for j in order[1:]:
                if utils[j] > utils[j_star]:
                    j_star = j
            weights = []
            for k in range(n):
                uk = (utils if k == p else
                      action_utilities(sub, u, model.grid.values[k], model,
                                       config))
                lik = softmax_probs(uk, model.rationality_beta)[j_star]
                weights.append(br["bel"][k] * lik)
            new_bel = normalize(weights)
            hx2 = br["hx"] + br["hv"] * dt + 0.5 * grid[j_star] * dt * dt
            hv2 = max(0.0, br["hv"] + grid[j_star] * dt)
            d_new = jsd(bel0, new_bel)
            r_safe = 0.0
            if same_lane:
                g = max((rx2 - hx2) * sgn_h, MIN_MODEL_GAP)
                q = planner.d_safe / g
                r_safe = -q * q
            inc = d_new - br["d_prev"]
            increments.append(inc)
            stage += bel0[p] * (inc + planner.safety_weight * r_safe)
            br["hx"], br["hv"], br["bel"], br["d_prev"] = hx2, hv2, new_bel, d_new
        stage -= planner.effort_weight * ar * ar
        rx, rv = rx2, rv2
        stage_values.append(stage)
        jsd_increments.append(tuple(increments))
    terminal = tuple(br["d_prev"] for br in branches)
    expected_terminal = 0.0
    for p in range(n):
        expected_terminal += bel0[p] * terminal[p]
    total = 0.0
    for s in stage_values:
        total += s
    return ProbeRollout(stage_values=tuple(stage_values), value=total,
                        expected_terminal_jsd=expected_terminal,
                        jsd_increments=tuple(jsd_increments),
                        terminal_divergences=terminal)
