"""Boltzmann observation model and discrete Bayesian belief recursion.

The estimator's model class is deliberately simple quadratic features, not
the IDM that actually drives the simulated human: inference runs under
model mismatch. Action utilities are evaluated at a short-lookahead
successor state (`lookahead` seconds of exact double-integrator kinematics),
which is what couples an observed acceleration to both the velocity and the
headway features.

All sums run in ascending index order with scalar math so results are
bit-reproducible and match the compiled planner kernels exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .dynamics import DynamicsConfig, NonPositiveGap
from .model import (
    Belief,
    Control,
    GridKind,
    HypothesisGrid,
    JointState,
    grid_value,
    normalize,
)

SAFETY_PENALTY_CAP = 10.0
MIN_MODEL_GAP = 0.5  # [m]; lookahead states are clamped away from overlap


class EstimateMode(Enum):
    MAP = "map"
    MEAN = "mean"


@dataclass(frozen=True)
class HumanUtilityModel:
    """Hypothesis grid plus the feature weights of the assumed human utility."""

    grid: HypothesisGrid
    w_speed: float = 1.0
    w_headway: float = 120.0  # weight on the relative headway error
    w_safety: float = 1.0
    rationality_beta: float = 1.0  # inverse temperature
    v_ref: float = 20.0  # probing velocity for headway grids [m/s]
    lookahead: float = 1.0  # model lookahead horizon [s]
    pen_distance: float = 2.0  # distance scale of the safety penalty [m]

    def __post_init__(self):
        if self.rationality_beta <= 0:
            raise ValueError("rationality_beta must be positive")
        for name in ("w_speed", "w_headway", "w_safety"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def lookahead_state(x: float, v: float, accel: float, dt: float) -> Tuple[float, float]:
    """Exact double-integrator step used by the human model (not the simulator)."""
    x2 = x + v * dt + 0.5 * accel * dt * dt
    v2 = max(0.0, v + accel * dt)
    return x2, v2


def safety_penalty(gap: Optional[float], pen_distance: float) -> float:
    """(d/gap)^2 capped at SAFETY_PENALTY_CAP; zero on a free road."""
    if gap is None:
        return 0.0
    g = gap if gap > MIN_MODEL_GAP else MIN_MODEL_GAP
    q = pen_distance / g
    pen = q * q
    return pen if pen < SAFETY_PENALTY_CAP else SAFETY_PENALTY_CAP


def feature_utility(model: HumanUtilityModel, value: float, v_h: float,
                    gap: Optional[float]) -> float:
    """Utility of a (velocity, gap) pair under one hypothesis value.

    Velocity grids score the squared error to the desired velocity plus a
    safety penalty on the gap. Headway grids score the squared *relative*
    error of the gap to the desired headway plus velocity regulation around
    the probing reference; the relative scaling makes short headways sharply
    distinguishable while long ones stay diffuse.
    """
    if model.grid.kind is GridKind.DESIRED_VELOCITY:
        dv = v_h - value
        u = -model.w_speed * dv * dv
        u -= model.w_safety * safety_penalty(gap, model.pen_distance)
        return u
    dv = v_h - model.v_ref
    u = -model.w_speed * dv * dv
    if gap is not None:
        err = (gap - value) / value
        u -= model.w_headway * err * err
    return u


def _leader_gap(state: JointState) -> Optional[float]:
    """Gap from the human to the robot when the robot leads in the same lane.

    A strictly-behind robot is not a leader (None); exact overlap is a
    collision state.
    """
    if state.robot.lane != state.human.lane:
        return None
    gap = state.robot.x - state.human.x
    if gap == 0.0:
        raise NonPositiveGap("human and robot overlap")
    if gap < 0:
        return None
    return gap


def human_utility(state: JointState, model: HumanUtilityModel, phi_index: int) -> float:
    """Feature utility of `state` under the 1-based hypothesis `phi_index`."""
    value = grid_value(model.grid, phi_index)
    return feature_utility(model, value, state.human.v, _leader_gap(state))


def action_utilities(state: JointState, robot_u: Control, value: float,
                     model: HumanUtilityModel, config: DynamicsConfig,
                     dt: Optional[float] = None) -> List[float]:
    """Utility of each candidate human acceleration at the lookahead successor.

    `dt` overrides the model lookahead; planners pass their own step so the
    in-plan predictions and the plan's state rollout share one time base.
    """
    if dt is None:
        dt = model.lookahead
    rx, _ = lookahead_state(state.robot.x, state.robot.v, robot_u.accel, dt)
    same_lane = state.robot.lane == state.human.lane
    out = []
    for a in config.human_accel_grid:
        hx, hv = lookahead_state(state.human.x, state.human.v, a, dt)
        gap = (rx - hx) if same_lane else None
        if gap is not None and gap < MIN_MODEL_GAP:
            gap = MIN_MODEL_GAP
        out.append(feature_utility(model, value, hv, gap))
    return out


SOFTMAX_FLOOR = 1e-12  # keeps every action probability strictly inside (0, 1)


def softmax_probs(utilities: Sequence[float], beta: float) -> List[float]:
    """Boltzmann distribution over utilities, computed with max-subtraction.

    Exponentials are floored at SOFTMAX_FLOOR so extreme utility spreads
    cannot underflow an action to probability 0 (or round the best action
    to exactly 1).
    """
    m = utilities[0]
    for u in utilities:
        if u > m:
            m = u
    exps = []
    for u in utilities:
        e = math.exp(beta * (u - m))
        if e < SOFTMAX_FLOOR:
            e = SOFTMAX_FLOOR
        exps.append(e)
    denom = 0.0
    for e in exps:
        denom += e
    return [e / denom for e in exps]


def snap_to_grid(accel: float, grid: Sequence[float]) -> float:
    """Nearest grid acceleration; ties resolve toward the smaller magnitude."""
    best = grid[0]
    best_key = (abs(accel - grid[0]), abs(grid[0]), grid[0])
    for g in grid[1:]:
        key = (abs(accel - g), abs(g), g)
        if key < best_key:
            best, best_key = g, key
    return best


def boltzmann_likelihood(state: JointState, robot_u: Control, human_u: Control,
                         phi_index: int, model: HumanUtilityModel,
                         config: DynamicsConfig) -> float:
    """P(human action | state, robot action, hypothesis); strictly in (0, 1)."""
    grid = config.human_accel_grid
    try:
        j = grid.index(human_u.accel)
    except ValueError:
        raise ValueError(f"human accel {human_u.accel} not on the action grid")
    value = grid_value(model.grid, phi_index)
    utils = action_utilities(state, robot_u, value, model, config)
    return softmax_probs(utils, model.rationality_beta)[j]


def belief_update(belief: Belief, state: JointState, robot_u: Control,
                  observed_human_u: Control, model: HumanUtilityModel,
                  config: DynamicsConfig) -> Belief:
    """One Bayesian step: posterior ∝ prior × Boltzmann likelihood.

    The observed acceleration is snapped to the nearest grid action first;
    the likelihood is only defined on the discretized action set.
    """
    grid = config.human_accel_grid
    a_obs = snap_to_grid(observed_human_u.accel, grid)
    j = grid.index(a_obs)
    beta = model.rationality_beta
    weights = []
    for k in range(len(model.grid)):
        utils = action_utilities(state, robot_u, model.grid.values[k], model, config)
        weights.append(belief[k] * softmax_probs(utils, beta)[j])
    return normalize(weights)


def estimate_phi(belief: Belief, grid: HypothesisGrid,
                 mode: EstimateMode = EstimateMode.MAP) -> float:
    """Point estimate from a belief: MAP grid value or belief-weighted mean."""
    if len(belief) != len(grid):
        raise ValueError("belief and grid lengths differ")
    if mode is EstimateMode.MAP:
        return grid.values[belief.argmax()]
    total = 0.0
    for p, v in zip(belief.probabilities, grid.values):
        total += p * v
    return total
