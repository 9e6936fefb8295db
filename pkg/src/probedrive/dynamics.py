"""Discrete-time propagation of the joint system and the IDM controller.

The simulator integrates with explicit Euler at `dt`: position uses the
pre-update velocity, velocity saturates at zero. The intelligent driver
model (IDM) generates the ground-truth human and background accelerations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .model import Control, JointState, VehicleState

B_HARD = 4.0  # hard braking clamp applied to all IDM outputs [m/s^2]


class NonPositiveGap(ValueError):
    """Follower at or ahead of its leader: a collision state."""


@dataclass(frozen=True)
class IdmParams:
    u_max: float  # maximum acceleration [m/s^2]
    b_pref: float  # preferred braking [m/s^2]
    v_des: float  # desired velocity [m/s]
    tau_gap: float  # desired time gap [s]
    d_min: float  # jam distance [m]

    def __post_init__(self):
        for name in ("u_max", "b_pref", "v_des", "tau_gap", "d_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def _default_accel_grid() -> Tuple[float, ...]:
    # 11 accelerations uniformly spanning [-3, +2] m/s^2; contains 0.
    return tuple(-3.0 + 0.5 * k for k in range(11))


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float = 0.1  # simulation step [s]
    robot_accel_bounds: Tuple[float, float] = (-3.0, 2.0)  # [m/s^2]
    robot_accel_grid: Tuple[float, ...] = ()
    human_accel_grid: Tuple[float, ...] = ()  # discretized human action set
    robot_v_max: float = 25.0  # admissible robot velocity ceiling [m/s]

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.robot_accel_grid:
            object.__setattr__(self, "robot_accel_grid", _default_accel_grid())
        if not self.human_accel_grid:
            object.__setattr__(self, "human_accel_grid", _default_accel_grid())
        for grid in (self.robot_accel_grid, self.human_accel_grid):
            if any(b - a <= 0 for a, b in zip(grid, grid[1:])):
                raise ValueError("accel grids must be strictly increasing")
            if 0.0 not in grid:
                raise ValueError("accel grids must contain 0")


def _advance(vehicle: VehicleState, accel: float, dt: float,
             new_lane: Optional[int] = None) -> VehicleState:
    x = vehicle.x + vehicle.v * dt
    v = max(0.0, vehicle.v + accel * dt)
    lane = vehicle.lane if new_lane is None else new_lane
    return VehicleState(x=x, v=v, lane=lane)


def joint_step(state: JointState, robot_u: Control, human_u: Control,
               config: DynamicsConfig,
               background_u: Sequence[float] = ()) -> JointState:
    """One explicit-Euler step of every vehicle.

    Background accelerations are computed by the caller (their own IDM) and
    passed in; missing entries coast at zero acceleration. Lane changes are
    instantaneous lane-index swaps (mass-point model).
    """
    dt = config.dt
    robot = _advance(state.robot, robot_u.accel, dt, robot_u.lane_change)
    human = _advance(state.human, human_u.accel, dt, human_u.lane_change)
    bg = tuple(
        _advance(veh, background_u[i] if i < len(background_u) else 0.0, dt)
        for i, veh in enumerate(state.background)
    )
    return JointState(robot=robot, human=human, background=bg, time=state.time + dt)


def desired_gap(v: float, v_lead: float, params: IdmParams) -> float:
    """IDM desired gap d_des for follower velocity v and leader velocity v_lead.

    Uses the standard closing-speed coupling: approaching a slower leader
    enlarges the desired gap, so followers brake early instead of
    tailgating and slamming.
    """
    return (params.d_min + params.tau_gap * v
            + v * (v - v_lead) / (2.0 * math.sqrt(params.u_max * params.b_pref)))


def idm_accel(follower: VehicleState, leader: Optional[VehicleState],
              params: IdmParams) -> float:
    """IDM acceleration for `follower` behind `leader` (None = free road).

    Result is clamped to [-B_HARD, u_max]. The desired-gap formula is applied
    literally, including its velocity-difference term, so d_des may come out
    negative for a much faster leader; the squared ratio keeps the
    interaction term nonnegative.
    """
    v = follower.v
    free = (v / params.v_des) ** 4
    if leader is None:
        accel = params.u_max * (1.0 - free)
    else:
        gap = leader.x - follower.x
        if gap <= 0:
            raise NonPositiveGap(f"gap {gap} <= 0 between follower and leader")
        d_des = desired_gap(v, leader.v, params)
        accel = params.u_max * (1.0 - free - (d_des / gap) ** 2)
    return max(-B_HARD, min(params.u_max, accel))
