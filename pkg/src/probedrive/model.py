"""Shared domain types: vehicle states, controls, hypothesis grids, beliefs.

Everything here is an immutable value object, so instances can be shared
read-only across parallel planner branches without copying.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

BELIEF_FLOOR = 1e-12  # positivity floor applied after every normalization
BELIEF_SUM_TOL = 1e-9


class AllZeroWeights(ValueError):
    """No positive mass in a weight vector (likelihood underflow)."""


class IndexOutOfRange(IndexError):
    """Hypothesis index outside 1..len(grid)."""


class GridKind(Enum):
    DESIRED_VELOCITY = "desired-velocity"
    DESIRED_HEADWAY = "desired-headway"


@dataclass(frozen=True)
class VehicleState:
    x: float  # longitudinal position [m]
    v: float  # velocity [m/s], >= 0
    lane: int = 0  # 0 = inner/left, 1 = outer/right

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"velocity must be nonnegative, got {self.v}")
        if self.lane not in (0, 1):
            raise ValueError(f"lane must be 0 or 1, got {self.lane}")


@dataclass(frozen=True)
class Control:
    accel: float = 0.0  # longitudinal acceleration [m/s^2]
    lane_change: Optional[int] = None  # target lane index, if a change is commanded


@dataclass(frozen=True)
class JointState:
    robot: VehicleState
    human: VehicleState
    background: Tuple[VehicleState, ...] = ()
    time: float = 0.0

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        if not isinstance(self.background, tuple):
            object.__setattr__(self, "background", tuple(self.background))


@dataclass(frozen=True)
class HypothesisGrid:
    """Uniformly spaced grid of candidate parameter values.

    The canonical scenario grids have 30 points (see `velocity_grid` and
    `headway_grid`); smaller grids are permitted for analysis and planner
    oracle tests.
    """

    kind: GridKind
    values: Tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError("grid needs at least 2 values")
        steps = [b - a for a, b in zip(vals, vals[1:])]
        if any(s <= 0 for s in steps):
            raise ValueError("grid values must be strictly increasing")
        tol = 1e-9 * max(1.0, abs(steps[0]))
        if any(abs(s - steps[0]) > tol for s in steps):
            raise ValueError("grid values must be uniformly spaced")

    def __len__(self):
        return len(self.values)

    @property
    def step(self) -> float:
        return self.values[1] - self.values[0]

    def value(self, index: int) -> float:
        """Physical value for a 1-based hypothesis index."""
        return grid_value(self, index)


@dataclass(frozen=True)
class Belief:
    """Normalized probability vector aligned with a hypothesis grid."""

    probabilities: Tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if not probs:
            raise ValueError("belief must be non-empty")
        if min(probs) <= 0:
            raise ValueError("belief entries must be strictly positive")
        if abs(sum(probs) - 1.0) > BELIEF_SUM_TOL:
            raise ValueError(f"belief must sum to 1 within {BELIEF_SUM_TOL}")

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, i: int) -> float:
        return self.probabilities[i]

    @classmethod
    def uniform(cls, n: int) -> "Belief":
        return cls(tuple(1.0 / n for _ in range(n)))

    def argmax(self) -> int:
        """0-based index of the largest entry; ties go to the lower index."""
        best, best_p = 0, self.probabilities[0]
        for i, p in enumerate(self.probabilities):
            if p > best_p:
                best, best_p = i, p
        return best


def normalize(raw_weights: Sequence[float], floor: float = BELIEF_FLOOR) -> Belief:
    """Turn nonnegative weights into a floored, normalized belief.

    Entries are first normalized proportionally, then any entry below
    `floor` is raised to `floor` and the vector is renormalized. The floor
    keeps every posterior strictly positive so divergences stay finite.
    """
    weights = [float(w) for w in raw_weights]
    total = 0.0
    for w in weights:
        if w > 0:
            total += w
    if total <= 0:
        raise AllZeroWeights("all weights are <= 0")
    probs = [w / total if w > 0 else 0.0 for w in weights]
    floored = [p if p >= floor else floor for p in probs]
    s = 0.0
    for p in floored:
        s += p
    return Belief(tuple(p / s for p in floored))


def grid_value(grid: HypothesisGrid, index: int) -> float:
    """Physical value for a 1-based hypothesis index."""
    if not 1 <= index <= len(grid.values):
        raise IndexOutOfRange(f"index {index} outside 1..{len(grid.values)}")
    return grid.values[index - 1]


# Scenario grids. The endpoints are fixed by the two published index->value
# anchors for each grid (velocity: 16 -> 19.86 m/s, 19 -> 23.56 m/s;
# headway: 4 -> 48.27 m, 9 -> 108.62 m), extrapolated uniformly to 30 points.
VELOCITY_GRID_BASE = 1.36  # [m/s]
VELOCITY_GRID_STEP = 37.0 / 30.0  # = 1.2333... [m/s]
HEADWAY_GRID_BASE = 12.06  # [m]
HEADWAY_GRID_STEP = 12.07  # [m]
GRID_SIZE = 30


def velocity_grid() -> HypothesisGrid:
    """30-point desired-velocity grid used by the lane-advise scenario."""
    vals = tuple(VELOCITY_GRID_BASE + k * VELOCITY_GRID_STEP for k in range(GRID_SIZE))
    return HypothesisGrid(GridKind.DESIRED_VELOCITY, vals)


def headway_grid() -> HypothesisGrid:
    """30-point desired-headway grid used by the gap-create scenario."""
    vals = tuple(HEADWAY_GRID_BASE + k * HEADWAY_GRID_STEP for k in range(GRID_SIZE))
    return HypothesisGrid(GridKind.DESIRED_HEADWAY, vals)
