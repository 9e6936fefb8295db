"""Episode orchestration for the two driving scenarios.

Scenario 1 (lane-advise): the robot probes the human's desired velocity,
then, if the estimate clears a cutoff, blocks the human near the widest
inner-lane gap so it changes lanes.

Scenario 2 (gap-create): the robot probes the human's desired headway in a
lane that is about to end, merges into the occupied inner lane and makes
room for the human: if the probing already carved out enough space it
simply parks as the slot's front edge, otherwise it merges ahead of the
human's blocker and tows it forward until the slot reaches the estimate.

Active mode alternates 5 s of passive observation with 5 s of probing until
the probing-termination criterion fires; passive mode only observes (and,
in scenario 2, sizes its gap from whatever the passive belief converged to,
which is what makes it the conservative baseline).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

from .dynamics import (
    DynamicsConfig,
    IdmParams,
    NonPositiveGap,
    desired_gap,
    idm_accel,
    joint_step,
)
from .inference import (
    EstimateMode,
    HumanUtilityModel,
    belief_update,
    estimate_phi,
)
from .model import (
    Belief,
    Control,
    JointState,
    VehicleState,
    headway_grid,
    velocity_grid,
)
from .planning import (
    PlanObjective,
    PlannerConfig,
    TrackingObjective,
    influence_plan,
    probe_plan,
)

LANE_INNER = 0
LANE_OUTER = 1


class ScenarioKind(Enum):
    LANE_ADVISE = "lane-advise"
    GAP_CREATE = "gap-create"


class Mode(Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


class Phase(Enum):
    OBSERVE = "observe"
    PROBE = "probe"
    INFLUENCE = "influence"
    DONE = "done"


class NoBackgroundVehicles(ValueError):
    pass


class CutoffNotMet(RuntimeError):
    """Scenario-1 influence is conditional on the estimate clearing the cutoff."""


class CollisionDetected(RuntimeError):
    def __init__(self, time: float, log: "RunLog"):
        super().__init__(f"collision at t={time:.1f} s")
        self.time = time
        self.log = log


@dataclass(frozen=True)
class BackgroundSpec:
    x: float  # initial position [m], relative to the road origin
    v: float  # initial velocity [m/s]
    idm: IdmParams


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    mode: Mode
    duration: float
    rng_seed: int = 0
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    model: HumanUtilityModel = None  # set by the factories
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    human_idm: IdmParams = None
    robot_initial: Tuple[float, float] = (0.0, 20.0)  # (x, v)
    human_initial: Tuple[float, float] = (-100.0, 20.0)
    background: Tuple[BackgroundSpec, ...] = ()
    lane_end: Optional[float] = None  # outer lane terminates here (scenario 2)
    cutoff_velocity: float = 23.0  # scenario 1 only [m/s]
    # probing schedule
    phase_block: float = 5.0  # [s] observe/probe alternation block
    replan_period: float = 1.0  # [s] receding-horizon hold
    probe_jsd_threshold: float = 5e-3  # [nats] termination criterion
    probe_cap: float = 70.0  # [s] hard stop for information gathering
    probe_min: float = 20.0  # [s] earliest time the criterion may fire
    # influence shaping
    block_margin: float = 5.0  # [m/s] below the estimate while blocking
    align_tol: float = 10.0  # [m] alignment completion tolerance
    pos_weight: float = 0.01  # quadratic position-tracking weight
    vel_weight: float = 1.0  # quadratic velocity-tracking weight
    slot_slack: float = 2.0  # [m] extra position-target slack
    block_window: float = 4.0  # [s] sustained blockage before a lane change
    blocked_accel: float = -0.2  # [m/s^2] braking level that counts as blocked
    align_reach: float = 60.0  # [m] how far ahead an alignment target may sit
    influence_effort: float = 0.1  # comfort weight used by the influence MPC
    influence_v_min: float = 14.0  # [m/s] floor for planned influence velocities
    influence_accel_grid: Tuple[float, ...] = (-3.0, -1.0, -0.5, 0.0, 0.5, 1.0)
    pull_speed: float = 6.0  # [m/s] above the blocker's pace while pulling
    damp_weight: float = 0.4  # velocity damping for position tracking
    # logging
    snapshot_period: float = 10.0  # [s]
    log_full_beliefs: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.human_initial[0] >= self.robot_initial[0]:
            raise ValueError("human must start behind the robot")


@dataclass(frozen=True)
class StepRecord:
    t: float
    phase: Phase
    robot: VehicleState
    human: VehicleState
    background: Tuple[VehicleState, ...]
    robot_a: float
    human_a: float
    background_a: Tuple[float, ...]


@dataclass
class RunLog:
    config: ScenarioConfig
    records: List[StepRecord] = field(default_factory=list)
    snapshots: List[Tuple[float, Tuple[float, ...]]] = field(default_factory=list)
    full_beliefs: List[Tuple[float, Tuple[float, ...]]] = field(default_factory=list)
    phase_boundaries: List[Tuple[float, Phase]] = field(default_factory=list)
    objective_events: List[Tuple[float, str]] = field(default_factory=list)
    termination_time: Optional[float] = None
    phi_map_termination: Optional[float] = None
    phi_mean_termination: Optional[float] = None
    phi_map_final: Optional[float] = None
    phi_mean_final: Optional[float] = None
    influence_start: Optional[float] = None
    influence_complete: Optional[float] = None
    human_merge_time: Optional[float] = None
    robot_merge_time: Optional[float] = None
    cutoff_not_met: bool = False
    collision_time: Optional[float] = None
    final_belief: Optional[Tuple[float, ...]] = None


class VehicleClass(Enum):
    ROBOT = "robot"
    HUMAN = "human"
    BACKGROUND = "background"


@dataclass(frozen=True)
class GapInfo:
    index: int  # 0-based index into the ascending-ordered gap list
    length: float  # [m]; inf for the trailing semi-infinite gap
    midpoint: float  # [m]
    rear_bg_index: Optional[int]  # original indices into state.background
    front_bg_index: int


def widest_gap(state: JointState) -> GapInfo:
    """Largest inter-vehicle gap in the inner lane.

    With a single background vehicle the trailing semi-infinite gap behind
    it is reported (length inf, midpoint 30 m behind by convention). Ties
    resolve to the gap whose midpoint is nearest ahead of the human.
    """
    inner = [(veh.x, i) for i, veh in enumerate(state.background)
             if veh.lane == LANE_INNER]
    if not inner:
        raise NoBackgroundVehicles("no background vehicles in the inner lane")
    inner.sort()
    if len(inner) == 1:
        x, idx = inner[0]
        return GapInfo(index=0, length=math.inf, midpoint=x - 30.0,
                       rear_bg_index=None, front_bg_index=idx)
    gaps = []
    for g, (rear, front) in enumerate(zip(inner, inner[1:])):
        length = front[0] - rear[0]
        mid = 0.5 * (rear[0] + front[0])
        gaps.append(GapInfo(index=g, length=length, midpoint=mid,
                            rear_bg_index=rear[1], front_bg_index=front[1]))
    best = max(g.length for g in gaps)
    tied = [g for g in gaps if g.length > best - 1e-9]
    hx = state.human.x
    tied.sort(key=lambda g: (0 if g.midpoint > hx else 1, abs(g.midpoint - hx)))
    return tied[0]


def _nearest_ahead(x: float, candidates: Sequence[VehicleState]) -> Optional[VehicleState]:
    best = None
    for veh in candidates:
        if veh.x > x and (best is None or veh.x < best.x):
            best = veh
    return best


def _nearest_behind(x: float, candidates: Sequence[VehicleState]) -> Optional[VehicleState]:
    best = None
    for veh in candidates:
        if veh.x < x and (best is None or veh.x > best.x):
            best = veh
    return best


def human_lane_change_check(state: JointState, idm: IdmParams,
                            follower_idm: Optional[IdmParams] = None,
                            lane_end: Optional[float] = None,
                            blocked_accel: float = -0.2) -> Optional[int]:
    """Gap-acceptance rule for the human's move to the inner lane.

    Returns the inner lane index iff the human is being blocked in its
    current lane (IDM acceleration at or below `blocked_accel`) and the
    inner-lane slot is acceptable: gap to the new leader at least the IDM
    desired gap, and the new follower's resulting deceleration no harder
    than its preferred braking. Returns None otherwise.
    """
    human = state.human
    if human.lane != LANE_OUTER:
        return None
    if follower_idm is None:
        follower_idm = idm
    current = _lane_vehicles(state, LANE_OUTER, exclude_human=True)
    if lane_end is not None:
        current = current + [VehicleState(x=lane_end, v=0.0, lane=LANE_OUTER)]
    leader = _nearest_ahead(human.x, current)
    accel = idm_accel(human, leader, idm)
    if accel > blocked_accel:
        return None
    target = _lane_vehicles(state, LANE_INNER, exclude_human=True)
    new_leader = _nearest_ahead(human.x, target)
    if new_leader is not None:
        gap = new_leader.x - human.x
        if gap < desired_gap(human.v, new_leader.v, idm):
            return None
    new_follower = _nearest_behind(human.x, target)
    if new_follower is not None:
        decel = idm_accel(new_follower, human, follower_idm)
        if decel < -follower_idm.b_pref:
            return None
    return LANE_INNER


def _lane_vehicles(state: JointState, lane: int,
                   exclude_human: bool = False,
                   exclude_robot: bool = False) -> List[VehicleState]:
    out = []
    if not exclude_robot and state.robot.lane == lane:
        out.append(state.robot)
    if not exclude_human and state.human.lane == lane:
        out.append(state.human)
    out.extend(v for v in state.background if v.lane == lane)
    return out


def robot_merge_safe(state: JointState, proxy_idm: IdmParams) -> bool:
    """Gap-acceptance for the robot's own move to the inner lane."""
    robot = state.robot
    target = _lane_vehicles(state, LANE_INNER, exclude_robot=True)
    leader = _nearest_ahead(robot.x, target)
    if leader is not None:
        gap = leader.x - robot.x
        if gap < desired_gap(robot.v, leader.v, proxy_idm):
            return False
    follower = _nearest_behind(robot.x, target)
    if follower is not None:
        decel = idm_accel(follower, robot, proxy_idm)
        if decel < -proxy_idm.b_pref:
            return False
    return True


def _reachable_widest_gap(state: JointState, config: ScenarioConfig) -> GapInfo:
    """Widest inner-lane gap whose midpoint the robot can actually attain.

    Background traffic may asymptotically outrun the capped robot, so gaps
    receding far ahead are excluded; among gaps within reach (or behind),
    near-widest candidates are resolved toward the robot's position.
    """
    inner = sorted((veh.x, i) for i, veh in enumerate(state.background)
                   if veh.lane == LANE_INNER)
    if not inner:
        raise NoBackgroundVehicles("no background vehicles in the inner lane")
    # If the whole field has pulled away, the trailing open road is the
    # widest gap there is; the robot is aligned with it by construction.
    if inner[0][0] > state.robot.x + config.align_reach:
        return GapInfo(index=-1, length=math.inf, midpoint=state.robot.x,
                       rear_bg_index=None, front_bg_index=inner[0][1])
    if len(inner) == 1:
        return widest_gap(state)
    gaps = []
    for g, (rear, front) in enumerate(zip(inner, inner[1:])):
        gaps.append(GapInfo(index=g, length=front[0] - rear[0],
                            midpoint=0.5 * (rear[0] + front[0]),
                            rear_bg_index=rear[1], front_bg_index=front[1]))
    reachable = [g for g in gaps
                 if g.midpoint <= state.robot.x + config.align_reach]
    pool = reachable if reachable else gaps
    best = max(g.length for g in pool)
    tied = [g for g in pool if g.length >= 0.8 * best]
    tied.sort(key=lambda g: (abs(g.midpoint - state.robot.x), -g.length))
    return tied[0]


@dataclass
class AtomicObjective:
    name: str
    build: Callable[[JointState], TrackingObjective]
    done: Callable[[JointState], bool]


def influence_objectives(kind: ScenarioKind, phi_hat: float, state: JointState,
                         config: ScenarioConfig) -> List[AtomicObjective]:
    """Ordered atomic objectives realizing the scenario's influence.

    Raises CutoffNotMet for scenario 1 when the estimate is below the
    cutoff velocity (no influence is initiated).
    """
    if kind is ScenarioKind.LANE_ADVISE:
        if phi_hat < config.cutoff_velocity:
            raise CutoffNotMet(
                f"estimate {phi_hat:.2f} m/s below cutoff "
                f"{config.cutoff_velocity:.2f} m/s")

        def build_align(s: JointState) -> TrackingObjective:
            info = _reachable_widest_gap(s, config)
            front = s.background[info.front_bg_index]
            return TrackingObjective(kind="position", target=info.midpoint,
                                     rate=front.v, weight=config.pos_weight,
                                     damp_weight=config.damp_weight)

        def done_align(s: JointState) -> bool:
            info = _reachable_widest_gap(s, config)
            return abs(s.robot.x - info.midpoint) <= config.align_tol

        def build_block(s: JointState) -> TrackingObjective:
            return TrackingObjective(kind="velocity",
                                     target=phi_hat - config.block_margin,
                                     rate=0.0, weight=config.vel_weight)

        def done_block(s: JointState) -> bool:
            return s.human.lane == LANE_INNER

        return [AtomicObjective("align-with-gap", build_align, done_align),
                AtomicObjective("block-and-slow", build_block, done_block)]

    # gap-create: the human's merge slot is bounded ahead by its blocker,
    # the nearest inner vehicle in front of it. The robot merges into the
    # hole ahead of the blocker and pulls it forward (the blocker restores
    # its headway by accelerating after the robot), growing the slot to
    # phi_hat + d_min.
    inner = sorted((v.x, i) for i, v in enumerate(state.background)
                   if v.lane == LANE_INNER)
    if not inner:
        raise NoBackgroundVehicles("gap-create needs inner-lane traffic")
    blocker_idx = None
    for x, i in inner:
        if x > state.human.x:
            blocker_idx = i
            break
    if blocker_idx is None:
        blocker_idx = inner[-1][1]
    d_min = config.human_idm.d_min
    slot_target = phi_hat + d_min

    def _room_to_park(s: JointState) -> bool:
        blocker = s.background[blocker_idx]
        return (blocker.x - s.human.x
                >= slot_target + 2.0 * config.slot_slack + 10.0)

    def _slot_front_gap(s: JointState) -> float:
        candidates = [v for v in s.background if v.lane == LANE_INNER]
        if s.robot.lane == LANE_INNER:
            candidates.append(s.robot)
        front = _nearest_ahead(s.human.x, candidates)
        if front is None:
            return math.inf
        return front.x - s.human.x

    def build_position(s: JointState) -> TrackingObjective:
        blocker = s.background[blocker_idx]
        if _room_to_park(s):
            # the probe already carved out the room: sit down as the slot's
            # front edge, clear of the blocker
            park = s.human.x + slot_target + config.slot_slack
            cap = blocker.x - 15.0
            if park <= cap:
                return TrackingObjective(kind="position", target=park,
                                         rate=s.human.v,
                                         weight=config.pos_weight,
                                         damp_weight=config.damp_weight)
            return TrackingObjective(kind="position", target=cap,
                                     rate=blocker.v, weight=config.pos_weight,
                                     damp_weight=config.damp_weight)
        # not enough room: merge ahead of the blocker and tow it forward
        ahead = _nearest_ahead(blocker.x,
                               [v for v in s.background
                                if v.lane == LANE_INNER])
        if ahead is None:
            target = blocker.x + 45.0
        else:
            target = 0.5 * (blocker.x + ahead.x)
        return TrackingObjective(kind="position", target=target,
                                 rate=blocker.v, weight=config.pos_weight,
                                 damp_weight=config.damp_weight)

    def done_merge(s: JointState) -> bool:
        return s.robot.lane == LANE_INNER

    def build_open(s: JointState) -> TrackingObjective:
        if _room_to_park(s):
            return build_position(s)
        blocker = s.background[blocker_idx]
        # tow as hard as the remaining slot deficit warrants
        deficit = slot_target - (blocker.x - s.human.x)
        boost = min(config.pull_speed, max(0.0, 0.1 * deficit))
        return TrackingObjective(kind="velocity",
                                 target=blocker.v + boost,
                                 rate=0.0, weight=config.vel_weight)

    def done_open(s: JointState) -> bool:
        return (_slot_front_gap(s) >= slot_target
                or s.human.lane == LANE_INNER)

    def build_await(s: JointState) -> TrackingObjective:
        if _room_to_park(s):
            return build_position(s)
        blocker = s.background[blocker_idx]
        return TrackingObjective(kind="velocity", target=blocker.v,
                                 rate=0.0, weight=config.vel_weight)

    def done_await(s: JointState) -> bool:
        return s.human.lane == LANE_INNER

    return [AtomicObjective("merge-robot", build_position, done_merge),
            AtomicObjective("open-gap", build_open, done_open),
            AtomicObjective("await-human-merge", build_await, done_await)]


def metric_velocity_deviation(log: RunLog, vehicle_class: VehicleClass) -> List[float]:
    """Per-step class-averaged v(t) - v(0)."""
    recs = log.records
    if not recs:
        return []
    if vehicle_class is VehicleClass.ROBOT:
        v0 = recs[0].robot.v
        return [r.robot.v - v0 for r in recs]
    if vehicle_class is VehicleClass.HUMAN:
        v0 = recs[0].human.v
        return [r.human.v - v0 for r in recs]
    n = len(recs[0].background)
    if n == 0:
        return [0.0 for _ in recs]
    v0s = [veh.v for veh in recs[0].background]
    out = []
    for r in recs:
        dev = 0.0
        for i, veh in enumerate(r.background):
            dev += veh.v - v0s[i]
        out.append(dev / n)
    return out


def metric_cumulative_abs_control(log: RunLog, vehicle_class: VehicleClass) -> float:
    """Integral of |acceleration| over the episode, class-averaged [m/s]."""
    dt = log.config.dynamics.dt
    recs = log.records[:-1] if len(log.records) > 1 else log.records
    if vehicle_class is VehicleClass.ROBOT:
        return sum(abs(r.robot_a) for r in recs) * dt
    if vehicle_class is VehicleClass.HUMAN:
        return sum(abs(r.human_a) for r in recs) * dt
    if not recs or not recs[0].background_a:
        return 0.0
    n = len(recs[0].background_a)
    total = 0.0
    for r in recs:
        for a in r.background_a:
            total += abs(a)
    return total * dt / n


def cumulative_abs_control_series(log: RunLog, vehicle_class: VehicleClass) -> List[float]:
    """Running integral of |a|, class-averaged; used by the renderer."""
    dt = log.config.dynamics.dt
    out = []
    acc = 0.0
    for r in log.records[:-1] if len(log.records) > 1 else log.records:
        if vehicle_class is VehicleClass.ROBOT:
            acc += abs(r.robot_a) * dt
        elif vehicle_class is VehicleClass.HUMAN:
            acc += abs(r.human_a) * dt
        else:
            n = len(r.background_a)
            if n:
                acc += sum(abs(a) for a in r.background_a) * dt / n
        out.append(acc)
    return out


class _Episode:
    """Mutable state of one scenario run."""

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.dyn = config.dynamics
        self.dt = self.dyn.dt
        rx, rv = config.robot_initial
        hx, hv = config.human_initial
        self.state = JointState(
            robot=VehicleState(x=rx, v=rv, lane=LANE_OUTER),
            human=VehicleState(x=hx, v=hv, lane=LANE_OUTER),
            background=tuple(VehicleState(x=b.x, v=b.v, lane=LANE_INNER)
                             for b in config.background),
            time=0.0)
        self.belief = Belief.uniform(len(config.model.grid))
        self.phase = Phase.OBSERVE
        self.log = RunLog(config=config)
        self.probing_done = False
        self.updating = True
        self.held_accel = 0.0
        self.objectives: List[AtomicObjective] = []
        self.obj_index = 0
        self.phi_hat: Optional[float] = None
        self.steps_per_block = int(round(config.phase_block / self.dt))
        self.steps_per_replan = int(round(config.replan_period / self.dt))
        self.blocked_steps = 0
        self.influence_planner = replace(config.planner,
                                         objective=PlanObjective.INFLUENCE,
                                         effort_weight=config.influence_effort,
                                         plan_accel_grid=config.influence_accel_grid,
                                         plan_v_min=config.influence_v_min,
                                         plan_v_max=None)

    # --- leaders -------------------------------------------------------
    def human_leader(self) -> Optional[VehicleState]:
        state = self.state
        candidates = _lane_vehicles(state, state.human.lane, exclude_human=True)
        if (self.cfg.lane_end is not None
                and state.human.lane == LANE_OUTER):
            candidates.append(VehicleState(x=self.cfg.lane_end, v=0.0,
                                           lane=LANE_OUTER))
        return _nearest_ahead(state.human.x, candidates)

    def background_accels(self) -> List[float]:
        state = self.state
        out = []
        for i, veh in enumerate(state.background):
            others = [v for j, v in enumerate(state.background)
                      if j != i and v.lane == veh.lane]
            if state.robot.lane == veh.lane:
                others.append(state.robot)
            if state.human.lane == veh.lane:
                others.append(state.human)
            leader = _nearest_ahead(veh.x, others)
            out.append(idm_accel(veh, leader, self.cfg.background[i].idm))
        return out

    # --- probing -------------------------------------------------------
    def _probe_plan(self):
        return probe_plan(self.state, self.belief, self.cfg.model, self.dyn,
                          self.cfg.planner)

    def _terminate_probing(self, t: float):
        self.probing_done = True
        self.log.termination_time = t
        grid = self.cfg.model.grid
        self.log.phi_map_termination = estimate_phi(self.belief, grid,
                                                    EstimateMode.MAP)
        self.log.phi_mean_termination = estimate_phi(self.belief, grid,
                                                     EstimateMode.MEAN)
        self.phi_hat = self.log.phi_map_termination
        try:
            self.objectives = influence_objectives(self.cfg.kind, self.phi_hat,
                                                   self.state, self.cfg)
        except CutoffNotMet:
            self.log.cutoff_not_met = True
            self.objectives = []
            self.phase = Phase.OBSERVE
            return
        self.obj_index = 0
        self.updating = False
        self.phase = Phase.INFLUENCE
        self.log.influence_start = t
        self.log.objective_events.append((t, self.objectives[0].name))

    def _boundary_update(self, step: int, t: float):
        """Phase scheduling at 5 s block boundaries while probing."""
        block = step // self.steps_per_block
        if t >= self.cfg.probe_cap:
            self._terminate_probing(t)
            return
        probe_block = block % 2 == 1
        if not probe_block:
            self.phase = Phase.OBSERVE
            return
        if self.cfg.mode is Mode.PASSIVE:
            # The passive baseline never probes; in the gap-create scenario
            # it sizes its gap at the cap (see _terminate_probing call above).
            self.phase = Phase.OBSERVE
            return
        plan = self._probe_plan()
        if (t >= self.cfg.probe_min
                and plan.expected_terminal_jsd < self.cfg.probe_jsd_threshold):
            self._terminate_probing(t)
            return
        self.phase = Phase.PROBE
        self.held_accel = plan.controls[0].accel if plan.controls else 0.0

    # --- influence -----------------------------------------------------
    def _current_objective(self) -> Optional[AtomicObjective]:
        if self.obj_index < len(self.objectives):
            return self.objectives[self.obj_index]
        return None

    def _replan_influence(self, t: float):
        obj = self._current_objective()
        if obj is None:
            return
        tracking = obj.build(self.state)
        plan = influence_plan(self.state, self.phi_hat, self.cfg.model,
                              self.dyn, self.influence_planner, tracking)
        self.held_accel = plan.controls[0].accel if plan.controls else 0.0

    def _advance_objectives(self, t: float):
        obj = self._current_objective()
        while obj is not None and obj.done(self.state):
            self.obj_index += 1
            obj = self._current_objective()
            if obj is None:
                self.phase = Phase.DONE
                self.held_accel = 0.0
                self.log.influence_complete = t
            else:
                self.log.objective_events.append((t, obj.name))
                self._replan_influence(t)

    # --- main loop -----------------------------------------------------
    def run(self) -> RunLog:
        cfg = self.cfg
        n_steps = int(round(cfg.duration / self.dt))
        snap_every = int(round(cfg.snapshot_period / self.dt))
        last_phase = None
        for step in range(n_steps):
            t = step * self.dt
            state = self.state

            # phase machinery
            if not self.probing_done and step % self.steps_per_block == 0:
                self._boundary_update(step, t)
            if (self.phase is Phase.PROBE
                    and step % self.steps_per_replan == 0
                    and step % self.steps_per_block != 0):
                plan = self._probe_plan()
                self.held_accel = (plan.controls[0].accel if plan.controls
                                   else 0.0)
            if self.phase is Phase.INFLUENCE:
                self._advance_objectives(t)
            if (self.phase is Phase.INFLUENCE
                    and step % self.steps_per_replan == 0):
                self._replan_influence(t)

            # robot control
            if self.phase in (Phase.OBSERVE, Phase.DONE):
                robot_accel = 0.0
            else:
                robot_accel = self.held_accel
            robot_lane_change = None
            if (self.phase is Phase.INFLUENCE
                    and self.cfg.kind is ScenarioKind.GAP_CREATE
                    and self._current_objective() is not None
                    and self._current_objective().name == "merge-robot"
                    and state.robot.lane == LANE_OUTER
                    and robot_merge_safe(state, cfg.human_idm)):
                robot_lane_change = LANE_INNER
                self.log.robot_merge_time = t

            # human behaviour: IDM plus the gap-acceptance lane change
            try:
                human_accel = idm_accel(state.human, self.human_leader(),
                                        cfg.human_idm)
                bg_accels = self.background_accels()
            except NonPositiveGap:
                self.log.collision_time = t
                raise CollisionDetected(t, self.log)
            human_lane_change = None
            if state.human.lane == LANE_OUTER:
                follower_idm = (cfg.background[0].idm if cfg.background
                                else cfg.human_idm)
                target = human_lane_change_check(
                    state, cfg.human_idm, follower_idm=follower_idm,
                    lane_end=cfg.lane_end, blocked_accel=cfg.blocked_accel)
                # require sustained blockage + acceptance before committing:
                # transient braking during an ordinary approach is not a
                # reason to leave the lane
                if target is not None:
                    self.blocked_steps += 1
                else:
                    self.blocked_steps = 0
                if (target is not None
                        and self.blocked_steps * self.dt >= cfg.block_window):
                    human_lane_change = target
                    self.log.human_merge_time = t

            # belief update from the snapped observation
            if self.updating:
                self.belief = belief_update(
                    self.belief, state, Control(accel=robot_accel),
                    Control(accel=human_accel), cfg.model, self.dyn)

            # logging
            if last_phase is not self.phase:
                self.log.phase_boundaries.append((t, self.phase))
                last_phase = self.phase
            if step % snap_every == 0:
                self.log.snapshots.append((t, self.belief.probabilities))
            if cfg.log_full_beliefs:
                self.log.full_beliefs.append((t, self.belief.probabilities))
            self.log.records.append(StepRecord(
                t=t, phase=self.phase, robot=state.robot, human=state.human,
                background=state.background, robot_a=robot_accel,
                human_a=human_accel, background_a=tuple(bg_accels)))

            # advance
            prev = self.state
            self.state = joint_step(
                state,
                Control(accel=robot_accel, lane_change=robot_lane_change),
                Control(accel=human_accel, lane_change=human_lane_change),
                self.dyn, bg_accels)
            self._check_collision(prev, t + self.dt)

        t_end = n_steps * self.dt
        self.log.records.append(StepRecord(
            t=t_end, phase=self.phase, robot=self.state.robot,
            human=self.state.human, background=self.state.background,
            robot_a=0.0, human_a=0.0,
            background_a=tuple(0.0 for _ in self.state.background)))
        if n_steps % snap_every == 0:
            self.log.snapshots.append((t_end, self.belief.probabilities))
        grid = cfg.model.grid
        self.log.phi_map_final = estimate_phi(self.belief, grid,
                                              EstimateMode.MAP)
        self.log.phi_mean_final = estimate_phi(self.belief, grid,
                                               EstimateMode.MEAN)
        self.log.final_belief = self.belief.probabilities
        return self.log

    def _collision_pairs(self, state: JointState):
        out = [("robot", state.robot), ("human", state.human)]
        out.extend((f"bg{i}", v) for i, v in enumerate(state.background))
        return out

    def _check_collision(self, prev: JointState, t: float):
        """Contact or pass-through between any same-lane pair aborts the run."""
        before = dict((name, v) for name, v in self._collision_pairs(prev))
        after = self._collision_pairs(self.state)
        for i in range(len(after)):
            for j in range(i + 1, len(after)):
                name_i, vi = after[i]
                name_j, vj = after[j]
                if vi.lane != vj.lane:
                    continue
                pi, pj = before[name_i], before[name_j]
                if pi.lane != pj.lane:
                    continue
                d_prev = pi.x - pj.x
                d_new = vi.x - vj.x
                if d_new == 0.0 or (d_prev > 0) != (d_new > 0):
                    self.log.collision_time = t
                    raise CollisionDetected(t, self.log)


def run_scenario(config: ScenarioConfig) -> RunLog:
    """Run one episode and return its log.

    Raises CollisionDetected (carrying the partial log) if any same-lane
    pair of vehicles comes into contact.
    """
    return _Episode(config).run()


# --- default configurations ------------------------------------------------

IDM_LANE_ADVISE = IdmParams(u_max=0.73, b_pref=1.67, v_des=25.0, tau_gap=1.5,
                            d_min=2.0)
IDM_GAP_CREATE = IdmParams(u_max=0.73, b_pref=1.67, v_des=20.0, tau_gap=1.5,
                           d_min=2.0)


def _bg(x: float, v: float, v_des: float) -> BackgroundSpec:
    return BackgroundSpec(x=x, v=v, idm=IdmParams(
        u_max=0.73, b_pref=1.67, v_des=v_des, tau_gap=1.5, d_min=2.0))


def lane_advise_config(mode: Mode, duration: float = 150.0) -> ScenarioConfig:
    model = HumanUtilityModel(grid=velocity_grid(), w_speed=1.0,
                              w_headway=0.0, w_safety=2.0,
                              rationality_beta=0.02, v_ref=20.0,
                              lookahead=5.0, pen_distance=30.0)
    background = tuple(_bg(x, 20.0, 25.0) for x in (150.0, 210.0, 290.0, 340.0))
    return ScenarioConfig(
        kind=ScenarioKind.LANE_ADVISE, mode=mode, duration=duration,
        dynamics=DynamicsConfig(robot_v_max=23.5),
        model=model, human_idm=IDM_LANE_ADVISE, background=background,
        planner=PlannerConfig(effort_weight=3e-4),
        cutoff_velocity=23.0)


def gap_create_config(mode: Mode, duration: float = 155.0) -> ScenarioConfig:
    model = HumanUtilityModel(grid=headway_grid(), w_speed=0.02,
                              w_headway=120.0, w_safety=0.0,
                              rationality_beta=0.1, v_ref=20.0,
                              lookahead=4.0, pen_distance=2.0)
    # Stationary 20 m/s platoon: per-pair desired velocities are chosen so
    # each follower's IDM equilibrium gap matches its initial gap, except
    # the vehicle behind the human's slot, which is content at 20 m/s and
    # will not chase. The human starts boxed in just behind its blocker,
    # which is the "gaps too narrow" premise.
    background = (
        _bg(-320.0, 20.0, 20.15),
        _bg(-135.0, 20.0, 22.82),
        _bg(-85.0, 20.0, 21.21),
        _bg(-15.0, 20.0, 21.49),
        _bg(50.0, 20.0, 21.49),
        _bg(115.0, 20.0, 20.0),
    )
    return ScenarioConfig(
        kind=ScenarioKind.GAP_CREATE, mode=mode, duration=duration,
        dynamics=DynamicsConfig(robot_v_max=23.5),
        model=model, human_idm=IDM_GAP_CREATE, background=background,
        planner=PlannerConfig(effort_weight=0.01, plan_v_min=17.2,
                              plan_v_max=17.8,
                              plan_accel_grid=(-1.5, -1.0, -0.5, 0.0, 0.5, 1.0)),
        probe_min=55.0, lane_end=2050.0,
        blocked_accel=-0.05, influence_effort=0.3)


def default_config(kind: ScenarioKind, mode: Mode,
                   duration: Optional[float] = None) -> ScenarioConfig:
    if kind is ScenarioKind.LANE_ADVISE:
        cfg = lane_advise_config(mode)
    else:
        cfg = gap_create_config(mode)
    if duration is not None:
        cfg = replace(cfg, duration=duration)
    return cfg
