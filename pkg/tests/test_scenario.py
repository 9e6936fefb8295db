import math

import pytest

from probedrive.dynamics import IdmParams
from probedrive.model import JointState, VehicleState
from probedrive.scenario import (
    CollisionDetected,
    CutoffNotMet,
    Mode,
    NoBackgroundVehicles,
    Phase,
    ScenarioKind,
    VehicleClass,
    default_config,
    human_lane_change_check,
    influence_objectives,
    metric_cumulative_abs_control,
    metric_velocity_deviation,
    run_scenario,
    widest_gap,
)

IDM = IdmParams(u_max=0.73, b_pref=1.67, v_des=25.0, tau_gap=1.5, d_min=2.0)


def _bg_state(positions, human_x=-50.0, lanes=None):
    lanes = lanes or [0] * len(positions)
    return JointState(
        robot=VehicleState(0.0, 20.0, 1),
        human=VehicleState(human_x, 20.0, 1),
        background=tuple(VehicleState(x, 20.0, lane)
                         for x, lane in zip(positions, lanes)))


class TestWidestGap:
    def test_picks_largest(self):
        # gaps 30, 50, 40 -> the 50 m gap (index 1)
        s = _bg_state([100.0, 130.0, 180.0, 220.0])
        info = widest_gap(s)
        assert info.index == 1
        assert info.length == pytest.approx(50.0)
        assert info.midpoint == pytest.approx(155.0)

    def test_single_vehicle_semi_infinite(self):
        s = _bg_state([100.0])
        info = widest_gap(s)
        assert math.isinf(info.length)
        assert info.rear_bg_index is None
        assert info.front_bg_index == 0

    def test_tie_breaks_toward_gap_ahead_of_human(self):
        # gaps 40 and 40; human nearer the second midpoint
        s = _bg_state([100.0, 140.0, 180.0], human_x=155.0)
        info = widest_gap(s)
        assert info.index == 1

    def test_no_background(self):
        s = JointState(robot=VehicleState(0, 20, 1),
                       human=VehicleState(-50, 20, 1))
        with pytest.raises(NoBackgroundVehicles):
            widest_gap(s)

    def test_ignores_other_lane(self):
        s = _bg_state([100.0, 200.0, 230.0], lanes=[0, 1, 0])
        info = widest_gap(s)  # inner gap is 100..230
        assert info.length == pytest.approx(130.0)


class TestLaneChangeCheck:
    def test_free_road_no_incentive(self):
        s = JointState(robot=VehicleState(500.0, 20.0, 1),
                       human=VehicleState(0.0, 20.0, 1))
        assert human_lane_change_check(s, IDM) is None

    def test_blocked_with_empty_target_lane(self):
        # leader 10 m ahead and slower: the human brakes hard
        s = JointState(robot=VehicleState(10.0, 15.0, 1),
                       human=VehicleState(0.0, 20.0, 1))
        assert human_lane_change_check(s, IDM) == 0

    def test_blocked_but_follower_would_brake_too_hard(self):
        s = JointState(robot=VehicleState(10.0, 15.0, 1),
                       human=VehicleState(0.0, 20.0, 1),
                       background=(VehicleState(-8.0, 22.0, 0),))
        assert human_lane_change_check(s, IDM) is None

    def test_blocked_but_leader_gap_too_small(self):
        s = JointState(robot=VehicleState(10.0, 15.0, 1),
                       human=VehicleState(0.0, 20.0, 1),
                       background=(VehicleState(12.0, 20.0, 0),))
        assert human_lane_change_check(s, IDM) is None

    def test_only_from_outer_lane(self):
        s = JointState(robot=VehicleState(10.0, 15.0, 1),
                       human=VehicleState(0.0, 20.0, 0))
        assert human_lane_change_check(s, IDM) is None


class TestInfluenceObjectives:
    def test_lane_advise_cutoff_met(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.ACTIVE)
        s = _bg_state([150.0, 210.0, 290.0, 340.0], human_x=-100.0)
        objs = influence_objectives(ScenarioKind.LANE_ADVISE, 23.56, s, cfg)
        assert [o.name for o in objs] == ["align-with-gap", "block-and-slow"]

    def test_lane_advise_cutoff_not_met(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.ACTIVE)
        s = _bg_state([150.0, 210.0, 290.0, 340.0])
        with pytest.raises(CutoffNotMet):
            influence_objectives(ScenarioKind.LANE_ADVISE, 20.0, s, cfg)

    def test_block_objective_tracks_margin_below_estimate(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.ACTIVE)
        s = _bg_state([150.0, 210.0, 290.0, 340.0])
        objs = influence_objectives(ScenarioKind.LANE_ADVISE, 23.56, s, cfg)
        tracking = objs[1].build(s)
        assert tracking.kind == "velocity"
        assert tracking.target == pytest.approx(23.56 - cfg.block_margin)

    def test_gap_create_slot_size(self):
        # the opening completes once the slot ahead of the human reaches
        # phi_hat + d_min (48.27 + 2 -> 50.27)
        cfg = default_config(ScenarioKind.GAP_CREATE, Mode.ACTIVE)
        s = JointState(robot=VehicleState(0.0, 20.0, 1),
                       human=VehicleState(-100.0, 20.0, 1),
                       background=tuple(VehicleState(x, 20.0, 0)
                                        for x in (-85.0, -15.0, 50.0)))
        objs = influence_objectives(ScenarioKind.GAP_CREATE, 48.27, s, cfg)
        assert [o.name for o in objs] == ["merge-robot", "open-gap",
                                          "await-human-merge"]
        # the 15 m to the blocker is far short of the 50.27 m slot
        assert not objs[1].done(s)
        # once a merged robot forms the slot's front edge 50.5 m ahead of
        # the human, the 48.27 + 2 requirement is met
        opened = JointState(
            robot=VehicleState(-49.5, 20.0, 0),
            human=VehicleState(-100.0, 20.0, 1),
            background=tuple(VehicleState(x, 20.0, 0)
                             for x in (10.0, 80.0, 150.0)))
        assert opened.robot.x - opened.human.x >= 48.27 + 2.0
        assert objs[1].done(opened)
        short = JointState(
            robot=VehicleState(-60.0, 20.0, 0),
            human=VehicleState(-100.0, 20.0, 1),
            background=opened.background)
        assert not objs[1].done(short)

    def test_gap_create_needs_inner_traffic(self):
        cfg = default_config(ScenarioKind.GAP_CREATE, Mode.ACTIVE)
        s = JointState(robot=VehicleState(0.0, 20.0, 1),
                       human=VehicleState(-100.0, 20.0, 1))
        with pytest.raises(NoBackgroundVehicles):
            influence_objectives(ScenarioKind.GAP_CREATE, 48.27, s, cfg)


class TestMetrics:
    def _short_log(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.PASSIVE,
                             duration=8.0)
        return run_scenario(cfg), cfg

    def test_velocity_deviation_starts_at_zero(self):
        log, _ = self._short_log()
        for cls in VehicleClass:
            dev = metric_velocity_deviation(log, cls)
            assert dev[0] == 0.0

    def test_passive_robot_has_zero_control(self):
        log, _ = self._short_log()
        assert metric_cumulative_abs_control(log, VehicleClass.ROBOT) == 0.0
        dev = metric_velocity_deviation(log, VehicleClass.ROBOT)
        assert all(d == 0.0 for d in dev)

    def test_cumulative_control_integrates_abs(self):
        log, cfg = self._short_log()
        dt = cfg.dynamics.dt
        expected = sum(abs(r.human_a) for r in log.records[:-1]) * dt
        assert metric_cumulative_abs_control(
            log, VehicleClass.HUMAN) == pytest.approx(expected)


class TestRunScenario:
    def test_phase_schedule_alternates(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.ACTIVE,
                             duration=12.0)
        log = run_scenario(cfg)
        phases = {}
        for r in log.records[:-1]:
            phases.setdefault(r.phase, []).append(r.t)
        assert min(phases[Phase.OBSERVE]) == 0.0
        assert min(phases[Phase.PROBE]) == pytest.approx(5.0)
        # boundaries only at multiples of the 5 s block
        for t, _ in log.phase_boundaries:
            assert abs(t / 5.0 - round(t / 5.0)) < 1e-9

    def test_passive_never_probes(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.PASSIVE,
                             duration=20.0)
        log = run_scenario(cfg)
        assert all(r.phase is Phase.OBSERVE for r in log.records)
        assert log.human_merge_time is None

    def test_record_count_and_snapshots(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.PASSIVE,
                             duration=20.0)
        log = run_scenario(cfg)
        assert len(log.records) == int(round(20.0 / cfg.dynamics.dt)) + 1
        times = [t for t, _ in log.snapshots]
        assert times == [0.0, 10.0, 20.0]
        for _, probs in log.snapshots:
            assert abs(sum(probs) - 1.0) <= 1e-9
            assert min(probs) > 0

    def test_determinism_bit_identical(self):
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.ACTIVE,
                             duration=12.0)
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.records == b.records
        assert a.snapshots == b.snapshots

    def test_collision_aborts_with_partial_log(self):
        # two background vehicles on a collision course in the inner lane
        cfg = default_config(ScenarioKind.LANE_ADVISE, Mode.PASSIVE,
                             duration=30.0)
        from dataclasses import replace
        from probedrive.scenario import BackgroundSpec
        fast = IdmParams(u_max=8.0, b_pref=0.1, v_des=80.0, tau_gap=0.05,
                         d_min=0.1)
        bad = (BackgroundSpec(x=150.0, v=0.0, idm=IDM),
               BackgroundSpec(x=120.0, v=40.0, idm=fast))
        cfg = replace(cfg, background=bad)
        with pytest.raises(CollisionDetected) as exc:
            run_scenario(cfg)
        assert exc.value.log.records  # partial log is attached
        assert exc.value.time > 0
