import pytest

from probedrive.dynamics import (
    B_HARD,
    DynamicsConfig,
    IdmParams,
    NonPositiveGap,
    desired_gap,
    idm_accel,
    joint_step,
)
from probedrive.model import Control, JointState, VehicleState

IDM = IdmParams(u_max=0.73, b_pref=1.67, v_des=25.0, tau_gap=1.5, d_min=2.0)


def _state(rx=0.0, rv=10.0, hx=-20.0, hv=10.0):
    return JointState(robot=VehicleState(rx, rv, 1),
                      human=VehicleState(hx, hv, 1))


def test_joint_step_coasting():
    cfg = DynamicsConfig(dt=0.1)
    s = _state(rx=0.0, rv=10.0)
    s2 = joint_step(s, Control(0.0), Control(0.0), cfg)
    assert s2.robot.x == pytest.approx(1.0, abs=0)
    assert s2.robot.v == 10.0
    assert s2.time == pytest.approx(0.1)


def test_joint_step_position_uses_pre_update_velocity():
    cfg = DynamicsConfig(dt=0.1)
    s = _state(rx=0.0, rv=10.0)
    s2 = joint_step(s, Control(1.0), Control(0.0), cfg)
    assert s2.robot.x == pytest.approx(1.0, abs=0)
    assert s2.robot.v == pytest.approx(10.1)


def test_joint_step_velocity_saturates_at_zero():
    cfg = DynamicsConfig(dt=0.1)
    s = JointState(robot=VehicleState(0.0, 0.05, 1),
                   human=VehicleState(-20.0, 10.0, 1))
    s2 = joint_step(s, Control(-1.0), Control(0.0), cfg)
    assert s2.robot.v == 0.0


def test_joint_step_lane_change_and_background():
    cfg = DynamicsConfig(dt=0.1)
    s = JointState(robot=VehicleState(0, 10, 1), human=VehicleState(-20, 10, 1),
                   background=(VehicleState(50, 20, 0),))
    s2 = joint_step(s, Control(0.0), Control(0.0, lane_change=0), cfg, [1.0])
    assert s2.human.lane == 0
    assert s2.background[0].x == pytest.approx(52.0)
    assert s2.background[0].v == pytest.approx(20.1)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_joint_step_affine_in_controls(alpha):
    cfg = DynamicsConfig(dt=0.1)
    s = _state()
    u1, u2 = 2.0, -1.0
    h = 0.5
    mix = alpha * u1 + (1 - alpha) * u2
    s_mix = joint_step(s, Control(mix), Control(h), cfg)
    s_1 = joint_step(s, Control(u1), Control(h), cfg)
    s_2 = joint_step(s, Control(u2), Control(h), cfg)
    for field in ("x", "v"):
        blend = (alpha * getattr(s_1.robot, field)
                 + (1 - alpha) * getattr(s_2.robot, field))
        assert getattr(s_mix.robot, field) == pytest.approx(blend, abs=1e-12)


def test_idm_free_road_equilibrium_exact():
    follower = VehicleState(0.0, 25.0, 0)
    assert idm_accel(follower, None, IDM) == 0.0


def test_idm_standstill_equilibrium_exact():
    follower = VehicleState(0.0, 0.0, 0)
    leader = VehicleState(2.0, 0.0, 0)
    assert idm_accel(follower, leader, IDM) == 0.0


def test_idm_reference_value():
    # v=20, v_des=25, v_lead=20, gap=100: d_des=32, accel=0.73*(1-0.4096-0.1024)
    follower = VehicleState(0.0, 20.0, 0)
    leader = VehicleState(100.0, 20.0, 0)
    assert desired_gap(20.0, 20.0, IDM) == pytest.approx(32.0)
    assert idm_accel(follower, leader, IDM) == pytest.approx(0.35624, abs=1e-9)


def test_idm_nonpositive_gap_raises():
    follower = VehicleState(0.0, 20.0, 0)
    leader = VehicleState(0.0, 20.0, 0)
    with pytest.raises(NonPositiveGap):
        idm_accel(follower, leader, IDM)


def test_idm_clamped_to_hard_braking():
    follower = VehicleState(0.0, 24.0, 0)
    leader = VehicleState(3.0, 0.0, 0)
    a = idm_accel(follower, leader, IDM)
    assert a == -B_HARD


def test_idm_never_exceeds_u_max():
    for v in (0.0, 5.0, 15.0, 24.0):
        for gap in (5.0, 30.0, 200.0):
            follower = VehicleState(0.0, v, 0)
            leader = VehicleState(gap, 20.0, 0)
            assert idm_accel(follower, leader, IDM) <= IDM.u_max


def test_idm_monotone_in_velocity_large_gap():
    leader = VehicleState(2000.0, 20.0, 0)
    accels = [idm_accel(VehicleState(0.0, v, 0), leader, IDM)
              for v in (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)]
    assert all(b <= a + 1e-12 for a, b in zip(accels, accels[1:]))


def test_determinism():
    cfg = DynamicsConfig(dt=0.1)
    s = _state()
    a = joint_step(s, Control(1.3), Control(-0.7), cfg)
    b = joint_step(s, Control(1.3), Control(-0.7), cfg)
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        DynamicsConfig(dt=0.0)
    with pytest.raises(ValueError):
        DynamicsConfig(human_accel_grid=(0.5, 1.0))  # missing zero
