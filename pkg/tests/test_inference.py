import math

import pytest

from probedrive.dynamics import DynamicsConfig
from probedrive.inference import (
    EstimateMode,
    HumanUtilityModel,
    action_utilities,
    belief_update,
    boltzmann_likelihood,
    estimate_phi,
    human_utility,
    snap_to_grid,
    softmax_probs,
)
from probedrive.model import (
    Belief,
    Control,
    GridKind,
    HypothesisGrid,
    JointState,
    VehicleState,
    normalize,
)

VEL_GRID = HypothesisGrid(GridKind.DESIRED_VELOCITY,
                          tuple(10.0 + 2.0 * k for k in range(5)))
HEAD_GRID = HypothesisGrid(GridKind.DESIRED_HEADWAY,
                           tuple(20.0 + 20.0 * k for k in range(5)))


def _state(rx=200.0, rv=20.0, hx=0.0, hv=14.0, same_lane=True):
    return JointState(robot=VehicleState(rx, rv, 1),
                      human=VehicleState(hx, hv, 1 if same_lane else 0))


def test_velocity_utility_peak_at_match():
    model = HumanUtilityModel(grid=VEL_GRID, w_speed=1.0, w_safety=0.0)
    # free road: robot far ahead in another lane
    s = _state(hv=14.0, same_lane=False)
    assert human_utility(s, model, 3) == 0.0  # value 14 matches exactly


def test_velocity_utility_quadratic():
    model = HumanUtilityModel(grid=VEL_GRID, w_speed=1.0, w_safety=0.0)
    s = _state(hv=15.0, same_lane=False)
    assert human_utility(s, model, 3) == pytest.approx(-1.0)


def test_headway_utility_peak_at_match():
    model = HumanUtilityModel(grid=HEAD_GRID, w_speed=1.0, w_headway=3.0,
                              v_ref=20.0)
    s = _state(rx=60.0, rv=20.0, hx=0.0, hv=20.0)
    assert human_utility(s, model, 3) == pytest.approx(0.0)  # gap 60 = value


def test_softmax_two_actions():
    probs = softmax_probs([1.0, 0.0], beta=1.0)
    assert probs[0] == pytest.approx(math.e / (math.e + 1.0), abs=1e-12)


def test_softmax_uniform_when_equal():
    probs = softmax_probs([2.0, 2.0, 2.0, 2.0], beta=3.0)
    for p in probs:
        assert p == pytest.approx(0.25, abs=1e-15)


def test_softmax_shift_invariance():
    base = [0.3, -1.2, 5.0]
    shifted = [u + 123.456 for u in base]
    p1 = softmax_probs(base, beta=0.7)
    p2 = softmax_probs(shifted, beta=0.7)
    for a, b in zip(p1, p2):
        assert abs(a - b) <= 1e-12


def test_likelihood_in_open_unit_interval():
    model = HumanUtilityModel(grid=VEL_GRID, rationality_beta=0.5)
    cfg = DynamicsConfig()
    s = _state()
    for accel in cfg.human_accel_grid:
        for k in range(1, len(VEL_GRID) + 1):
            p = boltzmann_likelihood(s, Control(0.0), Control(accel), k,
                                     model, cfg)
            assert 0.0 < p < 1.0


def test_likelihood_rejects_off_grid_action():
    model = HumanUtilityModel(grid=VEL_GRID)
    cfg = DynamicsConfig()
    with pytest.raises(ValueError):
        boltzmann_likelihood(_state(), Control(0.0), Control(0.123), 1,
                             model, cfg)


def test_snap_to_grid():
    grid = (-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
    assert snap_to_grid(0.2, grid) == 0.0
    assert snap_to_grid(-0.25, grid) == 0.0  # tie toward zero
    assert snap_to_grid(0.25, grid) == 0.0
    assert snap_to_grid(-4.0, grid) == -3.0  # clamped to the grid edge
    assert snap_to_grid(2.6, grid) == 2.0


def test_belief_update_uninformative_observation():
    # robot in the other lane, huge lookahead distance: all hypotheses far
    # from every candidate velocity produce likelihoods that differ, so use
    # identical utilities instead: zero weights make every action equal.
    model = HumanUtilityModel(grid=VEL_GRID, w_speed=0.0, w_safety=0.0)
    cfg = DynamicsConfig()
    prior = normalize([0.1, 0.4, 0.2, 0.2, 0.1])
    post = belief_update(prior, _state(), Control(0.0), Control(0.5), model,
                         cfg)
    for a, b in zip(prior.probabilities, post.probabilities):
        assert abs(a - b) <= 1e-12


def test_belief_update_uniform_prior_follows_likelihood():
    grid2 = HypothesisGrid(GridKind.DESIRED_VELOCITY, (10.0, 12.0))
    model = HumanUtilityModel(grid=grid2, rationality_beta=0.4)
    cfg = DynamicsConfig(human_accel_grid=(-1.0, 0.0, 1.0))
    prior = Belief.uniform(2)
    s = _state(hv=11.0, same_lane=False)
    obs = Control(1.0)
    post = belief_update(prior, s, Control(0.0), obs, model, cfg)
    l1 = boltzmann_likelihood(s, Control(0.0), obs, 1, model, cfg)
    l2 = boltzmann_likelihood(s, Control(0.0), obs, 2, model, cfg)
    expected = normalize([l1, l2])
    for a, b in zip(post.probabilities, expected.probabilities):
        assert abs(a - b) <= 1e-12


def test_belief_update_order_preservation():
    model = HumanUtilityModel(grid=VEL_GRID, rationality_beta=0.5)
    cfg = DynamicsConfig()
    prior = Belief.uniform(5)
    s = _state(hv=14.0)
    obs = Control(1.0)
    post = belief_update(prior, s, obs, obs, model, cfg)
    liks = [boltzmann_likelihood(s, obs, obs, k, model, cfg)
            for k in range(1, 6)]
    for i in range(5):
        for j in range(5):
            if liks[i] > liks[j]:
                assert (post[i] / post[j]) > (prior[i] / prior[j]) - 1e-12


def test_filter_consistency_200_observations():
    """Observations generated from hypothesis 10 concentrate the posterior there."""
    grid = HypothesisGrid(GridKind.DESIRED_VELOCITY,
                          tuple(10.0 + 0.8 * k for k in range(30)))
    model = HumanUtilityModel(grid=grid, rationality_beta=1.0, w_safety=0.0)
    cfg = DynamicsConfig(human_accel_grid=tuple(-2.0 + 0.5 * k
                                                for k in range(9)))
    true_index = 10  # 1-based
    true_value = grid.values[true_index - 1]
    bel = Belief.uniform(30)
    hv = 12.0
    hx = 0.0
    from probedrive.planning import best_response

    for step in range(200):
        s = JointState(robot=VehicleState(hx + 500.0, 20.0, 0),
                       human=VehicleState(hx, hv, 1))
        obs = best_response(s, Control(0.0), true_index, model, cfg)
        bel = belief_update(bel, s, Control(0.0), obs, model, cfg)
        hx, hv = hx + hv * 0.1, max(0.0, hv + obs.accel * 0.1)
    assert bel.argmax() == true_index - 1


def test_estimate_phi_modes():
    grid3 = HypothesisGrid(GridKind.DESIRED_VELOCITY, (1.0, 2.0, 3.0))
    bel = Belief((0.2, 0.5, 0.3))
    assert estimate_phi(bel, grid3, EstimateMode.MAP) == 2.0
    assert estimate_phi(bel, grid3, EstimateMode.MEAN) == pytest.approx(2.1)


def test_estimate_phi_uniform_mean_is_midpoint():
    grid = HypothesisGrid(GridKind.DESIRED_VELOCITY,
                          tuple(10.0 + 1.0 * k for k in range(11)))
    bel = Belief.uniform(11)
    assert estimate_phi(bel, grid, EstimateMode.MEAN) == pytest.approx(15.0)


def test_estimate_phi_delta_belief():
    grid = HypothesisGrid(GridKind.DESIRED_VELOCITY,
                          tuple(float(k) for k in range(1, 11)))
    probs = [1e-9] * 10
    probs[6] = 1.0 - 9e-9
    bel = Belief(tuple(probs))
    assert estimate_phi(bel, grid, EstimateMode.MAP) == 7.0
    assert estimate_phi(bel, grid, EstimateMode.MEAN) == pytest.approx(7.0, abs=1e-6)


def test_human_utility_overlap_raises():
    from probedrive.dynamics import NonPositiveGap

    model = HumanUtilityModel(grid=VEL_GRID)
    s = JointState(robot=VehicleState(0.0, 20.0, 1),
                   human=VehicleState(0.0, 20.0, 1))
    with pytest.raises(NonPositiveGap):
        human_utility(s, model, 1)


def test_human_utility_robot_behind_is_free_road():
    model = HumanUtilityModel(grid=VEL_GRID, w_speed=1.0, w_safety=5.0)
    s = JointState(robot=VehicleState(-30.0, 20.0, 1),
                   human=VehicleState(0.0, 14.0, 1))
    assert human_utility(s, model, 3) == 0.0  # no leader, exact velocity match
