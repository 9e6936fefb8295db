"""Independent brute-force oracles for the planner tests.

These enumerate every admissible control sequence directly with the public
model primitives, so the dynamic-programming searches can be checked
against exhaustive enumeration.
"""
import math

from probedrive.inference import MIN_MODEL_GAP, action_utilities
from probedrive.model import Control, JointState, VehicleState


def _tie_order(grid):
    return sorted(range(len(grid)), key=lambda i: (abs(grid[i]), grid[i]))


def _admissible_prefixes(v0, grid, order, T, dt, v_min, v_max):
    """Yield control index sequences in the planner's tie-break order."""
    def rec(prefix, v):
        if len(prefix) == T:
            yield tuple(prefix)
            return
        for i in order:
            v2 = v + grid[i] * dt
            if v2 < -1e-12 or (v2 > v_max + 1e-9 and v2 >= v):
                continue
            if v2 < v_min - 1e-9 and v2 <= v:
                continue
            yield from rec(prefix + [i], max(0.0, v2))
    yield from rec([], v0)


def enumerate_probe(state, belief, model, config, planner,
                    evaluate_rollout):
    """Exhaustive probe optimum: (value, control tuple, sequences tried)."""
    grid = list(planner.plan_accel_grid)
    order = _tie_order(grid)
    best_val = None
    best_seq = None
    count = 0
    v_max = (planner.plan_v_max if planner.plan_v_max is not None
             else config.robot_v_max)
    for seq in _admissible_prefixes(state.robot.v, grid, order,
                                    planner.horizon_steps, planner.plan_dt,
                                    planner.plan_v_min, v_max):
        controls = tuple(Control(accel=grid[i]) for i in seq)
        roll = evaluate_rollout(state, belief, controls, model, config,
                                planner)
        count += 1
        if best_val is None or roll.value > best_val:
            best_val = roll.value
            best_seq = controls
    return best_val, best_seq, count


def influence_rollout_value(state, phi_hat, model, config, planner,
                            objective, controls):
    """Replay one influence control sequence; mirrors the search's stage math."""
    from probedrive.planning import _tie_order as plan_tie

    dt = planner.plan_dt
    rx, rv = state.robot.x, state.robot.v
    hx, hv = state.human.x, state.human.v
    coupled = state.robot.lane == state.human.lane
    sgn_h = 1.0 if rx >= hx else -1.0
    sgn_b = [1.0 if b.x >= rx else -1.0 for b in state.background]
    hgrid = config.human_accel_grid
    horder = plan_tie(hgrid)
    total = 0.0
    for t, u in enumerate(controls):
        ar = u.accel
        rx2 = rx + rv * dt + 0.5 * ar * dt * dt
        rv2 = max(0.0, rv + ar * dt)
        if coupled:
            sub = JointState(robot=VehicleState(rx, rv, state.robot.lane),
                             human=VehicleState(hx, hv, state.human.lane))
            utils = action_utilities(sub, u, phi_hat, model, config)
            j_star = horder[0]
            for j in horder[1:]:
                if utils[j] > utils[j_star]:
                    j_star = j
            hx2 = hx + hv * dt + 0.5 * hgrid[j_star] * dt * dt
            hv2 = max(0.0, hv + hgrid[j_star] * dt)
        else:
            hx2 = hx + hv * dt
            hv2 = hv
        tgt = objective.target + objective.rate * (t + 1) * dt
        if objective.kind == "velocity":
            d = rv2 - tgt
            r_obj = -objective.weight * d * d
        else:
            d = rx2 - tgt
            r_obj = -objective.weight * d * d
            d = rv2 - objective.rate
            r_obj -= objective.damp_weight * d * d
        r_safe = 0.0
        if coupled:
            g = max((rx2 - hx2) * sgn_h, MIN_MODEL_GAP)
            q = planner.d_safe / g
            r_safe -= q * q
        for bi, b in enumerate(state.background):
            if b.lane == state.robot.lane:
                g = max((b.x + b.v * (t + 1) * dt - rx2) * sgn_b[bi],
                        MIN_MODEL_GAP)
                q = planner.d_safe / g
                r_safe -= q * q
        total += r_obj + planner.safety_weight * r_safe
        total -= planner.effort_weight * ar * ar
        rx, rv, hx, hv = rx2, rv2, hx2, hv2
    return total


def enumerate_influence(state, phi_hat, model, config, planner, objective):
    grid = list(planner.plan_accel_grid)
    order = _tie_order(grid)
    best_val = None
    best_seq = None
    count = 0
    v_max = (planner.plan_v_max if planner.plan_v_max is not None
             else config.robot_v_max)
    for seq in _admissible_prefixes(state.robot.v, grid, order,
                                    planner.horizon_steps, planner.plan_dt,
                                    planner.plan_v_min, v_max):
        controls = tuple(Control(accel=grid[i]) for i in seq)
        val = influence_rollout_value(state, phi_hat, model, config, planner,
                                      objective, controls)
        count += 1
        if best_val is None or val > best_val:
            best_val = val
            best_seq = controls
    return best_val, best_seq, count
