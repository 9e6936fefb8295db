"""Pure-Python planner kernels.

Reference implementation of the receding-horizon searches. The compiled
extension (`_speedups`) mirrors this file operation-for-operation: scalar
math, ascending-index sums, identical branching, so both backends return
bit-identical results. Keep the two in sync.

Too slow for full episodes at production grid sizes; the compiled backend
is selected automatically when available.
"""
import math

GRID_VELOCITY = 0
GRID_HEADWAY = 1

OBJ_NONE = 0
OBJ_VELOCITY = 1
OBJ_POSITION = 2


def _utility(grid_kind, val, v_h, gap, has_gap,
             w_speed, w_headway, w_safety, v_ref, pen_distance, pen_cap):
    if grid_kind == GRID_VELOCITY:
        dv = v_h - val
        u = -w_speed * dv * dv
        if has_gap:
            q = pen_distance / gap
            pen = q * q
            if pen > pen_cap:
                pen = pen_cap
            u -= w_safety * pen
        return u
    dv = v_h - v_ref
    u = -w_speed * dv * dv
    if has_gap:
        e = (gap - val) / val
        u -= w_headway * e * e
    return u


def _kl(a, b, n):
    total = 0.0
    for i in range(n):
        total += a[i] * math.log(2.0 * a[i] / (a[i] + b[i]))
    return total


def _jsd(a, b, n):
    return 0.5 * (_kl(a, b, n) + _kl(b, a, n))


def probe_search(T, dt, dt_util, xr, vr, hx0, hv0, bel0, vals, grid_kind,
                 same_lane, beta, w_speed, w_headway, w_safety, v_ref,
                 pen_distance, pen_cap, min_gap, robot_acc, robot_tie,
                 human_acc, human_tie, lam, d_safe, effort, v_min, v_max, floor):
    """Depth-first exact search of the probing objective.

    Returns (value, control_indices, explored_edges). The objective per step
    is the belief-weighted increment of divergence from the initial belief
    plus the weighted safety term, accumulated over one rollout branch per
    hypothesis (the branch human plays its best response). Action utilities
    are evaluated at the observation model's lookahead `dt_util`, while the
    physical rollout advances at the planning step `dt`.
    """
    n_phi = len(vals)
    n_h = len(human_acc)
    bel0 = list(bel0)
    sgn_h = 1.0 if xr >= hx0 else -1.0  # robot leads: keep it that way
    memo = {}
    counter = [0]

    def dfs(t, rxr, rvr, hx, hv, B):
        if t == T:
            return 0.0, ()
        qkey = (t, round(rxr * 10.0), round(rvr * 100.0),
                tuple(round(x * 10.0) for x in hx),
                tuple(round(v * 100.0) for v in hv), B)
        exact = (rxr, rvr, hx, hv)
        bucket = memo.get(qkey)
        if bucket is not None:
            for ex, res in bucket:
                if ex == exact:
                    return res
        d_old = [_jsd(bel0, B[p], n_phi) for p in range(n_phi)]
        best_val = None
        best_ctl = ()
        for ri in robot_tie:
            ar = robot_acc[ri]
            vr2 = rvr + ar * dt
            if vr2 < -1e-12 or (vr2 > v_max + 1e-9 and vr2 >= rvr):
                continue
            if vr2 < v_min - 1e-9 and vr2 <= rvr:
                continue
            counter[0] += 1
            rx2 = rxr + rvr * dt + 0.5 * ar * dt * dt
            rx2u = rxr + rvr * dt_util + 0.5 * ar * dt_util * dt_util
            if vr2 < 0.0:
                vr2 = 0.0
            stage = 0.0
            new_hx = []
            new_hv = []
            new_B = []
            for p in range(n_phi):
                hxp = hx[p]
                hvp = hv[p]
                hv2u = [0.0] * n_h
                gaps = [0.0] * n_h
                for j in range(n_h):
                    a = human_acc[j]
                    hx2u = hxp + hvp * dt_util + 0.5 * a * dt_util * dt_util
                    v2 = hvp + a * dt_util
                    hv2u[j] = v2 if v2 > 0.0 else 0.0
                    if same_lane:
                        g = rx2u - hx2u
                        gaps[j] = g if g > min_gap else min_gap
                # best response under the branch's own hypothesis
                u_p = [0.0] * n_h
                for j in range(n_h):
                    u_p[j] = _utility(grid_kind, vals[p], hv2u[j], gaps[j],
                                      same_lane, w_speed, w_headway, w_safety,
                                      v_ref, pen_distance, pen_cap)
                j_star = human_tie[0]
                bu = u_p[j_star]
                for jj in range(1, n_h):
                    j = human_tie[jj]
                    if u_p[j] > bu:
                        j_star = j
                        bu = u_p[j]
                # likelihood of that action under every hypothesis
                Bp = B[p]
                w = [0.0] * n_phi
                wtot = 0.0
                for k in range(n_phi):
                    if k == p:
                        u_k = u_p
                    else:
                        u_k = [0.0] * n_h
                        for j in range(n_h):
                            u_k[j] = _utility(grid_kind, vals[k], hv2u[j],
                                              gaps[j], same_lane, w_speed,
                                              w_headway, w_safety, v_ref,
                                              pen_distance, pen_cap)
                    m = u_k[0]
                    for j in range(1, n_h):
                        if u_k[j] > m:
                            m = u_k[j]
                    denom = 0.0
                    for j in range(n_h):
                        e = math.exp(beta * (u_k[j] - m))
                        if e < 1e-12:
                            e = 1e-12
                        denom += e
                    lik = math.exp(beta * (u_k[j_star] - m))
                    if lik < 1e-12:
                        lik = 1e-12
                    lik = lik / denom
                    wk = Bp[k] * lik
                    if wk > 0.0:
                        wtot += wk
                    w[k] = wk
                if wtot <= 0.0:
                    raise ValueError("all weights <= 0")
                s = 0.0
                probs = [0.0] * n_phi
                for k in range(n_phi):
                    pk = w[k] / wtot if w[k] > 0.0 else 0.0
                    if pk < floor:
                        pk = floor
                    probs[k] = pk
                    s += pk
                for k in range(n_phi):
                    probs[k] /= s
                d_new = _jsd(bel0, probs, n_phi)
                a_star = human_acc[j_star]
                hx2s = hxp + hvp * dt + 0.5 * a_star * dt * dt
                hv2s = hvp + a_star * dt
                if hv2s < 0.0:
                    hv2s = 0.0
                r_safe = 0.0
                if same_lane:
                    g = (rx2 - hx2s) * sgn_h
                    if g < min_gap:
                        g = min_gap
                    q = d_safe / g
                    r_safe = -q * q
                stage += bel0[p] * (d_new - d_old[p] + lam * r_safe)
                new_hx.append(hx2s)
                new_hv.append(hv2s)
                new_B.append(tuple(probs))
            stage -= effort * ar * ar
            rest_val, rest_ctl = dfs(t + 1, rx2, vr2, tuple(new_hx),
                                     tuple(new_hv), tuple(new_B))
            total = stage + rest_val
            if best_val is None or total > best_val:
                best_val = total
                best_ctl = (ri,) + rest_ctl
        if best_val is None:
            best_val = 0.0  # no admissible action: treat as terminal
        res = (best_val, best_ctl)
        if bucket is None:
            memo[qkey] = [(exact, res)]
        else:
            bucket.append((exact, res))
        return res

    B0 = tuple(tuple(bel0) for _ in range(n_phi))
    hx = tuple(hx0 for _ in range(n_phi))
    hv = tuple(hv0 for _ in range(n_phi))
    value, ctl = dfs(0, xr, vr, hx, hv, B0)
    return value, ctl, counter[0]


def influence_search(T, dt, dt_util, xr, vr, hx0, hv0, coupled, val_hat,
                     grid_kind, beta, w_speed, w_headway, w_safety, v_ref,
                     pen_distance, pen_cap, min_gap, bg_x, bg_v, bg_same,
                     obj_kind, obj_weight, obj_target0, obj_rate,
                     obj_damp, robot_acc, robot_tie, human_acc, human_tie,
                     lam, d_safe, effort, v_min, v_max):
    """Depth-first exact search of a tracking objective with a point-estimate human.

    The human plays its best response under `val_hat` when it shares the
    robot's lane, and coasts at constant velocity otherwise. Background
    vehicles are predicted at constant velocity and enter only through the
    safety term when they share the robot's lane.
    """
    n_h = len(human_acc)
    n_bg = len(bg_x)
    sgn_h = 1.0 if xr >= hx0 else -1.0
    sgn_b = [1.0 if b >= xr else -1.0 for b in bg_x]
    memo = {}
    counter = [0]

    def dfs(t, rxr, rvr, hxp, hvp):
        if t == T:
            return 0.0, ()
        qkey = (t, round(rxr * 10.0), round(rvr * 100.0),
                round(hxp * 10.0), round(hvp * 100.0))
        exact = (rxr, rvr, hxp, hvp)
        bucket = memo.get(qkey)
        if bucket is not None:
            for ex, res in bucket:
                if ex == exact:
                    return res
        best_val = None
        best_ctl = ()
        for ri in robot_tie:
            ar = robot_acc[ri]
            vr2 = rvr + ar * dt
            if vr2 < -1e-12 or (vr2 > v_max + 1e-9 and vr2 >= rvr):
                continue
            if vr2 < v_min - 1e-9 and vr2 <= rvr:
                continue
            counter[0] += 1
            rx2 = rxr + rvr * dt + 0.5 * ar * dt * dt
            if vr2 < 0.0:
                vr2 = 0.0
            if coupled:
                rx2u = rxr + rvr * dt_util + 0.5 * ar * dt_util * dt_util
                best_j = -1
                best_u = 0.0
                for jj in range(n_h):
                    j = human_tie[jj]
                    a = human_acc[j]
                    hx2u = hxp + hvp * dt_util + 0.5 * a * dt_util * dt_util
                    v2 = hvp + a * dt_util
                    if v2 < 0.0:
                        v2 = 0.0
                    g = rx2u - hx2u
                    if g < min_gap:
                        g = min_gap
                    u = _utility(grid_kind, val_hat, v2, g, True, w_speed,
                                 w_headway, w_safety, v_ref, pen_distance,
                                 pen_cap)
                    if best_j < 0 or u > best_u:
                        best_j = j
                        best_u = u
                a_star = human_acc[best_j]
                hx2 = hxp + hvp * dt + 0.5 * a_star * dt * dt
                hv2 = hvp + a_star * dt
                if hv2 < 0.0:
                    hv2 = 0.0
            else:
                hx2 = hxp + hvp * dt
                hv2 = hvp
            tgt = obj_target0 + obj_rate * (t + 1) * dt
            if obj_kind == OBJ_VELOCITY:
                d = vr2 - tgt
                r_obj = -obj_weight * d * d
            elif obj_kind == OBJ_POSITION:
                d = rx2 - tgt
                r_obj = -obj_weight * d * d
                d = vr2 - obj_rate
                r_obj -= obj_damp * d * d
            else:
                r_obj = 0.0
            r_safe = 0.0
            if coupled:
                g = (rx2 - hx2) * sgn_h
                if g < min_gap:
                    g = min_gap
                q = d_safe / g
                r_safe -= q * q
            for b in range(n_bg):
                if bg_same[b]:
                    g = (bg_x[b] + bg_v[b] * (t + 1) * dt - rx2) * sgn_b[b]
                    if g < min_gap:
                        g = min_gap
                    q = d_safe / g
                    r_safe -= q * q
            stage = r_obj + lam * r_safe - effort * ar * ar
            rest_val, rest_ctl = dfs(t + 1, rx2, vr2, hx2, hv2)
            total = stage + rest_val
            if best_val is None or total > best_val:
                best_val = total
                best_ctl = (ri,) + rest_ctl
        if best_val is None:
            best_val = 0.0
        res = (best_val, best_ctl)
        if bucket is None:
            memo[qkey] = [(exact, res)]
        else:
            bucket.append((exact, res))
        return res

    value, ctl = dfs(0, xr, vr, hx0, hv0)
    return value, ctl, counter[0]
