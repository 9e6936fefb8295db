# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled planner kernels.

Mirrors probedrive._fallback operation-for-operation (same arithmetic, same
summation order, same libm calls) so both backends return bit-identical
results. Keep the two in sync.
"""
from libc.math cimport exp, log
from libc.stdlib cimport free, malloc

GRID_VELOCITY = 0
GRID_HEADWAY = 1

OBJ_NONE = 0
OBJ_VELOCITY = 1
OBJ_POSITION = 2

DEF MAX_PHI = 64
DEF MAX_ACT = 32


cdef inline double _utility(int grid_kind, double val, double v_h, double gap,
                            bint has_gap, double w_speed, double w_headway,
                            double w_safety, double v_ref,
                            double pen_distance, double pen_cap) nogil:
    cdef double dv, u, q, pen, e
    if grid_kind == 0:
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


cdef inline double _kl(double* a, double* b, int n) nogil:
    cdef double total = 0.0
    cdef int i
    for i in range(n):
        total += a[i] * log(2.0 * a[i] / (a[i] + b[i]))
    return total


cdef inline double _jsd(double* a, double* b, int n) nogil:
    return 0.5 * (_kl(a, b, n) + _kl(b, a, n))


cdef class _ProbeSearcher:
    cdef int T, n_phi, n_h, n_r, grid_kind
    cdef bint same_lane
    cdef double dt, dt_util, beta, w_speed, w_headway, w_safety, v_ref
    cdef double pen_distance, pen_cap, min_gap, lam, d_safe, effort, v_min, v_max, floor, sgn_h
    cdef double bel0[MAX_PHI]
    cdef double vals[MAX_PHI]
    cdef double racc[MAX_ACT]
    cdef double hacc[MAX_ACT]
    cdef int rtie[MAX_ACT]
    cdef int htie[MAX_ACT]
    # scratch per depth: branch states and beliefs
    cdef double* s_hx      # (T+1) * n_phi
    cdef double* s_hv
    cdef double* s_bel     # (T+1) * n_phi * n_phi
    cdef object memo
    cdef long nodes

    def __cinit__(self):
        self.s_hx = NULL
        self.s_hv = NULL
        self.s_bel = NULL

    def __dealloc__(self):
        if self.s_hx != NULL:
            free(self.s_hx)
        if self.s_hv != NULL:
            free(self.s_hv)
        if self.s_bel != NULL:
            free(self.s_bel)

    cdef void _alloc(self):
        cdef int depth = self.T + 1
        self.s_hx = <double*> malloc(depth * self.n_phi * sizeof(double))
        self.s_hv = <double*> malloc(depth * self.n_phi * sizeof(double))
        self.s_bel = <double*> malloc(depth * self.n_phi * self.n_phi * sizeof(double))
        if self.s_hx == NULL or self.s_hv == NULL or self.s_bel == NULL:
            raise MemoryError()

    cdef tuple _dfs(self, int t, double rxr, double rvr):
        cdef int n_phi = self.n_phi
        cdef int n_h = self.n_h
        cdef double dt = self.dt
        cdef double* hx = self.s_hx + t * n_phi
        cdef double* hv = self.s_hv + t * n_phi
        cdef double* B = self.s_bel + t * n_phi * n_phi
        cdef double* hx_next = self.s_hx + (t + 1) * n_phi
        cdef double* hv_next = self.s_hv + (t + 1) * n_phi
        cdef double* B_next = self.s_bel + (t + 1) * n_phi * n_phi
        cdef int i, j, jj, k, p, ri
        cdef double ar, vr2, rx2, rx2u, hx2u, stage, g, q, r_safe
        cdef double hv2u[MAX_ACT]
        cdef double gaps[MAX_ACT]
        cdef double u_p[MAX_ACT]
        cdef double u_k[MAX_ACT]
        cdef double w[MAX_PHI]
        cdef double probs[MAX_PHI]
        cdef double d_old[MAX_PHI]
        cdef double d_new, m, denom, lik, wk, wtot, s, v2, bu, a, total
        cdef double a_star, hx2s, hv2s
        cdef int j_star
        cdef double best_hx[MAX_PHI]
        cdef double best_hv[MAX_PHI]

        if t == self.T:
            return (0.0, ())

        # memo key: quantized robot/branch kinematics plus exact beliefs
        qhx = tuple(round(hx[i] * 10.0) for i in range(n_phi))
        qhv = tuple(round(hv[i] * 100.0) for i in range(n_phi))
        belt = tuple(B[i] for i in range(n_phi * n_phi))
        qkey = (t, round(rxr * 10.0), round(rvr * 100.0), qhx, qhv, belt)
        exact = (rxr, rvr, tuple(hx[i] for i in range(n_phi)),
                 tuple(hv[i] for i in range(n_phi)))
        bucket = self.memo.get(qkey)
        if bucket is not None:
            for ex, res in bucket:
                if ex == exact:
                    return res

        for p in range(n_phi):
            d_old[p] = _jsd(self.bel0, B + p * n_phi, n_phi)

        best_val_obj = None
        best_ctl = ()
        for i in range(self.n_r):
            ri = self.rtie[i]
            ar = self.racc[ri]
            vr2 = rvr + ar * dt
            if vr2 < -1e-12 or (vr2 > self.v_max + 1e-9 and vr2 >= rvr):
                continue
            if vr2 < self.v_min - 1e-9 and vr2 <= rvr:
                continue
            self.nodes += 1
            rx2 = rxr + rvr * dt + 0.5 * ar * dt * dt
            rx2u = rxr + rvr * self.dt_util + 0.5 * ar * self.dt_util * self.dt_util
            if vr2 < 0.0:
                vr2 = 0.0
            stage = 0.0
            for p in range(n_phi):
                for j in range(n_h):
                    a = self.hacc[j]
                    hx2u = hx[p] + hv[p] * self.dt_util + 0.5 * a * self.dt_util * self.dt_util
                    v2 = hv[p] + a * self.dt_util
                    hv2u[j] = v2 if v2 > 0.0 else 0.0
                    if self.same_lane:
                        g = rx2u - hx2u
                        gaps[j] = g if g > self.min_gap else self.min_gap
                    else:
                        gaps[j] = 0.0
                for j in range(n_h):
                    u_p[j] = _utility(self.grid_kind, self.vals[p], hv2u[j],
                                      gaps[j], self.same_lane, self.w_speed,
                                      self.w_headway, self.w_safety,
                                      self.v_ref, self.pen_distance,
                                      self.pen_cap)
                j_star = self.htie[0]
                bu = u_p[j_star]
                for jj in range(1, n_h):
                    j = self.htie[jj]
                    if u_p[j] > bu:
                        j_star = j
                        bu = u_p[j]
                wtot = 0.0
                for k in range(n_phi):
                    if k == p:
                        for j in range(n_h):
                            u_k[j] = u_p[j]
                    else:
                        for j in range(n_h):
                            u_k[j] = _utility(self.grid_kind, self.vals[k],
                                              hv2u[j], gaps[j], self.same_lane,
                                              self.w_speed, self.w_headway,
                                              self.w_safety, self.v_ref,
                                              self.pen_distance, self.pen_cap)
                    m = u_k[0]
                    for j in range(1, n_h):
                        if u_k[j] > m:
                            m = u_k[j]
                    denom = 0.0
                    for j in range(n_h):
                        lik = exp(self.beta * (u_k[j] - m))
                        if lik < 1e-12:
                            lik = 1e-12
                        denom += lik
                    lik = exp(self.beta * (u_k[j_star] - m))
                    if lik < 1e-12:
                        lik = 1e-12
                    lik = lik / denom
                    wk = B[p * n_phi + k] * lik
                    if wk > 0.0:
                        wtot += wk
                    w[k] = wk
                if wtot <= 0.0:
                    raise ValueError("all weights <= 0")
                s = 0.0
                for k in range(n_phi):
                    if w[k] > 0.0:
                        wk = w[k] / wtot
                    else:
                        wk = 0.0
                    if wk < self.floor:
                        wk = self.floor
                    probs[k] = wk
                    s += wk
                for k in range(n_phi):
                    probs[k] /= s
                d_new = _jsd(self.bel0, probs, n_phi)
                a_star = self.hacc[j_star]
                hx2s = hx[p] + hv[p] * dt + 0.5 * a_star * dt * dt
                hv2s = hv[p] + a_star * dt
                if hv2s < 0.0:
                    hv2s = 0.0
                r_safe = 0.0
                if self.same_lane:
                    g = (rx2 - hx2s) * self.sgn_h
                    if g < self.min_gap:
                        g = self.min_gap
                    q = self.d_safe / g
                    r_safe = -q * q
                stage += self.bel0[p] * (d_new - d_old[p] + self.lam * r_safe)
                best_hx[p] = hx2s
                best_hv[p] = hv2s
                for k in range(n_phi):
                    B_next[p * n_phi + k] = probs[k]
            stage -= self.effort * ar * ar
            for p in range(n_phi):
                hx_next[p] = best_hx[p]
                hv_next[p] = best_hv[p]
            rest = self._dfs(t + 1, rx2, vr2)
            total = stage + <double> rest[0]
            if best_val_obj is None or total > <double> best_val_obj:
                best_val_obj = total
                best_ctl = (ri,) + <tuple> rest[1]
        if best_val_obj is None:
            best_val_obj = 0.0
        res = (best_val_obj, best_ctl)
        if bucket is None:
            self.memo[qkey] = [(exact, res)]
        else:
            bucket.append((exact, res))
        return res


def probe_search(int T, double dt, double dt_util, double xr, double vr,
                 double hx0, double hv0, bel0, vals, int grid_kind, int same_lane,
                 double beta, double w_speed, double w_headway,
                 double w_safety, double v_ref, double pen_distance,
                 double pen_cap, double min_gap, robot_acc, robot_tie,
                 human_acc, human_tie, double lam, double d_safe,
                 double effort, double v_min, double v_max, double floor):
    cdef _ProbeSearcher ps = _ProbeSearcher()
    cdef int i, k
    ps.T = T
    ps.dt = dt
    ps.dt_util = dt_util
    ps.n_phi = len(vals)
    ps.n_h = len(human_acc)
    ps.n_r = len(robot_acc)
    if ps.n_phi > MAX_PHI or ps.n_h > MAX_ACT or ps.n_r > MAX_ACT:
        raise ValueError("grid sizes exceed compiled kernel limits")
    ps.grid_kind = grid_kind
    ps.same_lane = same_lane != 0
    ps.beta = beta
    ps.w_speed = w_speed
    ps.w_headway = w_headway
    ps.w_safety = w_safety
    ps.v_ref = v_ref
    ps.pen_distance = pen_distance
    ps.pen_cap = pen_cap
    ps.min_gap = min_gap
    ps.lam = lam
    ps.d_safe = d_safe
    ps.effort = effort
    ps.v_min = v_min
    ps.v_max = v_max
    ps.floor = floor
    for i in range(ps.n_phi):
        ps.bel0[i] = bel0[i]
        ps.vals[i] = vals[i]
    for i in range(ps.n_r):
        ps.racc[i] = robot_acc[i]
        ps.rtie[i] = robot_tie[i]
    for i in range(ps.n_h):
        ps.hacc[i] = human_acc[i]
        ps.htie[i] = human_tie[i]
    ps.sgn_h = 1.0 if xr >= hx0 else -1.0
    ps.memo = {}
    ps.nodes = 0
    ps._alloc()
    for i in range(ps.n_phi):
        ps.s_hx[i] = hx0
        ps.s_hv[i] = hv0
        for k in range(ps.n_phi):
            ps.s_bel[i * ps.n_phi + k] = bel0[k]
    value, ctl = ps._dfs(0, xr, vr)
    return value, ctl, ps.nodes


cdef class _InfluenceSearcher:
    cdef int T, n_h, n_r, n_bg, grid_kind, obj_kind
    cdef bint coupled
    cdef double dt, dt_util, val_hat, beta, w_speed, w_headway, w_safety, v_ref
    cdef double pen_distance, pen_cap, min_gap, lam, d_safe, effort, v_min, v_max, sgn_h
    cdef double obj_weight, obj_target0, obj_rate, obj_damp
    cdef double racc[MAX_ACT]
    cdef double hacc[MAX_ACT]
    cdef int rtie[MAX_ACT]
    cdef int htie[MAX_ACT]
    cdef double* bg_x
    cdef double* bg_v
    cdef double* bg_sgn
    cdef int* bg_same
    cdef object memo
    cdef long nodes

    def __cinit__(self):
        self.bg_x = NULL
        self.bg_v = NULL
        self.bg_sgn = NULL
        self.bg_same = NULL

    def __dealloc__(self):
        if self.bg_x != NULL:
            free(self.bg_x)
        if self.bg_v != NULL:
            free(self.bg_v)
        if self.bg_sgn != NULL:
            free(self.bg_sgn)
        if self.bg_same != NULL:
            free(self.bg_same)

    cdef tuple _dfs(self, int t, double rxr, double rvr, double hxp,
                    double hvp):
        cdef int i, j, jj, b, ri, best_j
        cdef double ar, vr2, rx2, rx2u, hx2u, hx2, hv2, v2, g, q, u, best_u
        cdef double tgt, d, r_obj, r_safe, stage, total, a, a_star

        if t == self.T:
            return (0.0, ())
        qkey = (t, round(rxr * 10.0), round(rvr * 100.0),
                round(hxp * 10.0), round(hvp * 100.0))
        exact = (rxr, rvr, hxp, hvp)
        bucket = self.memo.get(qkey)
        if bucket is not None:
            for ex, res in bucket:
                if ex == exact:
                    return res
        best_val_obj = None
        best_ctl = ()
        for i in range(self.n_r):
            ri = self.rtie[i]
            ar = self.racc[ri]
            vr2 = rvr + ar * self.dt
            if vr2 < -1e-12 or (vr2 > self.v_max + 1e-9 and vr2 >= rvr):
                continue
            if vr2 < self.v_min - 1e-9 and vr2 <= rvr:
                continue
            self.nodes += 1
            rx2 = rxr + rvr * self.dt + 0.5 * ar * self.dt * self.dt
            if vr2 < 0.0:
                vr2 = 0.0
            if self.coupled:
                rx2u = rxr + rvr * self.dt_util + 0.5 * ar * self.dt_util * self.dt_util
                best_j = -1
                best_u = 0.0
                for jj in range(self.n_h):
                    j = self.htie[jj]
                    a = self.hacc[j]
                    hx2u = hxp + hvp * self.dt_util + 0.5 * a * self.dt_util * self.dt_util
                    v2 = hvp + a * self.dt_util
                    if v2 < 0.0:
                        v2 = 0.0
                    g = rx2u - hx2u
                    if g < self.min_gap:
                        g = self.min_gap
                    u = _utility(self.grid_kind, self.val_hat, v2, g, True,
                                 self.w_speed, self.w_headway, self.w_safety,
                                 self.v_ref, self.pen_distance, self.pen_cap)
                    if best_j < 0 or u > best_u:
                        best_j = j
                        best_u = u
                a_star = self.hacc[best_j]
                hx2 = hxp + hvp * self.dt + 0.5 * a_star * self.dt * self.dt
                hv2 = hvp + a_star * self.dt
                if hv2 < 0.0:
                    hv2 = 0.0
            else:
                hx2 = hxp + hvp * self.dt
                hv2 = hvp
            tgt = self.obj_target0 + self.obj_rate * (t + 1) * self.dt
            if self.obj_kind == 1:
                d = vr2 - tgt
                r_obj = -self.obj_weight * d * d
            elif self.obj_kind == 2:
                d = rx2 - tgt
                r_obj = -self.obj_weight * d * d
                d = vr2 - self.obj_rate
                r_obj -= self.obj_damp * d * d
            else:
                r_obj = 0.0
            r_safe = 0.0
            if self.coupled:
                g = (rx2 - hx2) * self.sgn_h
                if g < self.min_gap:
                    g = self.min_gap
                q = self.d_safe / g
                r_safe -= q * q
            for b in range(self.n_bg):
                if self.bg_same[b]:
                    g = (self.bg_x[b] + self.bg_v[b] * (t + 1) * self.dt - rx2) * self.bg_sgn[b]
                    if g < self.min_gap:
                        g = self.min_gap
                    q = self.d_safe / g
                    r_safe -= q * q
            stage = r_obj + self.lam * r_safe - self.effort * ar * ar
            rest = self._dfs(t + 1, rx2, vr2, hx2, hv2)
            total = stage + <double> rest[0]
            if best_val_obj is None or total > <double> best_val_obj:
                best_val_obj = total
                best_ctl = (ri,) + <tuple> rest[1]
        if best_val_obj is None:
            best_val_obj = 0.0
        res = (best_val_obj, best_ctl)
        if bucket is None:
            self.memo[qkey] = [(exact, res)]
        else:
            bucket.append((exact, res))
        return res


def influence_search(int T, double dt, double dt_util, double xr, double vr,
                     double hx0, double hv0, int coupled, double val_hat, int grid_kind,
                     double beta, double w_speed, double w_headway,
                     double w_safety, double v_ref, double pen_distance,
                     double pen_cap, double min_gap, bg_x, bg_v, bg_same,
                     int obj_kind, double obj_weight, double obj_target0,
                     double obj_rate, double obj_damp, robot_acc, robot_tie,
                     human_acc, human_tie, double lam, double d_safe,
                     double effort, double v_min, double v_max):
    cdef _InfluenceSearcher s = _InfluenceSearcher()
    cdef int i
    s.T = T
    s.dt = dt
    s.dt_util = dt_util
    s.n_h = len(human_acc)
    s.n_r = len(robot_acc)
    s.n_bg = len(bg_x)
    if s.n_h > MAX_ACT or s.n_r > MAX_ACT:
        raise ValueError("action grids exceed compiled kernel limits")
    s.coupled = coupled != 0
    s.val_hat = val_hat
    s.grid_kind = grid_kind
    s.beta = beta
    s.w_speed = w_speed
    s.w_headway = w_headway
    s.w_safety = w_safety
    s.v_ref = v_ref
    s.pen_distance = pen_distance
    s.pen_cap = pen_cap
    s.min_gap = min_gap
    s.obj_kind = obj_kind
    s.obj_weight = obj_weight
    s.obj_target0 = obj_target0
    s.obj_rate = obj_rate
    s.obj_damp = obj_damp
    s.lam = lam
    s.d_safe = d_safe
    s.effort = effort
    s.v_min = v_min
    s.v_max = v_max
    s.sgn_h = 1.0 if xr >= hx0 else -1.0
    if s.n_bg > 0:
        s.bg_x = <double*> malloc(s.n_bg * sizeof(double))
        s.bg_v = <double*> malloc(s.n_bg * sizeof(double))
        s.bg_sgn = <double*> malloc(s.n_bg * sizeof(double))
        s.bg_same = <int*> malloc(s.n_bg * sizeof(int))
        if s.bg_x == NULL or s.bg_v == NULL or s.bg_same == NULL or s.bg_sgn == NULL:
            raise MemoryError()
        for i in range(s.n_bg):
            s.bg_x[i] = bg_x[i]
            s.bg_v[i] = bg_v[i]
            s.bg_sgn[i] = 1.0 if bg_x[i] >= xr else -1.0
            s.bg_same[i] = bg_same[i]
    for i in range(s.n_r):
        s.racc[i] = robot_acc[i]
        s.rtie[i] = robot_tie[i]
    for i in range(s.n_h):
        s.hacc[i] = human_acc[i]
        s.htie[i] = human_tie[i]
    s.memo = {}
    s.nodes = 0
    value, ctl = s._dfs(0, xr, vr, hx0, hv0)
    return value, ctl, s.nodes
