# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels: hot twin of _kernels_py (same API, same semantics).

See _kernels_py for the contract. The torus sweep parallelizes over grid
points (disjoint writes, read-only shared inputs), so results do not depend
on the thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin, exp, floor, fmod, isfinite

cnp.import_array()

BACKEND_NAME = "cython"

cdef double TWO_PI = 6.283185307179586476925286766559

cdef enum:
    MAX_M = 8        # torus dimension cap (grids beyond this are impractical)
    MAX_PAIRS = 56   # m * (m - 1) for m = MAX_M


cdef inline double _wrap_2pi(double x) noexcept nogil:
    cdef double t = fmod(x, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return t


cdef inline double _rule_eval(int kind, double offset, const double* table, int tn,
                              double s) noexcept nogil:
    cdef double t, frac
    cdef long i0
    if kind == 0:
        return cos(s)
    if kind == 1:
        return cos(s - offset)
    t = fmod(s, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    t = t * tn / TWO_PI
    i0 = <long>floor(t)
    frac = t - i0
    i0 = i0 % tn
    return table[i0] * (1.0 - frac) + table[(i0 + 1) % tn] * frac


# -- full network ------------------------------------------------------------


cdef void _net_rhs(const double* theta, const double* kmat, const long* adj,
                   const double* freqs, double gamma, double mu,
                   int kind, double offset, const double* table, int tn,
                   int n, double* dtheta, double* dk) noexcept nogil:
    cdef int i, j
    cdef double acc, d
    for i in range(n):
        acc = freqs[i]
        for j in range(n):
            if adj[i * n + j] != 0:
                d = theta[j] - theta[i]
                acc += kmat[i * n + j] * sin(d)
                dk[i * n + j] = -gamma * kmat[i * n + j] + mu * _rule_eval(kind, offset, table, tn, d)
        dtheta[i] = acc


cdef void _stage_state(const double* theta, const double* kmat, const long* adj,
                       const double* dtheta, const double* dk, double a,
                       int n, double* theta_out, double* k_out) noexcept nogil:
    cdef int i, j
    for i in range(n):
        theta_out[i] = theta[i] + a * dtheta[i]
        for j in range(n):
            if adj[i * n + j] != 0:
                k_out[i * n + j] = kmat[i * n + j] + a * dk[i * n + j]


def integrate_network(theta0, k0, adj, freqs, double gamma, double mu,
                      int rule_kind, double rule_offset, rule_table,
                      double step, long n_steps, long record_stride):
    if n_steps % record_stride != 0:
        raise ValueError("n_steps must be a multiple of record_stride")

    cdef cnp.ndarray[double, ndim=1] theta = np.mod(np.asarray(theta0, dtype=np.float64), TWO_PI)
    cdef cnp.ndarray[double, ndim=2] kmat = np.array(k0, dtype=np.float64, copy=True)
    cdef cnp.ndarray[long, ndim=2] adj_c = np.ascontiguousarray(adj, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] freqs_c = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] table_c = np.ascontiguousarray(rule_table, dtype=np.float64)

    cdef int n = theta.shape[0]
    cdef int tn = table_c.shape[0]
    cdef long n_records = n_steps // record_stride + 1
    cdef cnp.ndarray[double, ndim=2] thetas = np.zeros((n_records, n))
    cdef cnp.ndarray[double, ndim=3] ks = np.zeros((n_records, n, n))

    # stage buffers: theta stages t1..t4, coupling stages c1..c4, trial states
    cdef cnp.ndarray[double, ndim=1] buf_t = np.zeros(4 * n)
    cdef cnp.ndarray[double, ndim=1] buf_c = np.zeros(4 * n * n)
    cdef cnp.ndarray[double, ndim=1] tmp_t = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] tmp_c = np.zeros(n * n)

    cdef double* th = &theta[0]
    cdef double* km = &kmat[0, 0]
    cdef long* ad = &adj_c[0, 0]
    cdef double* fr = &freqs_c[0]
    cdef double* tb = NULL
    if tn > 0:
        tb = &table_c[0]
    cdef double* t1 = &buf_t[0]
    cdef double* t2 = t1 + n
    cdef double* t3 = t2 + n
    cdef double* t4 = t3 + n
    cdef double* c1 = &buf_c[0]
    cdef double* c2 = c1 + n * n
    cdef double* c3 = c2 + n * n
    cdef double* c4 = c3 + n * n
    cdef double* tt = &tmp_t[0]
    cdef double* tc = &tmp_c[0]

    cdef long rec, sub
    cdef int i, j, ok
    cdef double h = step
    cdef long n_valid = 1

    for i in range(n):
        thetas[0, i] = theta[i]
        for j in range(n):
            ks[0, i, j] = kmat[i, j]

    with nogil:
        for rec in range(1, n_records):
            for sub in range(record_stride):
                _net_rhs(th, km, ad, fr, gamma, mu, rule_kind, rule_offset, tb, tn, n, t1, c1)
                _stage_state(th, km, ad, t1, c1, 0.5 * h, n, tt, tc)
                _net_rhs(tt, tc, ad, fr, gamma, mu, rule_kind, rule_offset, tb, tn, n, t2, c2)
                _stage_state(th, km, ad, t2, c2, 0.5 * h, n, tt, tc)
                _net_rhs(tt, tc, ad, fr, gamma, mu, rule_kind, rule_offset, tb, tn, n, t3, c3)
                _stage_state(th, km, ad, t3, c3, h, n, tt, tc)
                _net_rhs(tt, tc, ad, fr, gamma, mu, rule_kind, rule_offset, tb, tn, n, t4, c4)
                for i in range(n):
                    th[i] = _wrap_2pi(th[i] + (h / 6.0) * (t1[i] + 2.0 * t2[i] + 2.0 * t3[i] + t4[i]))
                    for j in range(n):
                        if ad[i * n + j] != 0:
                            km[i * n + j] = km[i * n + j] + (h / 6.0) * (
                                c1[i * n + j] + 2.0 * c2[i * n + j] + 2.0 * c3[i * n + j] + c4[i * n + j])
            ok = 1
            for i in range(n):
                thetas[rec, i] = th[i]
                if not isfinite(th[i]):
                    ok = 0
                for j in range(n):
                    ks[rec, i, j] = km[i * n + j]
                    if not isfinite(km[i * n + j]):
                        ok = 0
            if not ok:
                break
            n_valid = rec + 1

    return thetas, ks, int(n_valid)


# -- torus iteration ----------------------------------------------------------


cdef struct SweepCtx:
    const double* agg        # (G, n_pairs) C-order
    const long* shape        # (m,)
    const long* strides      # (m,) row-major strides in grid points
    int m
    int n_pairs
    const long* pair_s
    const long* pair_r
    const double* wbar
    double gamma
    double mu
    int kind
    double offset
    const double* table
    int tn
    double h
    long n_sub
    double* out              # (G, n_pairs)


cdef void _point_rhs(SweepCtx* c, double s_now, const double* psi,
                     double* dpsi, double* dquad) noexcept nogil:
    cdef double u_at[MAX_PAIRS]
    cdef long i0[MAX_M]
    cdef double frac[MAX_M]
    cdef int a, p, bit
    cdef long corner, idx, flat
    cdef double t, weight, diff, decay
    cdef int m = c.m

    for a in range(m):
        t = psi[a] * c.shape[a] / TWO_PI
        i0[a] = <long>floor(t)
        frac[a] = t - floor(t)
    for p in range(c.n_pairs):
        u_at[p] = 0.0
    for corner in range(1 << m):
        weight = 1.0
        flat = 0
        for a in range(m):
            bit = (corner >> a) & 1
            idx = (i0[a] + bit) % c.shape[a]
            if idx < 0:
                idx += c.shape[a]
            flat += idx * c.strides[a]
            weight *= frac[a] if bit else 1.0 - frac[a]
        for p in range(c.n_pairs):
            u_at[p] += weight * c.agg[flat * c.n_pairs + p]

    for a in range(m):
        dpsi[a] = -c.wbar[a]
    decay = exp(-c.gamma * s_now) * c.mu
    for p in range(c.n_pairs):
        diff = psi[c.pair_r[p]] - psi[c.pair_s[p]]
        dpsi[c.pair_s[p]] -= u_at[p] * sin(diff)
        dquad[p] = decay * _rule_eval(c.kind, c.offset, c.table, c.tn, diff)


cdef void _sweep_point(SweepCtx* c, long g) noexcept nogil:
    cdef double psi[MAX_M]
    cdef double quad[MAX_PAIRS]
    cdef double tmp_psi[MAX_M]
    cdef double p1[MAX_M]
    cdef double p2[MAX_M]
    cdef double p3[MAX_M]
    cdef double p4[MAX_M]
    cdef double q1[MAX_PAIRS]
    cdef double q2[MAX_PAIRS]
    cdef double q3[MAX_PAIRS]
    cdef double q4[MAX_PAIRS]
    cdef int a, p
    cdef long rem = g
    cdef long sub
    cdef double s_now = 0.0
    cdef double h = c.h
    cdef int m = c.m

    for a in range(m):
        psi[a] = TWO_PI * (rem // c.strides[a]) / c.shape[a]
        rem = rem % c.strides[a]
    for p in range(c.n_pairs):
        quad[p] = 0.0

    for sub in range(c.n_sub):
        _point_rhs(c, s_now, psi, p1, q1)
        for a in range(m):
            tmp_psi[a] = psi[a] + 0.5 * h * p1[a]
        _point_rhs(c, s_now + 0.5 * h, tmp_psi, p2, q2)
        for a in range(m):
            tmp_psi[a] = psi[a] + 0.5 * h * p2[a]
        _point_rhs(c, s_now + 0.5 * h, tmp_psi, p3, q3)
        for a in range(m):
            tmp_psi[a] = psi[a] + h * p3[a]
        _point_rhs(c, s_now + h, tmp_psi, p4, q4)
        for a in range(m):
            psi[a] = psi[a] + (h / 6.0) * (p1[a] + 2.0 * p2[a] + 2.0 * p3[a] + p4[a])
        for p in range(c.n_pairs):
            quad[p] = quad[p] + (h / 6.0) * (q1[p] + 2.0 * q2[p] + 2.0 * q3[p] + q4[p])
        s_now = s_now + h

    for p in range(c.n_pairs):
        c.out[g * c.n_pairs + p] = quad[p]


def torus_sweep(agg, grid_shape, pair_s, pair_r, wbar, double gamma, double mu,
                int rule_kind, double rule_offset, rule_table,
                double horizon, double step, int num_threads=0):
    cdef cnp.ndarray[double, ndim=2] agg_c = np.ascontiguousarray(agg, dtype=np.float64)
    cdef cnp.ndarray[long, ndim=1] shape_c = np.ascontiguousarray(grid_shape, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] ps_c = np.ascontiguousarray(pair_s, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] pr_c = np.ascontiguousarray(pair_r, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] wbar_c = np.ascontiguousarray(wbar, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] table_c = np.ascontiguousarray(rule_table, dtype=np.float64)

    cdef int m = shape_c.shape[0]
    cdef int n_pairs = ps_c.shape[0]
    if m > MAX_M:
        raise ValueError(f"torus dimension {m} exceeds compiled cap {MAX_M}")
    if n_pairs > MAX_PAIRS:
        raise ValueError(f"pair count {n_pairs} exceeds compiled cap {MAX_PAIRS}")

    cdef cnp.ndarray[long, ndim=1] strides = np.ones(m, dtype=np.int64)
    cdef int a
    for a in range(m - 2, -1, -1):
        strides[a] = strides[a + 1] * shape_c[a + 1]
    cdef long g_count = strides[0] * shape_c[0]

    if n_pairs == 0:
        return np.zeros((g_count, 0))
    if agg_c.shape[0] != g_count or agg_c.shape[1] != n_pairs:
        raise ValueError(
            f"agg shape {(agg_c.shape[0], agg_c.shape[1])} does not match grid {g_count} x {n_pairs}")

    cdef cnp.ndarray[double, ndim=2] out = np.zeros((g_count, n_pairs))
    cdef long n_sub = max(1, <long>np.ceil(horizon / step))

    cdef SweepCtx ctx
    ctx.agg = &agg_c[0, 0]
    ctx.shape = &shape_c[0]
    ctx.strides = &strides[0]
    ctx.m = m
    ctx.n_pairs = n_pairs
    ctx.pair_s = &ps_c[0]
    ctx.pair_r = &pr_c[0]
    ctx.wbar = &wbar_c[0]
    ctx.gamma = gamma
    ctx.mu = mu
    ctx.kind = rule_kind
    ctx.offset = rule_offset
    ctx.table = NULL
    ctx.tn = table_c.shape[0]
    if ctx.tn > 0:
        ctx.table = &table_c[0]
    ctx.h = horizon / n_sub
    ctx.n_sub = n_sub
    ctx.out = &out[0, 0]

    cdef long g
    if num_threads > 0:
        for g in prange(g_count, nogil=True, schedule="static", num_threads=num_threads):
            _sweep_point(&ctx, g)
    else:
        for g in prange(g_count, nogil=True, schedule="static"):
            _sweep_point(&ctx, g)
    return out
