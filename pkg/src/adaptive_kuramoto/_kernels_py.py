"""Pure-numpy numeric kernels: fallback twin of the compiled extension.

Both backends expose the same two entry points with identical semantics:

``integrate_network``
    Fixed-step RK4 for the full adaptive network
        dtheta_i = w_i + sum_j a_ij k_ij sin(theta_j - theta_i)
        dk_ij    = -gamma k_ij + mu Gamma(theta_j - theta_i)   on edges only;
    non-edge coupling entries are never read or written. Phases are wrapped
    to [0, 2 pi) after every step. Snapshots are taken every ``record_stride``
    steps (initial state included); integration aborts at the first recorded
    non-finite state.

``torus_sweep``
    One pass of the successive approximation for the invariant torus. For
    every grid point phi of the uniform grid on [0, 2 pi)^m it integrates the
    time-reversed drift
        dpsi/ds = -(wbar_s + sum_pairs agg_(s,r)(psi) sin(psi_r - psi_s))
    from psi(0) = phi over s in [0, horizon] while accumulating the quadrature
        I_p = int_0^horizon e^(-gamma s) mu Gamma(psi_r - psi_s) ds
    per ordered cluster pair p = (s, r), with RK4 on the augmented state so
    the quadrature weights are Simpson-consistent with the trajectory stages.
    ``agg`` holds the representative-received per-pair sums of the previous
    iterate on the grid and is evaluated by periodic multilinear interpolation.

Rules are encoded as (kind, offset, table): kind 0 is cos(s), kind 1 is
cos(s - offset), kind 2 interpolates ``table`` linearly and periodically.

The ``num_threads`` argument is accepted for signature compatibility; this
backend is single-threaded.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"
TWO_PI = 2.0 * np.pi


def rule_values(kind: int, offset: float, table: np.ndarray, s: np.ndarray) -> np.ndarray:
    if kind == 0:
        return np.cos(s)
    if kind == 1:
        return np.cos(s - offset)
    n = table.size
    t = np.mod(s, TWO_PI) * (n / TWO_PI)
    base = np.floor(t)
    i0 = base.astype(np.int64) % n
    frac = t - base
    return table[i0] * (1.0 - frac) + table[(i0 + 1) % n] * frac


# -- full network ------------------------------------------------------------


def _network_rhs(theta, kmat, mask, freqs, gamma, mu, kind, offset, table):
    diff = theta[None, :] - theta[:, None]  # diff[i, j] = theta_j - theta_i
    dtheta = freqs + np.sum(mask * kmat * np.sin(diff), axis=1)
    dk = np.where(mask, -gamma * kmat + mu * rule_values(kind, offset, table, diff), 0.0)
    return dtheta, dk


def integrate_network(
    theta0: np.ndarray,
    k0: np.ndarray,
    adj: np.ndarray,
    freqs: np.ndarray,
    gamma: float,
    mu: float,
    rule_kind: int,
    rule_offset: float,
    rule_table: np.ndarray,
    step: float,
    n_steps: int,
    record_stride: int,
):
    """Returns (thetas, ks, n_valid): snapshot arrays of shape
    (n_records, N) / (n_records, N, N) and the count of finite records."""
    if n_steps % record_stride != 0:
        raise ValueError("n_steps must be a multiple of record_stride")
    n = theta0.shape[0]
    n_records = n_steps // record_stride + 1
    thetas = np.zeros((n_records, n))
    ks = np.zeros((n_records, n, n))
    mask = adj != 0

    theta = np.mod(np.asarray(theta0, dtype=np.float64), TWO_PI)
    kmat = np.array(k0, dtype=np.float64, copy=True)
    thetas[0], ks[0] = theta, kmat
    n_valid = 1

    h = step
    for rec in range(1, n_records):
        for _ in range(record_stride):
            t1, k1 = _network_rhs(theta, kmat, mask, freqs, gamma, mu, rule_kind, rule_offset, rule_table)
            t2, k2 = _network_rhs(theta + 0.5 * h * t1, kmat + 0.5 * h * k1, mask, freqs, gamma, mu, rule_kind, rule_offset, rule_table)
            t3, k3 = _network_rhs(theta + 0.5 * h * t2, kmat + 0.5 * h * k2, mask, freqs, gamma, mu, rule_kind, rule_offset, rule_table)
            t4, k4 = _network_rhs(theta + h * t3, kmat + h * k3, mask, freqs, gamma, mu, rule_kind, rule_offset, rule_table)
            theta = np.mod(theta + (h / 6.0) * (t1 + 2.0 * t2 + 2.0 * t3 + t4), TWO_PI)
            kmat = kmat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        thetas[rec], ks[rec] = theta, kmat
        if not (np.isfinite(theta).all() and np.isfinite(kmat).all()):
            break
        n_valid = rec + 1
    return thetas, ks, n_valid


# -- torus iteration ----------------------------------------------------------


def grid_points(grid_shape) -> np.ndarray:
    """Coordinates of the uniform periodic grid, row-major: (G, m) array with
    axis a running over 2 pi k / R_a, k = 0..R_a-1."""
    axes = [TWO_PI * np.arange(r) / r for r in grid_shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([ax.ravel() for ax in mesh], axis=-1)


def interp_periodic(values: np.ndarray, grid_shape, pts: np.ndarray) -> np.ndarray:
    """Periodic multilinear interpolation.

    values: (G, C) rows over the row-major grid of shape grid_shape;
    pts: (P, m) arbitrary angles. Returns (P, C).
    """
    grid_shape = np.asarray(grid_shape, dtype=np.int64)
    m = grid_shape.size
    strides = np.ones(m, dtype=np.int64)
    for a in range(m - 2, -1, -1):
        strides[a] = strides[a + 1] * grid_shape[a + 1]

    t = pts * (grid_shape / TWO_PI)
    base = np.floor(t)
    i0 = base.astype(np.int64)
    frac = t - base

    out = np.zeros((pts.shape[0], values.shape[1]))
    for corner in range(1 << m):
        flat = np.zeros(pts.shape[0], dtype=np.int64)
        weight = np.ones(pts.shape[0])
        for a in range(m):
            bit = (corner >> a) & 1
            idx = np.mod(i0[:, a] + bit, grid_shape[a])
            flat += idx * strides[a]
            weight = weight * (frac[:, a] if bit else 1.0 - frac[:, a])
        out += weight[:, None] * values[flat, :]
    return out


def torus_sweep(
    agg: np.ndarray,
    grid_shape,
    pair_s: np.ndarray,
    pair_r: np.ndarray,
    wbar: np.ndarray,
    gamma: float,
    mu: float,
    rule_kind: int,
    rule_offset: float,
    rule_table: np.ndarray,
    horizon: float,
    step: float,
    num_threads: int = 0,
) -> np.ndarray:
    """One successive-approximation pass; returns the per-pair new iterate
    (G, n_pairs) on the same grid."""
    grid_shape = tuple(int(r) for r in grid_shape)
    n_pairs = pair_s.shape[0]
    psi = grid_points(grid_shape)
    g_count = psi.shape[0]
    quad = np.zeros((g_count, n_pairs))

    # scatter matrix: contribution of pair (s, r) lands in component s of dpsi
    m = len(grid_shape)
    scatter = np.zeros((n_pairs, m))
    scatter[np.arange(n_pairs), pair_s] = 1.0

    n_sub = max(1, int(np.ceil(horizon / step)))
    h = horizon / n_sub

    def rhs(s_now, psi_now):
        u_at = interp_periodic(agg, grid_shape, psi_now)
        diff = psi_now[:, pair_r] - psi_now[:, pair_s]
        dpsi = -(wbar + (u_at * np.sin(diff)) @ scatter)
        dquad = (np.exp(-gamma * s_now) * mu) * rule_values(rule_kind, rule_offset, rule_table, diff)
        return dpsi, dquad

    s_now = 0.0
    for _ in range(n_sub):
        p1, q1 = rhs(s_now, psi)
        p2, q2 = rhs(s_now + 0.5 * h, psi + 0.5 * h * p1)
        p3, q3 = rhs(s_now + 0.5 * h, psi + 0.5 * h * p2)
        p4, q4 = rhs(s_now + h, psi + h * p3)
        psi = psi + (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        quad = quad + (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        s_now += h
    return quad
