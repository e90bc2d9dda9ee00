"""Time integration of the adaptive network and its cluster reduction.

Full system (receiver-row adjacency a, plasticity rule Gamma):

    dtheta_i/dt = w_i + sum_j a_ij k_ij sin(theta_j - theta_i)
    dk_ij/dt    = -gamma k_ij + mu Gamma(theta_j - theta_i)    on edges.

Coupling entries on non-edges are never read or integrated. Integration is
fixed-step RK4 (default step 0.01) with snapshots every ``record_stride``
steps; phases are stored wrapped to [0, 2 pi).

Given a partition, the intra-cluster errors are e_i = theta_i - theta_{i_s}
for non-representative nodes i of P_s, wrapped to (-pi, pi] (ties resolved
toward +pi), listed in ascending node order.

The reduced system lives on the cluster phases phi in T^m and the
inter-cluster couplings along the canonical edge order:

    dphi_s/dt  = wbar_s + sum_{r != s} sum_{j in P_r} a_{i_s j} k_{i_s j}
                 sin(phi_r - phi_s)
    dk_ij/dt   = -gamma k_ij + mu Gamma(phi_r - phi_s)   for (i, j) inter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._kernels_py import rule_values
from .conditions import LearningRule, PlasticityParams
from .network import (
    ClusterPartition,
    EdgeStructure,
    OscillatorNetwork,
    compute_cardinalities,
    inter_cluster_structure,
)

__all__ = [
    "NetworkState",
    "Trajectory",
    "ReducedState",
    "IntegrationBlowup",
    "initial_state",
    "random_couplings",
    "rhs_full",
    "rhs_reduced",
    "inter_coupling_matrix",
    "inter_forcing_vector",
    "simulate",
    "switch_topology_scenario",
    "error_metrics",
    "ErrorMetrics",
    "two_oscillator_static_analysis",
    "TwoOscillatorResult",
    "simulate_static_pair",
    "trajectory_to_csv",
    "cluster_errors",
    "wrap_to_2pi",
    "wrap_to_pi",
]

TWO_PI = 2.0 * np.pi


def wrap_to_2pi(x):
    """Wrap angles to [0, 2 pi)."""
    return np.mod(x, TWO_PI)


def wrap_to_pi(x):
    """Wrap angle differences to (-pi, pi]; +pi and -pi both map to +pi."""
    x = np.asarray(x, dtype=np.float64)
    return x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)


@dataclass(frozen=True)
class NetworkState:
    """Instantaneous state: wrapped phases and the coupling matrix."""

    phases: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=np.float64)
        couplings = np.asarray(self.couplings, dtype=np.float64)
        n = phases.shape[0]
        if phases.ndim != 1:
            raise ValueError("phases must be a 1-D array")
        if couplings.shape != (n, n):
            raise ValueError(f"couplings must have shape ({n}, {n}), got {couplings.shape}")
        if not np.isfinite(phases).all() or not np.isfinite(couplings).all():
            raise ValueError("state entries must be finite")
        wrapped = wrap_to_2pi(phases)
        wrapped.setflags(write=False)
        frozen_k = couplings.copy()
        frozen_k.setflags(write=False)
        object.__setattr__(self, "phases", wrapped)
        object.__setattr__(self, "couplings", frozen_k)


def initial_state(net: OscillatorNetwork, phases, couplings=None) -> NetworkState:
    """Assemble a state for ``net``; coupling entries off the edge set must be 0."""
    state = NetworkState(
        np.asarray(phases, dtype=np.float64),
        np.zeros((net.n_nodes, net.n_nodes)) if couplings is None else np.asarray(couplings, dtype=np.float64),
    )
    if state.phases.shape[0] != net.n_nodes:
        raise ValueError(f"expected {net.n_nodes} phases, got {state.phases.shape[0]}")
    off_edges = (net.adjacency == 0) & (state.couplings != 0.0)
    if off_edges.any():
        i, j = np.argwhere(off_edges)[0]
        raise ValueError(f"coupling ({i}, {j}) is nonzero but there is no such edge")
    return state


def random_couplings(net: OscillatorNetwork, low: float, high: float, seed: int) -> np.ndarray:
    """Uniform couplings on the edges, zeros elsewhere.

    Draws one value per edge in row-major edge order from a seeded generator,
    so a given (network, seed, range) always yields the same matrix.
    """
    if high < low:
        raise ValueError("need low <= high")
    rng = np.random.default_rng(seed)
    out = np.zeros((net.n_nodes, net.n_nodes))
    recv, src = np.nonzero(net.adjacency)
    out[recv, src] = rng.uniform(low, high, size=recv.size)
    return out


class IntegrationBlowup(RuntimeError):
    """Non-finite state detected; carries the surviving trajectory prefix."""

    def __init__(self, last_valid_time: float, trajectory: "Trajectory"):
        super().__init__(
            f"integration produced a non-finite state after t = {last_valid_time}"
        )
        self.last_valid_time = last_valid_time
        self.trajectory = trajectory


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: times with uniform stride, phases, coupling snapshots.

    ``errors`` (when a partition was given) holds the wrapped intra-cluster
    error coordinates for ``error_nodes`` (non-representatives, ascending).
    ``k_edges`` lists the (receiver, source) pairs whose couplings are
    meaningful for this run; for a topology switch it is the union of both
    edge sets (entries for removed edges stay frozen at their switch-time
    values).
    """

    times: np.ndarray
    phases: np.ndarray
    couplings: np.ndarray
    network: OscillatorNetwork
    partition: ClusterPartition | None
    errors: np.ndarray | None
    error_nodes: tuple[int, ...]
    k_edges: tuple[tuple[int, int], ...]

    @property
    def n_records(self) -> int:
        return self.times.shape[0]

    def final_state(self) -> NetworkState:
        return NetworkState(self.phases[-1], self.couplings[-1])


def cluster_errors(part: ClusterPartition, phases: np.ndarray) -> np.ndarray:
    """Wrapped error coordinates theta_i - theta_{i_s} for non-representatives.

    ``phases`` may be (N,) or (records, N); the error axis is last either way.
    """
    phases = np.asarray(phases, dtype=np.float64)
    cluster_of = part.cluster_of()
    reps = np.asarray(part.representatives)
    nodes = np.asarray(part.non_representatives(), dtype=np.int64)
    ref = reps[cluster_of[nodes]]
    return wrap_to_pi(phases[..., nodes] - phases[..., ref])


def _record_times(n_steps: int, step: float, record_stride: int) -> np.ndarray:
    n_records = n_steps // record_stride + 1
    return np.arange(n_records) * (record_stride * step)


def _resolve_steps(t_end: float, step: float, record_stride: int) -> int:
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if step <= 0:
        raise ValueError("step must be > 0")
    if record_stride < 1 or int(record_stride) != record_stride:
        raise ValueError("record_stride must be a positive integer")
    n_steps = int(round(t_end / step))
    return n_steps - n_steps % record_stride


def _run(
    net: OscillatorNetwork,
    pp: PlasticityParams,
    theta0: np.ndarray,
    k0: np.ndarray,
    n_steps: int,
    step: float,
    record_stride: int,
):
    kind, offset, table = pp.rule.kernel_encoding()
    return _backend.integrate_network(
        theta0, k0, net.adjacency, net.frequencies,
        pp.gamma, pp.mu, kind, offset, table,
        step, n_steps, record_stride,
    )


def _build_trajectory(times, thetas, ks, net, part, k_edges) -> Trajectory:
    if part is not None:
        errors = cluster_errors(part, thetas)
        error_nodes = part.non_representatives()
    else:
        errors, error_nodes = None, ()
    return Trajectory(
        times=times,
        phases=thetas,
        couplings=ks,
        network=net,
        partition=part,
        errors=errors,
        error_nodes=error_nodes,
        k_edges=k_edges,
    )


def simulate(
    net: OscillatorNetwork,
    pp: PlasticityParams,
    initial: NetworkState,
    t_end: float,
    step: float = 0.01,
    record_stride: int = 10,
    partition: ClusterPartition | None = None,
) -> Trajectory:
    """Integrate the full network over [0, t_end].

    The step count is rounded to a whole number of record strides so the
    recorded times keep a uniform spacing of record_stride * step; t_end = 0
    yields the initial state only. Raises IntegrationBlowup on a non-finite
    state, with the finite prefix attached.
    """
    if initial.phases.shape[0] != net.n_nodes:
        raise ValueError("initial state size does not match the network")
    if partition is not None and partition.n_nodes != net.n_nodes:
        raise ValueError("partition does not match the network")
    off_edges = (net.adjacency == 0) & (initial.couplings != 0.0)
    if off_edges.any():
        i, j = np.argwhere(off_edges)[0]
        raise ValueError(f"coupling ({i}, {j}) is nonzero but there is no such edge")

    n_steps = _resolve_steps(t_end, step, record_stride)
    thetas, ks, n_valid = _run(
        net, pp, initial.phases, initial.couplings, n_steps, step, record_stride
    )
    times = _record_times(n_steps, step, record_stride)
    k_edges = tuple((int(i), int(j)) for i, j in net.edges())
    if n_valid < times.shape[0]:
        prefix = _build_trajectory(
            times[:n_valid], thetas[:n_valid], ks[:n_valid], net, partition, k_edges
        )
        raise IntegrationBlowup(float(times[n_valid - 1]), prefix)
    return _build_trajectory(times, thetas, ks, net, partition, k_edges)


def switch_topology_scenario(
    net_before: OscillatorNetwork,
    net_after: OscillatorNetwork,
    pp: PlasticityParams,
    initial: NetworkState,
    t_switch: float,
    t_end: float,
    step: float = 0.01,
    record_stride: int = 10,
    partition: ClusterPartition | None = None,
) -> Trajectory:
    """Integrate with ``net_before`` up to t_switch, then with ``net_after``.

    Both networks must share the node count and frequencies. At the switch,
    couplings on removed edges freeze at their current values (no longer read
    or integrated) and couplings on added edges start from 0. t_switch is
    rounded to the record grid. A switch at or after t_end degenerates to a
    plain run of ``net_before``.
    """
    if net_before.n_nodes != net_after.n_nodes:
        raise ValueError("networks must have the same node count")
    if not np.array_equal(net_before.frequencies, net_after.frequencies):
        raise ValueError("networks must share natural frequencies")

    if t_switch >= t_end:
        return simulate(net_before, pp, initial, t_end, step, record_stride, partition)

    n1 = _resolve_steps(t_switch, step, record_stride)
    n2 = _resolve_steps(t_end, step, record_stride) - n1

    thetas1, ks1, v1 = _run(
        net_before, pp, initial.phases, initial.couplings, n1, step, record_stride
    )
    times1 = _record_times(n1, step, record_stride)
    union_edges = tuple(
        (int(i), int(j))
        for i, j in np.argwhere((net_before.adjacency + net_after.adjacency) > 0)
    )
    if v1 < times1.shape[0]:
        prefix = _build_trajectory(
            times1[:v1], thetas1[:v1], ks1[:v1], net_before, partition, union_edges
        )
        raise IntegrationBlowup(float(times1[v1 - 1]), prefix)

    thetas2, ks2, v2 = _run(
        net_after, pp, thetas1[-1], ks1[-1], n2, step, record_stride
    )
    times2 = times1[-1] + _record_times(n2, step, record_stride)
    times = np.concatenate([times1, times2[1:]])
    thetas = np.concatenate([thetas1, thetas2[1:]], axis=0)
    ks = np.concatenate([ks1, ks2[1:]], axis=0)
    if v2 < times2.shape[0]:
        keep = times1.shape[0] + v2 - 1
        prefix = _build_trajectory(
            times[:keep], thetas[:keep], ks[:keep], net_after, partition, union_edges
        )
        raise IntegrationBlowup(float(times[keep - 1]), prefix)
    return _build_trajectory(times, thetas, ks, net_after, partition, union_edges)


def rhs_full(net: OscillatorNetwork, pp: PlasticityParams, state: NetworkState):
    """Right-hand side of the full system: (dtheta (N,), dk (N, N)).

    dk is zero off the edge set.
    """
    if state.phases.shape[0] != net.n_nodes:
        raise ValueError("state size does not match the network")
    kind, offset, table = pp.rule.kernel_encoding()
    theta = state.phases
    diff = theta[None, :] - theta[:, None]
    mask = net.adjacency != 0
    dtheta = net.frequencies + np.sum(mask * state.couplings * np.sin(diff), axis=1)
    dk = np.where(mask, -pp.gamma * state.couplings + pp.mu * rule_values(kind, offset, table, diff), 0.0)
    return dtheta, dk


@dataclass(frozen=True)
class ReducedState:
    """Cluster phases phi (m,) and inter-cluster couplings along the canonical
    edge order (c_out,)."""

    phi: np.ndarray
    k_inter: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        k = np.asarray(self.k_inter, dtype=np.float64)
        if phi.ndim != 1 or k.ndim != 1:
            raise ValueError("phi and k_inter must be 1-D")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "k_inter", k)


def _edge_diffs(structure: EdgeStructure, phi: np.ndarray) -> np.ndarray:
    """Per-edge phase differences phi_r - phi_s (source minus receiver cluster)."""
    pair_s = np.array([p[0] for p in structure.pairs], dtype=np.int64)
    pair_r = np.array([p[1] for p in structure.pairs], dtype=np.int64)
    s_of_edge = pair_s[structure.edge_pair]
    r_of_edge = pair_r[structure.edge_pair]
    return phi[r_of_edge] - phi[s_of_edge]


def rhs_reduced(
    net: OscillatorNetwork,
    part: ClusterPartition,
    pp: PlasticityParams,
    state: ReducedState,
):
    """Right-hand side of the reduced system: (dphi (m,), dk_inter (c_out,)).

    Requires uniform inter-cluster counts (the reduction is undefined
    otherwise).
    """
    card = compute_cardinalities(net, part)
    if not card.a2_holds:
        raise ValueError("inter-cluster counts are not uniform; reduced system undefined")
    structure = inter_cluster_structure(net, part)
    if state.phi.shape[0] != part.m or state.k_inter.shape[0] != structure.c_out:
        raise ValueError("reduced state dimensions do not match (m, c_out)")

    kind, offset, table = pp.rule.kernel_encoding()
    diffs = _edge_diffs(structure, state.phi)
    per_pair = structure.rep_aggregation @ (state.k_inter * np.sin(diffs))
    wbar = net.frequencies[list(part.representatives)]
    dphi = wbar.copy()
    for p, (s, _r) in enumerate(structure.pairs):
        dphi[s] += per_pair[p]
    dk = -pp.gamma * state.k_inter + pp.mu * rule_values(kind, offset, table, diffs)
    return dphi, dk


def inter_coupling_matrix(
    net: OscillatorNetwork, part: ClusterPartition, phi
) -> np.ndarray:
    """Drift matrix B(phi): (m, c_out) with B[s, e] = a_{i_s j} sin(phi_r - phi_s)
    for edges e = (i_s, j) received by the representative of P_s, else 0."""
    structure = inter_cluster_structure(net, part)
    phi = np.asarray(phi, dtype=np.float64)
    diffs = _edge_diffs(structure, phi)
    out = np.zeros((part.m, structure.c_out))
    pair_s = np.array([p[0] for p in structure.pairs], dtype=np.int64)
    for e in range(structure.c_out):
        p = structure.edge_pair[e]
        if structure.rep_aggregation[p, e]:
            out[pair_s[p], e] = np.sin(diffs[e])
    return out


def inter_forcing_vector(
    net: OscillatorNetwork, part: ClusterPartition, rule: LearningRule, phi
) -> np.ndarray:
    """Forcing G(phi): (c_out,) with entries Gamma(phi_r - phi_s) per edge."""
    structure = inter_cluster_structure(net, part)
    phi = np.asarray(phi, dtype=np.float64)
    return np.asarray(rule(_edge_diffs(structure, phi)))


# -- two coupled oscillators with a fixed coupling ----------------------------


@dataclass(frozen=True)
class TwoOscillatorResult:
    """Static-coupling pair analysis: locked phase difference d (nan when not
    synchronizable), common locked frequency, and the synchronizability flag
    |w2 - w1| <= 2k."""

    d: float
    mean_freq: float
    synchronizable: bool


def two_oscillator_static_analysis(w1: float, w2: float, k: float) -> TwoOscillatorResult:
    """Locked state of  dtheta_1 = w1 + k sin(theta_2 - theta_1),
    dtheta_2 = w2 + k sin(theta_1 - theta_2)."""
    if not (math.isfinite(k) and k > 0):
        raise ValueError("coupling k must be finite and > 0")
    detuning = (w2 - w1) / (2.0 * k)
    synchronizable = abs(w2 - w1) <= 2.0 * k
    d = math.asin(detuning) if synchronizable else math.nan
    return TwoOscillatorResult(d=d, mean_freq=(w1 + w2) / 2.0, synchronizable=synchronizable)


def simulate_static_pair(
    w1: float,
    w2: float,
    k: float,
    e0: float = 0.0,
    t_end: float = 60.0,
    step: float = 0.001,
) -> tuple[float, float]:
    """Integrate the static pair; returns (final wrapped difference, measured
    frequency of oscillator 1 over the second half of the run).

    Serves as the simulation cross-check of the closed-form analysis.
    """
    theta1, e = 0.0, float(e0)
    n = int(round(t_end / step))
    half = n // 2
    theta1_half = 0.0

    def f(th1, ee):
        return w1 + k * math.sin(ee), (w2 - w1) - 2.0 * k * math.sin(ee)

    for i in range(n):
        a1, b1 = f(theta1, e)
        a2, b2 = f(theta1 + 0.5 * step * a1, e + 0.5 * step * b1)
        a3, b3 = f(theta1 + 0.5 * step * a2, e + 0.5 * step * b2)
        a4, b4 = f(theta1 + step * a3, e + step * b3)
        theta1 += (step / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        e += (step / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        if i + 1 == half:
            theta1_half = theta1
    mean_freq = (theta1 - theta1_half) / ((n - half) * step)
    return float(wrap_to_pi(e)), mean_freq


# -- trajectory metrics and export --------------------------------------------


@dataclass(frozen=True)
class ErrorMetrics:
    """Error-coordinate summary over a recorded run.

    sup_final_error and the coupling means are taken over the final 5% of the
    time span; time_to_tolerance is the first recorded time from which
    max_i |e_i| stays below the tolerance through the end (None if it never
    does, or when no tolerance was requested).
    """

    sup_final_error: float
    max_error_overall: float
    time_to_tolerance: float | None
    tolerance: float | None
    intra_coupling_limits: dict[tuple[int, int], float]

    def to_json_dict(self) -> dict:
        return {
            "sup_final_error": self.sup_final_error,
            "max_error_overall": self.max_error_overall,
            "time_to_tolerance": self.time_to_tolerance,
            "tolerance": self.tolerance,
            "intra_coupling_limits": {
                f"k_{i + 1}_{j + 1}": v for (i, j), v in sorted(self.intra_coupling_limits.items())
            },
        }


def error_metrics(traj: Trajectory, tol: float | None = None) -> ErrorMetrics:
    """Summarize error decay and intra-cluster coupling limits for a run."""
    if traj.n_records == 0:
        raise ValueError("trajectory has no records")
    if traj.partition is None or traj.errors is None:
        raise ValueError("error metrics need a trajectory recorded with a partition")

    abs_err = np.abs(traj.errors) if traj.errors.size else np.zeros((traj.n_records, 0))
    max_per_record = abs_err.max(axis=1) if abs_err.shape[1] else np.zeros(traj.n_records)
    window = traj.times >= 0.95 * traj.times[-1]

    sup_final = float(max_per_record[window].max())
    max_overall = float(max_per_record.max())

    time_to = None
    if tol is not None:
        above = np.nonzero(max_per_record >= tol)[0]
        if above.size == 0:
            time_to = float(traj.times[0])
        elif above[-1] + 1 < traj.n_records:
            time_to = float(traj.times[above[-1] + 1])

    structure = inter_cluster_structure(traj.network, traj.partition)
    limits: dict[tuple[int, int], float] = {}
    for i, j in structure.intra_edges:
        limits[(int(i), int(j))] = float(traj.couplings[window, i, j].mean())

    return ErrorMetrics(
        sup_final_error=sup_final,
        max_error_overall=max_overall,
        time_to_tolerance=time_to,
        tolerance=tol,
        intra_coupling_limits=limits,
    )


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write a recorded run as CSV.

    Columns: t, theta_<node>.., e_<node>.. (non-representatives, when a
    partition was recorded), k_<recv>_<src>.. for the meaningful edges.
    Node indices in headers are 1-based. Values are shortest round-trip
    decimal, so identical runs produce identical bytes.
    """
    n = traj.network.n_nodes
    headers = ["t"] + [f"theta_{i + 1}" for i in range(n)]
    headers += [f"e_{i + 1}" for i in traj.error_nodes]
    headers += [f"k_{i + 1}_{j + 1}" for i, j in traj.k_edges]

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(headers) + "\n")
        for rec in range(traj.n_records):
            row = [repr(float(traj.times[rec]))]
            row += [repr(float(v)) for v in traj.phases[rec]]
            if traj.errors is not None:
                row += [repr(float(v)) for v in traj.errors[rec]]
            row += [repr(float(traj.couplings[rec, i, j])) for i, j in traj.k_edges]
            fh.write(",".join(row) + "\n")
