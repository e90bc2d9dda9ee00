"""Minimal-edit interconnection design for a desired cluster partition.

Natural frequencies are fixed; the only actuator is adding or removing
directed edges. A signed edit mask (PerturbationMatrix) makes the per-pair
incoming counts uniform at chosen targets, which restores the count
uniformity requirement by construction; the rate inequalities are then
evaluated on the edited network.

The search enumerates per-pair target counts, orders candidates by ascending
total edit cost (then smaller c_max, then smaller total count, then the
target tuple itself, so results are deterministic), and returns the first
candidate whose edited network passes the full sufficient-condition check
within the edit budget. When none passes, the result is infeasible and
carries the most promising affordable candidate (lowest ratio) as a
diagnostic.

Edit placement is deterministic: surplus inputs are removed starting from the
lowest source index, deficits are filled from the lowest-index non-neighbors.
Intra-cluster edges are never touched; they enter neither the count
uniformity requirement nor the rate inequalities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .conditions import ConditionReport, PlasticityParams, check_perturbed_conditions
from .network import (
    ClusterPartition,
    IntArray,
    OscillatorNetwork,
    _readonly,
    apply_perturbation,
    check_frequencies,
    compute_cardinalities,
)

__all__ = [
    "PerturbationMatrix",
    "DesignResult",
    "min_edits_for_targets",
    "design_topology",
    "c_tilde_out",
]


@dataclass(frozen=True)
class PerturbationMatrix:
    """Signed edge-edit mask: +1 adds an edge, -1 removes one, zero diagonal."""

    entries: IntArray

    def __post_init__(self):
        entries = _readonly(self.entries, np.int64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"perturbation must be square, got shape {entries.shape}")
        if not np.isin(entries, (-1, 0, 1)).all():
            raise ValueError("perturbation entries must be -1, 0 or +1")
        if np.diagonal(entries).any():
            raise ValueError("perturbation diagonal must be zero")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, n_nodes: int) -> "PerturbationMatrix":
        return cls(np.zeros((n_nodes, n_nodes), dtype=np.int64))

    @property
    def edit_count(self) -> int:
        return int(np.count_nonzero(self.entries))

    def edges_added(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(i), int(j)) for i, j in np.argwhere(self.entries == 1))

    def edges_removed(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(i), int(j)) for i, j in np.argwhere(self.entries == -1))

    def sparse_entries(self) -> tuple[tuple[int, int, int], ...]:
        """Non-zero entries as (receiver, source, sign), row-major, 0-based."""
        return tuple(
            (int(i), int(j), int(self.entries[i, j]))
            for i, j in np.argwhere(self.entries != 0)
        )

    def to_json_dict(self) -> dict:
        return {
            "edit_count": self.edit_count,
            "entries": [[i + 1, j + 1, v] for i, j, v in self.sparse_entries()],
        }


@dataclass(frozen=True)
class DesignResult:
    """Outcome of a topology search.

    ``feasible`` implies ``report.overall``; otherwise the carried candidate
    is the diagnostic described in the module docstring. ``targets[s, r]`` is
    the designed per-node incoming count into cluster s from cluster r.
    """

    feasible: bool
    edits: int
    targets: IntArray
    perturbation: PerturbationMatrix
    report: ConditionReport

    def __post_init__(self):
        object.__setattr__(self, "targets", _readonly(self.targets, np.int64))
        if self.feasible and not self.report.overall:
            raise ValueError("feasible result requires a passing report")

    def to_json_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "edits": self.edits,
            "targets": self.targets.tolist(),
            "perturbation": self.perturbation.to_json_dict(),
            "report": self.report.to_json_dict(),
        }


def c_tilde_out(net: OscillatorNetwork, part: ClusterPartition, tilde_a) -> int:
    """Signed sum of the inter-cluster entries of an edit mask."""
    entries = np.asarray(getattr(tilde_a, "entries", tilde_a), dtype=np.int64)
    if entries.shape != net.adjacency.shape:
        raise ValueError(
            f"perturbation shape {entries.shape} != adjacency shape {net.adjacency.shape}"
        )
    cluster_of = part.cluster_of()
    inter = cluster_of[:, None] != cluster_of[None, :]
    return int(entries[inter].sum())


def min_edits_for_targets(
    net: OscillatorNetwork, part: ClusterPartition, targets
) -> PerturbationMatrix:
    """Fewest-flip edit mask giving every node of P_s exactly targets[s][r]
    inputs from P_r, for all ordered pairs s != r.

    Surplus edges are removed lowest source index first; deficits are filled
    from the lowest-index non-neighbors. Intra-cluster entries of ``targets``
    are ignored. Raises when a target exceeds the source cluster size.
    """
    if part.n_nodes != net.n_nodes:
        raise ValueError(
            f"partition covers {part.n_nodes} nodes but network has {net.n_nodes}"
        )
    m = part.m
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (m, m):
        raise ValueError(f"targets must be shaped ({m}, {m}), got {targets.shape}")

    adj = net.adjacency
    entries = np.zeros_like(adj)
    for s in range(m):
        for r in range(m):
            if r == s:
                continue
            t = int(targets[s, r])
            pool = part.clusters[r]
            if not 0 <= t <= len(pool):
                raise ValueError(
                    f"target {t} for pair ({s + 1}, {r + 1}) outside 0..{len(pool)}"
                )
            for i in part.clusters[s]:
                sources = [j for j in pool if adj[i, j]]
                if len(sources) > t:
                    for j in sources[: len(sources) - t]:
                        entries[i, j] = -1
                elif len(sources) < t:
                    absent = [j for j in pool if not adj[i, j]]
                    for j in absent[: t - len(sources)]:
                        entries[i, j] = 1
    return PerturbationMatrix(entries)


def _candidate_order(per_node: np.ndarray, part: ClusterPartition):
    """All target matrices with per-pair entries in [0, min(|P_r|, max+1)],
    sorted by (total edit cost, c_max, total count, entries)."""
    m = part.m
    pairs = [(s, r) for s in range(m) for r in range(m) if s != r]
    options = []
    for s, r in pairs:
        counts = per_node[list(part.clusters[s]), r]
        upper = min(len(part.clusters[r]), int(counts.max()) + 1)
        costs = {t: int(np.abs(counts - t).sum()) for t in range(upper + 1)}
        options.append(costs)

    candidates = []
    for combo in itertools.product(*(sorted(o) for o in options)):
        cost = sum(options[k][t] for k, t in enumerate(combo))
        matrix = np.zeros((m, m), dtype=np.int64)
        for (s, r), t in zip(pairs, combo):
            matrix[s, r] = t
        cmax = int(matrix.sum(axis=1).max()) if m > 1 else 0
        candidates.append((cost, cmax, int(matrix.sum()), combo, matrix))
    candidates.sort(key=lambda c: c[:4])
    return candidates


def design_topology(
    net: OscillatorNetwork,
    part: ClusterPartition,
    pp: PlasticityParams,
    max_edits: int,
    freq_tol: float = 0.0,
) -> DesignResult:
    """Search for the cheapest edit mask making the partition satisfy the
    sufficient conditions on the edited network.

    Frequencies are not editable, so their within-cluster uniformity is a
    hard precondition. An exhausted search returns an infeasible result (the
    diagnostic candidate), not an exception.
    """
    if max_edits < 0:
        raise ValueError("max_edits must be >= 0")
    a1_ok, violations = check_frequencies(net, part, freq_tol)
    if not a1_ok:
        pairs = ", ".join(f"nodes ({i + 1}, {j + 1})" for _, (i, j) in violations)
        raise ValueError(
            f"within-cluster frequencies differ ({pairs}); edge edits cannot fix this"
        )

    per_node = compute_cardinalities(net, part).per_node_incoming
    best = None  # (ratio_key, cost, DesignResult)
    fallback = None  # cheapest candidate, evaluated even when unaffordable
    for cost, _cmax, _total, _combo, matrix in _candidate_order(per_node, part):
        affordable = cost <= max_edits
        if not affordable and fallback is not None:
            continue
        tilde = min_edits_for_targets(net, part, matrix)
        report = check_perturbed_conditions(net, tilde, part, pp, freq_tol)
        result = DesignResult(
            feasible=affordable and report.overall,
            edits=tilde.edit_count,
            targets=matrix,
            perturbation=tilde,
            report=report,
        )
        if fallback is None:
            fallback = result
        if not affordable:
            continue
        if result.feasible:
            return result
        ratio_key = report.ratio_a3 if math.isfinite(report.ratio_a3) else math.inf
        if best is None or (ratio_key, cost) < best[:2]:
            best = (ratio_key, cost, result)

    if best is not None:
        return best[2]
    return fallback


def _all_legal_masks(net: OscillatorNetwork, positions, budget: int):
    """Every legal edit mask touching only ``positions``, up to ``budget``
    flips. Exponential; intended for small oracle checks only."""
    n = net.n_nodes
    for k in range(budget + 1):
        for chosen in itertools.combinations(positions, k):
            entries = np.zeros((n, n), dtype=np.int64)
            for i, j in chosen:
                entries[i, j] = -1 if net.adjacency[i, j] else 1
            yield PerturbationMatrix(entries)


def brute_force_min_edits(
    net: OscillatorNetwork,
    part: ClusterPartition,
    pp: PlasticityParams,
    budget: int,
    freq_tol: float = 0.0,
) -> DesignResult | None:
    """Exhaustive oracle over every legal inter-cluster edit mask with at most
    ``budget`` flips; returns the first passing mask in (edit count, position)
    order, or None. Cost grows as (inter positions choose budget); keep
    n_nodes <= 8.
    """
    cluster_of = part.cluster_of()
    positions = [
        (i, j)
        for i in range(net.n_nodes)
        for j in range(net.n_nodes)
        if i != j and cluster_of[i] != cluster_of[j]
    ]
    for tilde in _all_legal_masks(net, positions, budget):
        report = check_perturbed_conditions(net, tilde, part, pp, freq_tol)
        if report.overall:
            edited = apply_perturbation(net, tilde)
            targets = compute_cardinalities(edited, part).c_sr
            return DesignResult(
                feasible=True,
                edits=tilde.edit_count,
                targets=targets,
                perturbation=tilde,
                report=report,
            )
    return None
