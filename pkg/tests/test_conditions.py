"""Sufficient-condition checker.

The two worked instances pin the reference numbers; the frozen values here
were computed independently from the closed-form inequality (not read off
any implementation output).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_kuramoto import (
    ClusterPartition,
    LearningRule,
    OscillatorNetwork,
    PlasticityParams,
    apply_perturbation,
    check_cluster_conditions,
    check_perturbed_conditions,
    contraction_ratio,
)

# sqrt(2)/3 - 0.01*1*3  and the matching ratio, evaluated by hand:
LHS_5 = 0.44140452079103176
RATIO_5 = 0.8318781387797297
# 7-node repaired topology: sqrt(4/5) - 0.001/0.2 gives exactly 0.495
LHS_7 = 0.495
RATIO_7 = 0.9614790585030987


def test_learning_rules():
    heb = LearningRule.hebbian()
    assert heb(0.0) == 1.0
    assert heb(math.pi) == pytest.approx(-1.0)
    assert heb.c1_bound() == 1.0
    shifted = LearningRule.shifted_cosine(0.25)
    assert shifted(0.25) == pytest.approx(1.0)  # cos(s - offset)
    assert shifted.c1_bound() == 1.0
    tab = LearningRule.tabulated([1.0, 0.0, -1.0, 0.0])
    assert tab(0.0) == pytest.approx(1.0)
    assert tab(math.pi) == pytest.approx(-1.0)
    assert tab(math.pi / 4) == pytest.approx(0.5)  # linear between samples
    assert tab(2 * math.pi) == pytest.approx(1.0)  # periodic
    with pytest.raises(ValueError):
        LearningRule.tabulated([1.0, -1.0])  # too few samples
    with pytest.raises(ValueError):
        LearningRule("no-such-kind")
    with pytest.raises(ValueError):
        LearningRule("hebbian", table=np.array([1.0, 0.0, -1.0]))


def test_rule_derivative_and_encoding():
    heb = LearningRule.hebbian()
    s = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(heb.derivative(s), -np.sin(s))
    kind, offset, table = heb.kernel_encoding()
    assert isinstance(kind, int) and offset == 0.0
    tab = LearningRule.tabulated([0.5, 0.0, -0.5, 0.0])
    # max of sup|Gamma| = 0.5 and the piece slope 0.5/(pi/2) ~ 0.32
    assert tab.c1_bound() == pytest.approx(0.5, rel=0.01)


def test_plasticity_params():
    pp = PlasticityParams(gamma=2.0, mu=0.5, rule=LearningRule.hebbian())
    assert pp.delta == 1.0  # C^1 bound of cos filled in
    tab = PlasticityParams(gamma=1.0, mu=0.1, rule=LearningRule.tabulated([2.0, 0.0, -2.0, 0.0]))
    assert tab.delta == pytest.approx(2.0, rel=0.05)
    with pytest.raises(ValueError):
        PlasticityParams(gamma=0.0, mu=0.1, rule=LearningRule.hebbian())
    with pytest.raises(ValueError):
        PlasticityParams(gamma=1.0, mu=-0.1, rule=LearningRule.hebbian())


def test_five_node_report(five_node):
    net, part, pp = five_node
    report = check_cluster_conditions(net, part, pp)
    assert report.a1_holds and report.a2_holds and report.a3_holds
    assert report.overall
    assert report.w_min == pytest.approx(math.sqrt(2) / 3, rel=1e-15)
    assert report.w_max == 0.5
    assert report.lhs_a3 == pytest.approx(LHS_5, rel=1e-12)
    assert report.ratio_a3 == pytest.approx(RATIO_5, rel=1e-12)
    assert report.sum_c_sr == 5
    assert report.cardinalities.c_max == 3


def test_seven_node_reports(seven_node_original, seven_node_fixed):
    net, part, pp = seven_node_original
    report = check_cluster_conditions(net, part, pp)
    assert report.a1_holds and not report.a2_holds
    assert not report.overall
    assert not report.a3_applicable

    netf, partf, ppf = seven_node_fixed
    rf = check_cluster_conditions(netf, partf, ppf)
    assert rf.overall
    assert rf.lhs_a3 == LHS_7  # exact in floating point
    assert rf.ratio_a3 == pytest.approx(RATIO_7, rel=1e-12)


def test_a1_violation_and_tolerance(five_node):
    net, part, pp = five_node
    w = net.frequencies.copy()
    w[2] += 1e-8
    bumped = OscillatorNetwork(net.adjacency, w)
    report = check_cluster_conditions(bumped, part, pp)
    assert not report.a1_holds and not report.overall
    assert report.a1_violations
    report = check_cluster_conditions(bumped, part, pp, freq_tol=1e-6)
    assert report.a1_holds and report.overall


def test_contraction_ratio(five_node, seven_node_original):
    net, part, pp = five_node
    assert contraction_ratio(net, part, pp) == check_cluster_conditions(net, part, pp).ratio_a3
    net_o, part_o, pp_o = seven_node_original
    with pytest.raises(ValueError):
        contraction_ratio(net_o, part_o, pp_o)


def test_mu_zero_trivializes_a3(five_node):
    net, part, _ = five_node
    pp0 = PlasticityParams(gamma=1.0, mu=0.0, rule=LearningRule.hebbian())
    report = check_cluster_conditions(net, part, pp0)
    assert report.overall
    assert report.ratio_a3 == 0.0
    assert report.lhs_a3 == pytest.approx(math.sqrt(2) / 3)


def test_ratio_infinite_when_lhs_nonpositive(five_node):
    net, part, _ = five_node
    # w_min = sqrt(2)/3 ~ 0.4714; mu*delta*c_max/gamma = 0.2*3 = 0.6 > w_min
    pp = PlasticityParams(gamma=1.0, mu=0.2, rule=LearningRule.hebbian())
    report = check_cluster_conditions(net, part, pp)
    assert report.lhs_a3 <= 0
    assert not report.a3_holds and not report.overall
    assert math.isinf(report.ratio_a3)
    assert report.to_json_dict()["ratio_a3"] == "inf"


def test_report_json_and_notes(five_node):
    net, part, pp = five_node
    report = check_cluster_conditions(net, part, pp)
    data = report.to_json_dict()
    assert data["overall"] is True
    assert data["cardinalities"]["c_out"] == 12
    noted = report.with_notes(("checked",))
    assert noted.notes == ("checked",)
    assert noted.lhs_a3 == report.lhs_a3


def test_perturbed_route_equals_direct_check(seven_node_original):
    """The perturbed-topology route must agree with checking A + A~ directly,
    field by field, with exact float equality."""
    net, part, pp = seven_node_original
    tilde = np.zeros((7, 7), dtype=int)
    tilde[6, 0] = -1
    via_perturbation = check_perturbed_conditions(net, tilde, part, pp)
    direct = check_cluster_conditions(apply_perturbation(net, tilde), part, pp)
    assert via_perturbation.lhs_a3 == direct.lhs_a3
    assert via_perturbation.ratio_a3 == direct.ratio_a3
    assert via_perturbation.w_min == direct.w_min
    assert via_perturbation.w_max == direct.w_max
    assert via_perturbation.sum_c_sr == direct.sum_c_sr
    assert via_perturbation.c_out_effective == direct.c_out_effective
    assert via_perturbation.overall == direct.overall
    assert np.array_equal(via_perturbation.cardinalities.c_sr, direct.cardinalities.c_sr)
    assert via_perturbation.c_tilde_out == -1


@given(st.integers(0, 10**9))
@settings(max_examples=40, deadline=None)
def test_perturbed_route_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 8))
    a = (rng.random((n, n)) < 0.5).astype(int)
    np.fill_diagonal(a, 0)
    cut = int(rng.integers(1, n))
    part = ClusterPartition((tuple(range(cut)), tuple(range(cut, n))))
    w = np.empty(n)
    w[:cut] = rng.uniform(0.3, 2.0)
    w[cut:] = rng.uniform(0.3, 2.0)
    net = OscillatorNetwork(a, w)
    pp = PlasticityParams(gamma=1.0, mu=0.001, rule=LearningRule.hebbian())
    tilde = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < 0.3:
                tilde[i, j] = -1 if a[i, j] else 1
    via = check_perturbed_conditions(net, tilde, part, pp)
    direct = check_cluster_conditions(apply_perturbation(net, tilde), part, pp)
    assert via.overall == direct.overall
    assert via.a2_holds == direct.a2_holds
    if via.a3_applicable:
        assert via.lhs_a3 == direct.lhs_a3
        assert via.ratio_a3 == direct.ratio_a3


@given(st.floats(0.0005, 0.009), st.floats(0.0005, 0.009))
@settings(max_examples=40, deadline=None)
def test_ratio_monotone_in_mu(mu_a, mu_b):
    adj = np.ones((5, 5), dtype=int) - np.eye(5, dtype=int)
    w2 = math.sqrt(2) / 3
    net = OscillatorNetwork(adj, [0.5, 0.5, 0.5, w2, w2])
    part = ClusterPartition(((0, 1, 2), (3, 4)))
    lo, hi = sorted((mu_a, mu_b))
    rule = LearningRule.hebbian()
    r_lo = check_cluster_conditions(net, part, PlasticityParams(1.0, lo, rule)).ratio_a3
    r_hi = check_cluster_conditions(net, part, PlasticityParams(1.0, hi, rule)).ratio_a3
    assert r_lo <= r_hi


@given(st.floats(0.5, 1.0), st.floats(1.001, 3.0))
@settings(max_examples=40, deadline=None)
def test_ratio_monotone_in_gamma(g_lo, g_factor):
    adj = np.ones((5, 5), dtype=int) - np.eye(5, dtype=int)
    w2 = math.sqrt(2) / 3
    net = OscillatorNetwork(adj, [0.5, 0.5, 0.5, w2, w2])
    part = ClusterPartition(((0, 1, 2), (3, 4)))
    rule = LearningRule.hebbian()
    r_lo = check_cluster_conditions(net, part, PlasticityParams(g_lo, 0.01, rule)).ratio_a3
    r_hi = check_cluster_conditions(net, part, PlasticityParams(g_lo * g_factor, 0.01, rule)).ratio_a3
    assert r_hi <= r_lo  # stronger damping only helps


@given(st.integers(0, 10**9))
@settings(max_examples=40, deadline=None)
def test_report_invariant_under_node_relabeling(seed):
    rng = np.random.default_rng(seed)
    n = 5
    a = (rng.random((n, n)) < 0.6).astype(int)
    np.fill_diagonal(a, 0)
    w = np.array([0.5, 0.5, 0.5, 0.9, 0.9])
    net = OscillatorNetwork(a, w)
    part = ClusterPartition(((0, 1, 2), (3, 4)))
    pp = PlasticityParams(gamma=1.0, mu=0.002, rule=LearningRule.hebbian())
    base = check_cluster_conditions(net, part, pp)

    perm = np.concatenate([rng.permutation(3), 3 + rng.permutation(2)])
    inv = np.argsort(perm)
    a2 = a[np.ix_(perm, perm)]
    relabeled = OscillatorNetwork(a2, w[perm])
    # clusters keep the same node sets under this block permutation
    rep2 = check_cluster_conditions(relabeled, part, pp)
    assert rep2.overall == base.overall
    assert rep2.a2_holds == base.a2_holds
    assert rep2.cardinalities.c_out == base.cardinalities.c_out
    assert rep2.cardinalities.c_max == base.cardinalities.c_max
    if base.a3_applicable and rep2.a3_applicable:
        assert rep2.lhs_a3 == base.lhs_a3
        assert rep2.ratio_a3 == base.ratio_a3
    assert inv is not None
