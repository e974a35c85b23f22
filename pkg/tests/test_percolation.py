import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from entanglenet.percolation import (
    PercolationEstimate,
    RobustnessQuery,
    ThresholdError,
    UnionFind,
    bond_trial,
    critical_points,
    edge_probabilities,
    estimate_threshold,
    eta_critical,
    length_probabilities,
    median_crossing,
    robustness_region,
    site_trial,
    spanning_curve,
    spanning_fraction,
)
from entanglenet.rng import stream, trial_stream
from entanglenet.topology import (
    ARCHIMEDEAN,
    NetworkGraph,
    Node,
    build_archimedean,
    build_inhomogeneous,
    build_patch,
    lattice_builder,
)
from entanglenet.topology.graph import WORKSTATION, Edge


# --- union-find ------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60))
))
def test_union_find_partition(case):
    n, pairs = case
    uf = UnionFind(n)
    for a, b in pairs:
        uf.union(a, b)
        assert uf.find(a) == uf.find(b)
    for x in range(n):
        assert uf.find(uf.find(x)) == uf.find(x)
    assert sum(uf.cluster_sizes().values()) == n
    # compare against scipy's connected components
    if pairs:
        a, b = np.array(pairs).T
        mat = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
        _, labels = connected_components(mat, directed=False)
    else:
        labels = np.arange(n)
    for x in range(n):
        for y in range(n):
            assert uf.connected(x, y) == (labels[x] == labels[y])


# --- single trials ----------------------------------------------------------------

def test_trials_at_extremes():
    g = build_archimedean("square", 6, 6)
    rng = stream(1)
    assert all(bond_trial(g, 1.0, rng) for _ in range(20))
    assert not any(bond_trial(g, 0.0, rng) for _ in range(20))
    assert all(site_trial(g, 1.0, rng) for _ in range(20))
    assert not any(site_trial(g, 0.0, rng) for _ in range(20))


def test_trial_needs_sides():
    g = NetworkGraph("pair", (Node(0, WORKSTATION, 0, 0), Node(1, WORKSTATION, 1, 0)), (Edge(0, 1, 1.0),))
    with pytest.raises(ValueError):
        bond_trial(g, 0.5, stream(0))
    with pytest.raises(ValueError):
        critical_points(g, "bond", 10, 0)


@pytest.mark.parametrize("mode", ["bond", "site"])
def test_critical_points_coupled_with_single_trials(mode):
    g = build_archimedean("triangular", 5, 5)
    trial = bond_trial if mode == "bond" else site_trial
    crit = critical_points(g, mode, 200, seed=13, key=(2,))
    for p in (0.2, 0.35, 0.5, 0.65):
        for k in range(200):
            assert trial(g, p, trial_stream(13, (2,), k)) == (crit[k] < p)


@pytest.mark.parametrize("mode", ["bond", "site"])
def test_window_matches_full_sort(mode):
    # the first chunk sets a sort window for the rest; results must equal a full sort
    g = build_archimedean("square", 12, 12)
    windowed = critical_points(g, mode, 300, seed=2)
    full = np.concatenate([_full_single(g, mode, k) for k in range(300)])
    assert np.array_equal(windowed, full)


def _full_single(g, mode, k):
    # trial k on its own, sorted over the whole [0, 1] range
    from entanglenet import _kernels

    width = g.num_edges if mode == "bond" else g.num_nodes
    t = trial_stream(2, (), k).random(width)[None, :]
    left, right = g.side_masks
    if mode == "bond":
        u, v = g.edge_arrays
        return _kernels.bond_critical(u, v, g.num_nodes, left, right, t, 0.0, 1.0 + 1e-9)
    indptr, indices = g.adjacency
    return _kernels.site_critical(indptr, indices, g.num_nodes, left, right, t, 0.0, 1.0 + 1e-9)


def test_workers_do_not_change_critical_points():
    g = build_archimedean("square", 10, 10)
    a = critical_points(g, "bond", 500, seed=3, workers=1)
    b = critical_points(g, "bond", 500, seed=3, workers=4)
    assert np.array_equal(a, b)


def test_spanning_curve_monotone_and_extremes():
    rows = spanning_curve(lattice_builder("square"), "bond", [k / 20 for k in range(21)], [8, 16], 400, seed=5)
    for size in (8, 16):
        fr = [r[4] for r in rows if r[0] == size]
        assert fr[0] == 0.0 and fr[-1] == 1.0
        assert all(a <= b for a, b in zip(fr, fr[1:]))
    small = {r[3]: r[4] for r in rows if r[0] == 8}
    large = {r[3]: r[4] for r in rows if r[0] == 16}
    # curves cross near 1/2: the larger patch is below at 0.4 and above at 0.6
    assert large[0.4] < small[0.4] and large[0.6] > small[0.6]


def test_self_dual_square_at_half():
    # an L x (L+1) open rectangle is self-dual, so left-right crossing at p = 1/2 is exactly 1/2
    g = build_patch(ARCHIMEDEAN["4.4.4.4"], 64, 65, periodic=False)
    crit = critical_points(g, "bond", 10**4, seed=8)
    frac, sigma = spanning_fraction(crit, 0.5)
    assert abs(frac - 0.5) < 3 * sigma


# --- exact enumeration oracle --------------------------------------------------------

def _spans_exact(graph, open_edges, present):
    u, v = graph.edge_arrays
    keep = open_edges & present[u] & present[v]
    n = graph.num_nodes
    mat = coo_matrix((np.ones(keep.sum()), (u[keep], v[keep])), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    left = {labels[i] for i in graph.left if present[i]}
    right = {labels[i] for i in graph.right if present[i]}
    return bool(left & right)


def _bond_exact(graph, probs):
    total = 0.0
    for bits in itertools.product((False, True), repeat=graph.num_edges):
        mask = np.array(bits)
        if _spans_exact(graph, mask, np.ones(graph.num_nodes, dtype=bool)):
            total += float(np.prod(np.where(mask, probs, 1 - probs)))
    return total


def _site_exact(graph, r):
    total = 0.0
    for bits in itertools.product((False, True), repeat=graph.num_nodes):
        mask = np.array(bits)
        if _spans_exact(graph, np.ones(graph.num_edges, dtype=bool), mask):
            k = int(mask.sum())
            total += r**k * (1 - r) ** (graph.num_nodes - k)
    return total


SMALL_BOND = [
    ("square-3x3-open", lambda: build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 3, periodic=False), 0.5),
    ("triangular-2x3-open", lambda: build_patch(ARCHIMEDEAN["3.3.3.3.3.3"], 2, 3, periodic=False), 0.35),
    ("square-2x3-cylinder", lambda: build_archimedean("square", 2, 3), 0.6),
]


@pytest.mark.parametrize("label,make,p", SMALL_BOND, ids=[s[0] for s in SMALL_BOND])
def test_bond_enumeration_oracle(label, make, p):
    g = make()
    assert g.num_edges <= 12
    exact = _bond_exact(g, np.full(g.num_edges, p))
    crit = critical_points(g, "bond", 10**5, seed=31)
    frac, _ = spanning_fraction(crit, p)
    sigma = math.sqrt(exact * (1 - exact) / 10**5)
    assert abs(frac - exact) < 3 * sigma


def test_inhomogeneous_bond_enumeration_oracle():
    g = build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 3, periodic=False)
    rng = np.random.default_rng(0)
    ratios = rng.uniform(0.5, 2.0, g.num_edges)
    p = 0.55
    exact = _bond_exact(g, p**ratios)
    crit = critical_points(g, "bond", 10**5, seed=32, ratios=ratios)
    frac, _ = spanning_fraction(crit, p)
    assert abs(frac - exact) < 3 * math.sqrt(exact * (1 - exact) / 10**5)


def test_site_enumeration_oracle():
    g = build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 4, periodic=False)
    assert g.num_nodes <= 12
    r = 0.6
    exact = _site_exact(g, r)
    crit = critical_points(g, "site", 10**5, seed=33)
    frac, _ = spanning_fraction(crit, r)
    assert abs(frac - exact) < 3 * math.sqrt(exact * (1 - exact) / 10**5)


def test_bond_trial_enumeration_oracle():
    g = build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 3, periodic=False)
    probs = {1: 0.5}
    exact = _bond_exact(g, edge_probabilities(g, probs))
    n = 20000
    hits = sum(bond_trial(g, probs, stream(34, k)) for k in range(n))
    assert abs(hits / n - exact) < 3 * math.sqrt(exact * (1 - exact) / n)


# --- probabilities ------------------------------------------------------------------

def test_edge_probabilities_forms():
    g = build_inhomogeneous("triangular", (1.0, 2.0, 3.0), 3, 3)
    probs = edge_probabilities(g, {1: 0.1, 2: 0.2, 3: 0.3})
    assert set(np.round(probs, 12)) == {0.1, 0.2, 0.3}
    with pytest.raises(ValueError):
        edge_probabilities(g, {1: 0.1})
    with pytest.raises(ValueError):
        edge_probabilities(g, 1.5)
    lp = length_probabilities(g, 0.1)
    assert np.allclose(lp, np.exp(-0.1 * g.edge_lengths))


# --- thresholds ------------------------------------------------------------------------

def test_threshold_error_has_diagnostics():
    cell = ARCHIMEDEAN["4.4.4.4"]
    g = build_patch(cell, 3, 3)
    # cut the patch in two by dropping every bond between columns 0 and 1
    edges = tuple(e for e in g.edges if not (e.u < 3 and e.v >= 3))
    cut = NetworkGraph("cut", g.nodes, edges, g.boundary, g.rows, g.cols, g.period, g.left, g.right)
    crit = critical_points(cut, "bond", 100, seed=1)
    assert np.all(np.isinf(crit))
    with pytest.raises(ThresholdError) as err:
        median_crossing(crit)
    assert err.value.diagnostics["fraction_at_1"] == 0.0
    with pytest.raises(ThresholdError) as err:
        estimate_threshold(lambda s: cut, sizes=(3,), trials=100, seed=1, name="cut")
    assert err.value.diagnostics["lattice"] == "cut"


def test_estimate_threshold_small():
    est = estimate_threshold(lattice_builder("square"), "bond", sizes=(8, 16, 32), trials=2000, seed=3)
    assert isinstance(est, PercolationEstimate)
    assert est.uncertainty > 0
    assert abs(est.p_c_hat - 0.5) < 0.03
    assert len(est.crossings) == 3
    again = estimate_threshold(lattice_builder("square"), "bond", sizes=(8, 16, 32), trials=2000, seed=3, workers=4)
    assert again == est
    with pytest.raises(ValueError):
        estimate_threshold(lattice_builder("square"), sizes=(16, 8))


@pytest.mark.parametrize("name,mode,ref", [("square", "bond", 0.5), ("triangular", "bond", 0.347296)])
def test_fast_subset(name, mode, ref):
    est = estimate_threshold(lattice_builder(name), mode, sizes=(32, 64, 128), trials=10**4, seed=7)
    assert abs(est.p_c_hat - ref) < 0.01


def test_square_site_estimate():
    est = estimate_threshold(lattice_builder("square"), "site", sizes=(32, 64, 128), trials=10**4, seed=7)
    assert abs(est.p_c_hat - 0.592746) < 0.005


# --- figures of merit ---------------------------------------------------------------------

def test_eta_critical_examples():
    assert eta_critical(0.5) == pytest.approx(0.707106, abs=1e-6)
    assert eta_critical(0.347296) == pytest.approx(0.589318, abs=1e-6)
    assert eta_critical(0.404518) == pytest.approx(0.636017, abs=1e-6)
    with pytest.raises(ValueError):
        eta_critical(1.5)


@given(st.floats(0.0, 1.0))
def test_eta_critical_squares_back(p):
    assert abs(eta_critical(p) ** 2 - p) <= 1e-15


def test_robustness_examples():
    assert robustness_region(RobustnessQuery(1.0, 0.0, 1.0, 0.5, 0.59)).robust
    v = robustness_region(RobustnessQuery(0.58, 0.0, 1.0, 0.347296, 0.5))
    assert not v.robust and v.bond_margin < 0
    with pytest.raises(ValueError):
        RobustnessQuery(1.2, 0.0, 1.0, 0.5, 0.5)


@pytest.mark.parametrize("p_c", [0.5, 0.347296, 0.652703])
@pytest.mark.parametrize("q", [0.0, 0.1, 0.3])
def test_robustness_boundary(p_c, q):
    eta = math.sqrt(p_c / (1 - q))
    v = robustness_region(RobustnessQuery(eta, q, 1.0, p_c, 0.5))
    assert abs(v.bond_margin) < 1e-12


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_robustness_margin_definition(eta, q, r, pb, ps):
    v = robustness_region(RobustnessQuery(eta, q, r, pb, ps))
    assert v.margin == min(eta**2 * (1 - q) - pb, r - ps)
    assert v.robust == (v.bond_margin >= 0 and v.site_margin >= 0)
