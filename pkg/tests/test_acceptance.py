"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run under pytest (lines are repeated in the terminal summary) or directly
with ``python tests/test_acceptance.py``.
"""

import itertools
import math
import sys
import time

from entanglenet import cli
from entanglenet.bell import ALL_LABELS, bell_oracle, bell_state, fidelity, swap_update
from entanglenet.percolation import (
    RobustnessQuery,
    critical_points,
    estimate_threshold,
    eta_critical,
    robustness_region,
    spanning_fraction,
)
from entanglenet.protocol import (
    FAILURE_SCENARIOS,
    NAMED_PATHS,
    analytic_yield,
    estimate_yield,
    reachable_pairs,
    trace_chains,
)
from entanglenet.surfaces import solve_homogeneous, solve_scaled, surface
from entanglenet.tables import REFERENCE
from entanglenet.topology import ARCHIMEDEAN, BravaisConfig, build_patch, lattice_builder


def _line(k, ok, detail, seconds):
    return f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f}s]"


def _timed(fn):
    t = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t


# --- criteria -------------------------------------------------------------------------

def criterion_1():
    worst_p = worst_f = 0.0
    for left, right, outcome in itertools.product(ALL_LABELS, repeat=3):
        prob, state = bell_oracle(left, right, outcome)
        worst_p = max(worst_p, abs(prob - 0.25))
        worst_f = max(worst_f, abs(fidelity(state, bell_state(swap_update(left, right, outcome))) - 1))
    return worst_p < 1e-12 and worst_f < 1e-12, f"64 triples, max |P-1/4|={worst_p:.1e}, max |F-1|={worst_f:.1e}"


def criterion_2():
    worst = 0.0
    for (N, M), gamma, al in itertools.product([(2, 1), (5, 2), (5, 4)], [0.5, 1.0], [0.0, 0.1]):
        cfg = BravaisConfig(N, M, ell=22.0, alpha=al / 22.0, gamma=gamma)
        est = estimate_yield(cfg, 10**5, seed=2000 + 100 * N + 10 * M + int(10 * al) + int(2 * gamma))
        exact = analytic_yield(N, M, gamma, cfg.alpha, cfg.ell)
        if est.std_error == 0:
            z = 0.0 if abs(est.mean - exact) < 1e-12 else math.inf
        else:
            z = abs(est.mean - exact) / est.std_error
        worst = max(worst, z)
    return worst <= 3.0, f"12 settings at 1e5 rounds, max |z|={worst:.2f}"


def criterion_3():
    bad = []
    for N in range(2, 9):
        for M in range(1, 9):
            chains = trace_chains(BravaisConfig(N, M))
            if len(chains) != 2 * (N - 1) or any(c.num_terminals != M for c in chains):
                bad.append((N, M))
    four = (1, 5) in trace_chains(BravaisConfig(5, 4)).pairs() or (1, 5) in reachable_pairs(BravaisConfig(5, 4))
    five = (1, 5) in reachable_pairs(BravaisConfig(5, 5))
    ok = not bad and not four and five
    return ok, f"64 grids bad={bad}, X1->Y5 at M=4: {four}, at M=5: {five}"


def criterion_4():
    base = BravaisConfig(5, 4)
    a = trace_chains(FAILURE_SCENARIOS["a"].apply(base)).pairs()
    b = trace_chains(FAILURE_SCENARIOS["b"].apply(base)).pairs()
    green, blue = NAMED_PATHS["green"], NAMED_PATHS["blue"]
    ok = blue in a and green not in a and green in b and blue not in b
    return ok, f"(a) blue={blue in a} green={green in a}; (b) green={green in b} blue={blue in b}"


FAST = [("square", "bond"), ("triangular", "bond")]
FULL = FAST + [("honeycomb", "bond"), ("kagome", "bond"), ("bowtie-I", "bond"),
               ("square", "site"), ("triangular", "site"), ("bowtie-I", "site")]


def _threshold_row(name, mode):
    builder = lattice_builder(name)
    ref = REFERENCE[builder.lattice_name]
    target = ref.bond if mode == "bond" else ref.site
    est = estimate_threshold(builder, mode, sizes=(32, 64, 128), trials=10**4, seed=7)
    return est.p_c_hat - target, f"{name}/{mode} {est.p_c_hat:.4f} ({est.p_c_hat - target:+.4f})"


def criterion_5():
    t0 = time.perf_counter()
    rows = [_threshold_row(*c) for c in FAST]
    fast_time = time.perf_counter() - t0
    rows += [_threshold_row(*c) for c in FULL[len(FAST):]]
    total = time.perf_counter() - t0
    ok = all(abs(d) <= 0.01 for d, _ in rows) and fast_time < 60 and total < 600
    detail = "; ".join(s for _, s in rows) + f"; fast subset {fast_time:.0f}s, full {total:.0f}s"
    return ok, detail


def _exact_span(graph, bond_p=None, site_r=None):
    """Spanning probability by enumerating every open/closed assignment."""
    edges = [(e.u, e.v) for e in graph.edges]
    n = graph.num_nodes
    bond = bond_p is not None
    q = bond_p if bond else site_r
    width = len(edges) if bond else n
    total = 0.0
    for bits in itertools.product((False, True), repeat=width):
        present = [True] * n if bond else bits
        adj = [[] for _ in range(n)]
        for k, (u, v) in enumerate(edges):
            if (bits[k] if bond else present[u] and present[v]):
                adj[u].append(v)
                adj[v].append(u)
        seen = {i for i in graph.left if present[i]}
        todo = list(seen)
        while todo:
            for w in adj[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        if seen & graph.right:
            k = sum(bits)
            total += q**k * (1 - q) ** (width - k)
    return total


def criterion_6():
    worst = 0.0
    cases = [
        (build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 3, periodic=False), "bond", 0.5),
        (build_patch(ARCHIMEDEAN["3.3.3.3.3.3"], 2, 3, periodic=False), "bond", 0.35),
        (build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 4, periodic=False), "site", 0.6),
    ]
    for g, mode, p in cases:
        assert (g.num_edges if mode == "bond" else g.num_nodes) <= 12
        exact = _exact_span(g, bond_p=p) if mode == "bond" else _exact_span(g, site_r=p)
        frac, _ = spanning_fraction(critical_points(g, mode, 10**5, seed=606), p)
        worst = max(worst, abs(frac - exact) / math.sqrt(exact * (1 - exact) / 10**5))
    return worst <= 3.0, f"3 graphs at 1e5 trials, max |z|={worst:.2f}"


def criterion_7():
    worst = max(abs(eta_critical(r.bond) - r.eta_c) for r in REFERENCE.values())
    return worst < 1e-5 and abs(eta_critical(0.347296) - 0.589318) < 1e-5, \
        f"{len(REFERENCE)} entries, max |sqrt(p_c)-eta_c|={worst:.1e}"


def criterion_8():
    cited = {"square": 0.5, "triangular": 0.347296, "honeycomb": 0.652703, "bowtie-I": 0.404518}
    errs = {n: abs(solve_homogeneous(surface(n)) - v) for n, v in cited.items()}
    iso = solve_scaled(surface("triangular"), (1, 1, math.sqrt(2)))
    ok = max(errs.values()) < 1e-5 and abs(iso - 0.388510) < 1e-5
    return ok, f"max homogeneous error {max(errs.values()):.1e}, isosceles {iso:.6f}"


def criterion_9():
    worst = 0.0
    for name in ("4.4.4.4", "3.3.3.3.3.3", "6.6.6"):
        ref = REFERENCE[name]
        for q in (0.0, 0.1, 0.3):
            eta = math.sqrt(ref.bond / (1 - q))
            v = robustness_region(RobustnessQuery(eta, q, 1.0, ref.bond, ref.site))
            worst = max(worst, abs(v.bond_margin))
    return worst < 1e-12, f"9 boundary points, max |bond margin|={worst:.1e}"


DETERMINISM_RUNS = {
    "protocol": ["--N", "5", "--M", "4", "--gamma", "0.5", "--rounds", "50000"],
    "percolate": ["--lattice", "triangular", "--sizes", "16,32", "--trials", "2000"],
    "threshold": ["--lattice", "square", "--sizes", "8,16,32", "--trials", "2000"],
}


def criterion_10(tmp_dir):
    import os

    mismatched = []
    for command, extra in DETERMINISM_RUNS.items():
        bodies = []
        for w in (1, 4, 8):
            out = os.path.join(tmp_dir, f"{command}-w{w}.csv")
            code = cli.main([command, "--seed", "12345", "--workers", str(w), "--out", out] + extra)
            if code != 0:
                return False, f"{command} exited {code}"
            with open(out) as fh:
                lines = fh.read().splitlines(keepends=True)
            bodies.append("".join(lines[1:]))  # skip the manifest hash line
        if not bodies[0] == bodies[1] == bodies[2]:
            mismatched.append(command)
    return not mismatched, f"protocol/percolate/threshold at workers 1,4,8; mismatched={mismatched}"


LIMITS = {1: 1.0, 2: 30.0, 3: 1.0, 4: 1.0, 6: 10.0, 8: 1.0}


def _check(k, fn, report):
    ok, detail, secs = _timed(fn)
    if k in LIMITS and secs > LIMITS[k]:
        ok = False
        detail += f"; over the {LIMITS[k]:.0f}s limit"
    line = _line(k, ok, detail, secs)
    print(line)
    report(line)
    assert ok, line


# --- pytest entry points ----------------------------------------------------------------

def test_criterion_1(report):
    _check(1, criterion_1, report)


def test_criterion_2(report):
    estimate_yield(BravaisConfig(2, 1), 10, seed=0)  # warm-up outside the timer
    _check(2, criterion_2, report)


def test_criterion_3(report):
    _check(3, criterion_3, report)


def test_criterion_4(report):
    _check(4, criterion_4, report)


def test_criterion_5(report):
    _check(5, criterion_5, report)


def test_criterion_6(report):
    critical_points(build_patch(ARCHIMEDEAN["4.4.4.4"], 3, 3, periodic=False), "site", 1, seed=0)  # compile
    _check(6, criterion_6, report)


def test_criterion_7(report):
    _check(7, criterion_7, report)


def test_criterion_8(report):
    _check(8, criterion_8, report)


def test_criterion_9(report):
    _check(9, criterion_9, report)


def test_criterion_10(report, tmp_path):
    _check(10, lambda: criterion_10(str(tmp_path)), report)


if __name__ == "__main__":
    import tempfile

    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        funcs = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                 criterion_7, criterion_8, criterion_9, lambda: criterion_10(tmp)]
        for k, fn in enumerate(funcs, start=1):
            try:
                _check(k, fn, lambda line: None)
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
