"""Bond and site percolation on network patches.

Every trial draws one uniform per edge (bond) or per node (site) from its own
stream ``(seed, key..., trial)``; an element is open at probability ``p``
iff its draw is below ``p``.  The same draws therefore decide spanning at
every ``p``, and a trial is summarised by its critical point, the smallest
``p`` at which the patch spans.  Inhomogeneous patches along the path
``p_e = p ** r_e`` use thresholds ``u_e ** (1 / r_e)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _kernels
from .rng import trial_stream
from .topology.graph import NetworkGraph

__all__ = [
    "UnionFind",
    "ThresholdError",
    "PercolationEstimate",
    "RobustnessQuery",
    "RobustnessVerdict",
    "edge_probabilities",
    "length_probabilities",
    "bond_trial",
    "site_trial",
    "critical_points",
    "spanning_fraction",
    "spanning_curve",
    "median_crossing",
    "estimate_threshold",
    "eta_critical",
    "robustness_region",
    "CHUNK_TRIALS",
    "DEFAULT_SIZES",
    "DEFAULT_TRIALS",
]

MODES = ("bond", "site")
CHUNK_TRIALS = 64
DEFAULT_SIZES = (32, 64, 128)
DEFAULT_TRIALS = 10_000


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if already merged."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def cluster_sizes(self) -> dict[int, int]:
        return {r: int(self.size[r]) for r in range(len(self)) if self.find(r) == r}


class ThresholdError(ArithmeticError):
    """The spanning fraction never crosses 1/2 on [0, 1]."""

    def __init__(self, message: str, diagnostics: Mapping[str, object] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


# --- single trials -------------------------------------------------------------

def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be 'bond' or 'site', got {mode!r}")
    return mode


def _require_sides(graph: NetworkGraph) -> None:
    if not graph.has_span_sides:
        raise ValueError(f"graph {graph.name!r} has no left/right boundary sets")


def edge_probabilities(graph: NetworkGraph, p) -> np.ndarray:
    """Per-edge open probabilities from a scalar, a ``class -> p`` map or an array."""
    if isinstance(p, Mapping):
        missing = set(graph.classes) - set(p)
        if missing:
            raise ValueError(f"no probability given for classes {sorted(missing)}")
        table = np.zeros(max(graph.classes) + 1)
        for cls, value in p.items():
            table[cls] = value
        probs = table[graph.edge_classes]
    else:
        probs = np.broadcast_to(np.asarray(p, dtype=float), (graph.num_edges,)).copy()
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("edge probabilities must lie in [0, 1]")
    return probs


def length_probabilities(graph: NetworkGraph, alpha: float) -> np.ndarray:
    """``exp(-alpha * length)`` per edge: the pair survival ``eta**2`` over the
    two half-edges, with ``eta`` taken over half the edge length."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return np.exp(-alpha * graph.edge_lengths)


def bond_trial(graph: NetworkGraph, p, rng: np.random.Generator) -> bool:
    """One bond configuration; True if an open path joins left to right."""
    _require_sides(graph)
    probs = edge_probabilities(graph, p)
    is_open = rng.random(graph.num_edges) < probs
    u, v = graph.edge_arrays
    left, right = graph.side_masks
    every = np.ones(graph.num_nodes, dtype=bool)
    return bool(_kernels.spans(u, v, graph.num_nodes, left, right, is_open, every))


def site_trial(graph: NetworkGraph, r: float, rng: np.random.Generator) -> bool:
    """One site configuration; edges are usable iff both ends are present."""
    _require_sides(graph)
    if not 0 <= r <= 1:
        raise ValueError("r must lie in [0, 1]")
    present = rng.random(graph.num_nodes) < r
    u, v = graph.edge_arrays
    left, right = graph.side_masks
    every_edge = np.ones(graph.num_edges, dtype=bool)
    return bool(_kernels.spans(u, v, graph.num_nodes, left, right, every_edge, present))


# --- critical points -------------------------------------------------------------

def _chunk(graph, mode, seed, key, start, stop, exponents, lo, hi):
    width = graph.num_edges if mode == "bond" else graph.num_nodes
    t = np.empty((stop - start, width))
    for row, trial in enumerate(range(start, stop)):
        t[row] = trial_stream(seed, key, trial).random(width)
    if exponents is not None:
        np.power(t, exponents, out=t)
    left, right = graph.side_masks
    if mode == "bond":
        u, v = graph.edge_arrays
        return _kernels.bond_critical(u, v, graph.num_nodes, left, right, t, lo, hi)
    indptr, indices = graph.adjacency
    return _kernels.site_critical(indptr, indices, graph.num_nodes, left, right, t, lo, hi)


def critical_points(
    graph: NetworkGraph,
    mode: str,
    trials: int,
    seed: int,
    key: Sequence[int] = (),
    ratios: Sequence[float] | np.ndarray | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Critical ``p`` of each trial (``inf`` when the patch never spans).

    ``ratios`` gives per-element exponents ``r_e`` for the path
    ``p_e = p ** r_e``.  Trial ``k`` draws from ``trial_stream(seed, key, k)``,
    which is also what :func:`bond_trial` consumes given that stream, so
    ``bond_trial(graph, p, trial_stream(seed, key, k))`` is True iff
    ``critical_points(...)[k] < p``.
    """
    _check_mode(mode)
    _require_sides(graph)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    exponents = None
    if ratios is not None:
        r = np.asarray(ratios, dtype=float)
        width = graph.num_edges if mode == "bond" else graph.num_nodes
        if r.shape != (width,) or np.any(r <= 0):
            raise ValueError(f"ratios must be {width} positive numbers")
        if not np.all(r == 1.0):
            exponents = 1.0 / r
    key = tuple(int(k) for k in key)
    bounds = [(s, min(s + CHUNK_TRIALS, trials)) for s in range(0, trials, CHUNK_TRIALS)]

    # the first chunk runs with a full sort and sets the window for the rest
    first = _chunk(graph, mode, seed, key, *bounds[0], exponents, 0.0, 1.0 + 1e-9)
    finite = first[np.isfinite(first)]
    if finite.size:
        spread = max(0.02, 0.25 * float(finite.max() - finite.min()))
        lo, hi = max(0.0, float(finite.min()) - spread), min(1.0 + 1e-9, float(finite.max()) + spread)
    else:
        lo, hi = 0.0, 1.0 + 1e-9
    rest = bounds[1:]
    if workers > 1 and len(rest) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _chunk(graph, mode, seed, key, *b, exponents, lo, hi), rest))
    else:
        parts = [_chunk(graph, mode, seed, key, *b, exponents, lo, hi) for b in rest]
    return np.concatenate([first] + parts)


def spanning_fraction(crit: np.ndarray, p: float) -> tuple[float, float]:
    """Fraction of trials spanning at ``p`` and its Wald standard error."""
    frac = float(np.mean(crit < p))
    return frac, math.sqrt(frac * (1.0 - frac) / len(crit))


def median_crossing(crit: np.ndarray, target: float = 0.5, tol: float = 1e-12) -> float:
    """Smallest ``p`` with spanning fraction >= ``target``, by bisection."""
    lo, hi = 0.0, 1.0 + 1e-9
    f_lo = spanning_fraction(crit, lo)[0]
    f_hi = spanning_fraction(crit, hi)[0]
    if f_lo >= target or f_hi < target:
        raise ThresholdError(
            f"spanning fraction does not cross {target} on [0, 1]",
            {"fraction_at_0": f_lo, "fraction_at_1": f_hi, "trials": len(crit)},
        )
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if spanning_fraction(crit, mid)[0] >= target:
            hi = mid
        else:
            lo = mid
    return hi


def spanning_curve(
    builder: Callable[[int], NetworkGraph],
    mode: str,
    p_grid: Sequence[float],
    sizes: Sequence[int],
    trials: int,
    seed: int,
    ratios_for: Callable[[NetworkGraph], np.ndarray] | None = None,
    workers: int = 1,
) -> list[tuple[int, int, int, float, float, float]]:
    """Rows ``(size, rows, cols, p, fraction, sigma)``.

    All points of one size share the same trials, so each curve is
    non-decreasing in ``p``.
    """
    out = []
    for size in sizes:
        graph = builder(size)
        ratios = ratios_for(graph) if ratios_for else None
        crit = critical_points(graph, mode, trials, seed, key=(size,), ratios=ratios, workers=workers)
        for p in p_grid:
            frac, sigma = spanning_fraction(crit, float(p))
            out.append((size, graph.rows, graph.cols, float(p), frac, sigma))
    return out


@dataclass(frozen=True)
class PercolationEstimate:
    lattice: str
    mode: str
    p_c_hat: float
    uncertainty: float
    sizes: tuple[tuple[int, int], ...]
    trials_per_point: int
    crossings: tuple[float, ...] = ()
    crossing_errors: tuple[float, ...] = ()
    extrapolation_residual: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_c_hat <= 1.0:
            raise ValueError(f"p_c_hat {self.p_c_hat} outside [0, 1]")
        if not self.uncertainty > 0:
            raise ValueError("uncertainty must be positive")


def estimate_threshold(
    builder: Callable[[int], NetworkGraph],
    mode: str = "bond",
    sizes: Sequence[int] = DEFAULT_SIZES,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    ratios_for: Callable[[NetworkGraph], np.ndarray] | None = None,
    workers: int = 1,
    name: str | None = None,
) -> PercolationEstimate:
    """Median crossing at each size, extrapolated linearly in ``1 / size``.

    The uncertainty combines the Wald band of each crossing (propagated
    through the fit) with the RMS residual of the fit.
    """
    _check_mode(mode)
    sizes = tuple(int(s) for s in sizes)
    if not sizes or list(sizes) != sorted(set(sizes)):
        raise ValueError("sizes must be distinct and ascending")
    crossings, errors, shapes = [], [], []
    label = name or getattr(builder, "lattice_name", "lattice")
    for size in sizes:
        graph = builder(size)
        ratios = ratios_for(graph) if ratios_for else None
        crit = critical_points(graph, mode, trials, seed, key=(size,), ratios=ratios, workers=workers)
        try:
            mid = median_crossing(crit)
            band = 0.5 / math.sqrt(len(crit))
            lo = median_crossing(crit, 0.5 - band)
            hi = median_crossing(crit, min(0.5 + band, 1.0))
        except ThresholdError as exc:
            exc.diagnostics.update({"lattice": label, "mode": mode, "size": size})
            raise
        crossings.append(mid)
        errors.append(max(0.5 * (hi - lo), 1.0 / len(crit)))
        shapes.append((graph.rows, graph.cols))

    y = np.array(crossings)
    sigma = np.array(errors)
    if len(sizes) == 1:
        return PercolationEstimate(label, mode, float(y[0]), float(sigma[0]), tuple(shapes),
                                   trials, tuple(crossings), tuple(errors), 0.0)
    x = 1.0 / np.array(sizes, dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    w = 1.0 / sigma**2
    normal = design.T @ (design * w[:, None])
    coef_map = np.linalg.solve(normal, (design * w[:, None]).T)  # rows: intercept, slope
    intercept, slope = coef_map @ y
    var_intercept = float(np.sum(coef_map[0] ** 2 * sigma**2))
    resid = y - (intercept + slope * x)
    rms = float(np.sqrt(np.mean(resid**2)))
    p_hat = float(np.clip(intercept, 0.0, 1.0))
    return PercolationEstimate(
        lattice=label,
        mode=mode,
        p_c_hat=p_hat,
        uncertainty=math.sqrt(var_intercept + rms**2),
        sizes=tuple(shapes),
        trials_per_point=trials,
        crossings=tuple(crossings),
        crossing_errors=tuple(errors),
        extrapolation_residual=rms,
    )


# --- figures of merit ---------------------------------------------------------------

def eta_critical(p_c_bond: float) -> float:
    """Critical single-leg transmissivity ``sqrt(p_c)``."""
    if not 0.0 <= p_c_bond <= 1.0:
        raise ValueError("p_c_bond must lie in [0, 1]")
    return math.sqrt(p_c_bond)


@dataclass(frozen=True)
class RobustnessQuery:
    eta: float
    q: float
    r: float
    p_c_bond: float
    p_c_site: float

    def __post_init__(self):
        for name in ("eta", "q", "r", "p_c_bond", "p_c_site"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class RobustnessVerdict:
    robust: bool
    margin: float
    bond_margin: float
    site_margin: float


def robustness_region(query: RobustnessQuery) -> RobustnessVerdict:
    """Bond criterion ``eta^2 (1 - q) >= p_c_bond`` and site criterion
    ``r >= p_c_site``, both required.  Combining the two is a conservative
    choice; each was derived with the other kind of failure absent."""
    bond = query.eta**2 * (1.0 - query.q) - query.p_c_bond
    site = query.r - query.p_c_site
    return RobustnessVerdict(bond >= 0 and site >= 0, min(bond, site), bond, site)
