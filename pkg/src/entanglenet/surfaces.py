"""Critical surfaces of inhomogeneous bond percolation.

A surface is a multilinear polynomial ``F(p_1, ..., p_k)`` stored as a list
of monomials; the unit cell is critical where ``F = 1`` and supercritical
where ``F > 1``.  Edge classes follow the unit cells built by
:func:`entanglenet.topology.lattices.build_inhomogeneous`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "CriticalSurface",
    "SURFACES",
    "surface",
    "residual",
    "solve_homogeneous",
    "solve_scaled",
    "LengthProfile",
    "CriticalLengths",
    "critical_lengths",
    "RootError",
]

BISECT_TOL = 1e-10
# steep scaling paths amplify a small bracket, so also ask for a small residual
RESIDUAL_TOL = 1e-12


class RootError(ArithmeticError):
    """No sign change on the search interval."""


def _terms(k: int, spec: Sequence[tuple[float, str]]) -> tuple[tuple[float, tuple[int, ...]], ...]:
    out = []
    for coef, word in spec:
        exps = [0] * k
        for ch in word:
            exps[int(ch) - 1] = 1
        out.append((float(coef), tuple(exps)))
    return tuple(out)


@dataclass(frozen=True)
class CriticalSurface:
    lattice: str
    arity: int
    monomials: tuple[tuple[float, tuple[int, ...]], ...]
    exact: bool
    source: str = ""

    def __post_init__(self):
        for coef, exps in self.monomials:
            if len(exps) != self.arity or any(e not in (0, 1) for e in exps):
                raise ValueError(f"monomial {exps} is not multilinear in {self.arity} variables")

    def value(self, probs: Sequence[float]) -> float:
        p = np.asarray(probs, dtype=float)
        if p.shape != (self.arity,):
            raise ValueError(f"{self.lattice} surface takes {self.arity} probabilities, got {p.shape}")
        total = 0.0
        for coef, exps in self.monomials:
            term = coef
            for x, e in zip(p, exps):
                if e:
                    term *= x
            total += term
        return total


# Bow-tie I, classes as in the lattice builder: 5 is the bond shared by the
# two triangles of a cell, {1, 2} close the triangle standing on it and
# {3, 4} the triangle hanging beneath the next one.  The cubic terms with
# p5 enter as -p1p2p5 - p3p4p5 and the quintic term with a plus sign.  This
# form is invariant under swapping the triangles (1<->3, 2<->4) and its
# homogeneous root is Wierman's 0.404518.
SURFACES: dict[str, CriticalSurface] = {
    "square": CriticalSurface("square", 2, _terms(2, [(1, "1"), (1, "2")]), True, "Sykes & Essam 1964"),
    "triangular": CriticalSurface(
        "triangular", 3, _terms(3, [(1, "1"), (1, "2"), (1, "3"), (-1, "123")]), True, "Sykes & Essam 1964"
    ),
    "honeycomb": CriticalSurface(
        "honeycomb", 3, _terms(3, [(1, "12"), (1, "13"), (1, "23"), (-1, "123")]), True, "Sykes & Essam 1964"
    ),
    "bowtie-I": CriticalSurface(
        "bowtie-I",
        5,
        _terms(5, [
            (1, "5"),
            (1, "12"), (1, "13"), (1, "14"), (1, "23"), (1, "24"), (1, "34"),
            (-1, "123"), (-1, "124"), (-1, "134"), (-1, "234"),
            (-1, "125"), (-1, "345"),
            (1, "12345"),
        ]),
        False,
        "Scullard & Ziff 2008 (conjectured)",
    ),
}


def surface(name: str) -> CriticalSurface:
    key = name.strip()
    aliases = {"4.4.4.4": "square", "3.3.3.3.3.3": "triangular", "6.6.6": "honeycomb",
               "bowtie-i": "bowtie-I", "bow-tie-i": "bowtie-I"}
    key = aliases.get(key.lower(), key)
    if key.lower() in SURFACES:
        key = key.lower()
    if key not in SURFACES:
        raise KeyError(f"no critical surface for {name!r}; known: {sorted(SURFACES)}")
    return SURFACES[key]


def residual(surf: CriticalSurface, probs: Sequence[float]) -> float:
    """``F(p) - 1``: negative below the surface, non-negative on or above it."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (surf.arity,):
        raise ValueError(f"{surf.lattice} surface takes {surf.arity} probabilities, got {len(p)}")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return surf.value(p) - 1.0


def _bisect(f, lo: float, hi: float, tol: float = BISECT_TOL, keep_nonnegative: bool = False) -> float:
    """Bracketed bisection to a ``tol`` bracket and ``|f| < RESIDUAL_TOL``.

    With ``keep_nonnegative`` return the bracket end where ``f >= 0``.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise RootError(f"no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_hi > 0):
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo <= tol and max(abs(f_lo), abs(f_hi)) < RESIDUAL_TOL:
            break
    if keep_nonnegative:
        return lo if f_hi < 0 else hi
    return 0.5 * (lo + hi)


def solve_homogeneous(surf: CriticalSurface) -> float:
    """Root of ``F(p, ..., p) = 1`` in (0, 1]."""
    return _bisect(lambda p: surf.value([p] * surf.arity) - 1.0, 0.0, 1.0)


def solve_scaled(surf: CriticalSurface, ratios: Sequence[float]) -> float:
    """Base probability ``p`` with ``F(p^r_1, ..., p^r_k) = 1``."""
    r = np.asarray(ratios, dtype=float)
    if r.shape != (surf.arity,):
        raise ValueError(f"{surf.lattice} surface takes {surf.arity} ratios, got {len(r)}")
    if np.any(r <= 0):
        raise ValueError("ratios must be positive")
    return _bisect(lambda p: surf.value(p**r) - 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class LengthProfile:
    class_lengths: tuple[float, ...]
    alpha: float

    def __init__(self, class_lengths: Mapping[int, float] | Sequence[float], alpha: float):
        if isinstance(class_lengths, Mapping):
            keys = sorted(class_lengths)
            if keys != list(range(1, len(keys) + 1)):
                raise ValueError("class lengths must be numbered 1..k")
            values = tuple(float(class_lengths[k]) for k in keys)
        else:
            values = tuple(float(x) for x in class_lengths)
        if not values or any(v <= 0 for v in values):
            raise ValueError("class lengths must be positive")
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "class_lengths", values)
        object.__setattr__(self, "alpha", float(alpha))

    def probabilities(self, scale: float = 1.0) -> np.ndarray:
        return np.exp(-self.alpha * scale * np.asarray(self.class_lengths))


@dataclass(frozen=True)
class CriticalLengths:
    scale: float  # inf when any scale stays supercritical
    lengths: tuple[float, ...]
    probabilities: tuple[float, ...]
    residual: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.scale)


def critical_lengths(surf: CriticalSurface, profile: LengthProfile, scale_cap: float = 1e9) -> CriticalLengths:
    """Largest common scale ``s`` of the class lengths that keeps ``F >= 1``."""
    if len(profile.class_lengths) != surf.arity:
        raise ValueError(f"{surf.lattice} surface needs {surf.arity} class lengths")
    # F(1, ..., 1) >= 1 for every stored surface, so s -> 0 is supercritical
    assert surf.value([1.0] * surf.arity) >= 1.0
    f = lambda s: surf.value(profile.probabilities(s)) - 1.0  # noqa: E731
    if f(scale_cap) >= 0:
        n = surf.arity
        probs = tuple(float(x) for x in profile.probabilities(scale_cap))
        return CriticalLengths(math.inf, (math.inf,) * n, probs, float(f(scale_cap)))
    # solve in log-probability space: p = exp(-alpha * s * l), bisect on s
    hi = 1.0
    while f(hi) >= 0:
        hi *= 2.0
    s = _bisect(f, 0.0, hi, tol=BISECT_TOL * hi, keep_nonnegative=True)
    lengths = tuple(s * x for x in profile.class_lengths)
    probs = tuple(float(x) for x in profile.probabilities(s))
    return CriticalLengths(s, lengths, probs, float(f(s)))
