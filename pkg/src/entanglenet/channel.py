"""Lossy-fiber photon transmission.

A single photon crosses a fiber of length ``L`` with probability
``eta = exp(-alpha * L)``.  A Psi+ pair whose two photons each cross one such
segment survives with probability ``eta**2``; otherwise it is flagged as an
erasure.  Everywhere in this package ``eta`` refers to whatever length the
caller passes: the protocol simulator uses the source-to-terminal leg
``ell``, the percolation layer uses half an edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_ALPHA",
    "FiberParams",
    "transmissivity",
    "pair_survival",
    "edge_success",
    "repeaterless_rate",
    "sample_bernoulli",
    "pair_arrival_weights",
    "partial_arrival_given_loss",
]

DEFAULT_ALPHA = 1.0 / 22.0  # 1/km


def _check_probability(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class FiberParams:
    alpha: float = DEFAULT_ALPHA
    gamma: float = 1.0
    q: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")
        for name in ("gamma", "q", "r"):
            _check_probability(name, getattr(self, name))


def transmissivity(alpha: float, length: float) -> float:
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha!r}")
    if length < 0:
        raise ValueError(f"length must be non-negative, got {length!r}")
    return math.exp(-alpha * length)


def pair_survival(eta: float) -> float:
    """Probability that both photons of a pair arrive."""
    _check_probability("eta", eta)
    return eta * eta


def edge_success(eta: float, q: float) -> float:
    """Probability that a link with hardware-failure rate ``q`` delivers Psi+."""
    _check_probability("q", q)
    return pair_survival(eta) * (1.0 - q)


def repeaterless_rate(eta: float) -> float:
    """Repeaterless bound ``-log2(1 - eta)`` in ebits per mode."""
    _check_probability("eta", eta)
    if eta == 1.0:
        raise ValueError("repeaterless rate diverges at eta = 1")
    return -math.log2(1.0 - eta)


def sample_bernoulli(p: float, rng: np.random.Generator) -> bool:
    _check_probability("p", p)
    return bool(rng.random() < p)


def pair_arrival_weights(eta: float) -> tuple[float, float, float]:
    """Probabilities that 2, exactly 1, or 0 photons of a pair arrive."""
    _check_probability("eta", eta)
    return eta * eta, 2.0 * eta * (1.0 - eta), (1.0 - eta) ** 2


def partial_arrival_given_loss(eta: float) -> float:
    """Weight of the one-photon-arrived branch inside the erasure state."""
    _check_probability("eta", eta)
    return 2.0 * eta / (1.0 + eta)
