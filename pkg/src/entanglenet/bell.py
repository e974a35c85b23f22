"""Bell-state labels, entanglement-swapping bookkeeping and a dense oracle.

A Bell state is addressed by two bits ``(a, b)``::

    |Phi_{a,b}> = (X^a Z^b (x) 1) |Psi+>,   |Psi+> = (|HV> + |VH>) / sqrt(2)

so ``(0, 0)`` is the network resource state Psi+.  Swapping two pairs with
labels ``l1`` and ``l2`` through a Bell measurement that returns ``l3``
leaves the outer qubits in ``l1 ^ l2 ^ l3`` (bitwise).  The runtime
simulator uses only that XOR rule; :func:`bell_oracle` re-derives it from
16-amplitude state vectors and is meant for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable

import numpy as np

__all__ = [
    "BellLabel",
    "PauliCorrection",
    "DenseTwoQubitState",
    "OracleError",
    "PSI_PLUS",
    "ALL_LABELS",
    "swap_update",
    "fold_labels",
    "chain_correction",
    "apply_correction",
    "bell_state",
    "bell_oracle",
    "fidelity",
    "identify_label",
]


@dataclass(frozen=True, order=True)
class BellLabel:
    a: int
    b: int

    def __post_init__(self):
        if self.a not in (0, 1) or self.b not in (0, 1):
            raise ValueError(f"Bell label bits must be 0 or 1, got ({self.a}, {self.b})")

    def __xor__(self, other: "BellLabel") -> "BellLabel":
        return BellLabel(self.a ^ other.a, self.b ^ other.b)

    def __iter__(self):
        yield self.a
        yield self.b


@dataclass(frozen=True)
class PauliCorrection:
    """The operator ``Z^z_power X^x_power`` applied to one qubit of a pair."""

    x_power: int
    z_power: int

    def __post_init__(self):
        if self.x_power not in (0, 1) or self.z_power not in (0, 1):
            raise ValueError("Pauli powers must be 0 or 1")

    def matrix(self) -> np.ndarray:
        return _Z_POW[self.z_power] @ _X_POW[self.x_power]


PSI_PLUS = BellLabel(0, 0)
ALL_LABELS = tuple(BellLabel(a, b) for a in (0, 1) for b in (0, 1))


def swap_update(left: BellLabel, right: BellLabel, outcome: BellLabel) -> BellLabel:
    """Label of the outer pair after swapping ``left`` and ``right``."""
    return BellLabel(left.a ^ right.a ^ outcome.a, left.b ^ right.b ^ outcome.b)


def fold_labels(labels: Iterable[BellLabel], start: BellLabel = PSI_PLUS) -> BellLabel:
    return reduce(lambda acc, lab: acc ^ lab, labels, start)


def chain_correction(outcomes: Iterable[BellLabel]) -> PauliCorrection:
    """Correction that maps the end-to-end pair of a swap chain back to Psi+.

    All links start in Psi+, so the final label is the XOR of the measured
    outcomes and ``Z^b_tot X^a_tot`` undoes it.
    """
    total = fold_labels(outcomes)
    return PauliCorrection(x_power=total.a, z_power=total.b)


# --- dense oracle ----------------------------------------------------------
# Basis order per qubit: H = 0, V = 1.

class OracleError(ArithmeticError):
    """Raised when a projection leaves a zero-norm state."""


_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_X_POW = (_I, _X)
_Z_POW = (_I, _Z)
_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseTwoQubitState:
    """Amplitudes in the ordered basis HH, HV, VH, VV."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalised (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def matrix(self) -> np.ndarray:
        """Amplitudes as a 2x2 array indexed ``[first, second]``."""
        return self.amplitudes.reshape(2, 2)


def bell_state(label: BellLabel) -> DenseTwoQubitState:
    psi_plus = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
    op = np.kron(_X_POW[label.a] @ _Z_POW[label.b], _I)
    return DenseTwoQubitState(op @ psi_plus)


def apply_correction(
    state: DenseTwoQubitState, correction: PauliCorrection, qubit: int = 0
) -> DenseTwoQubitState:
    op = correction.matrix()
    full = np.kron(op, _I) if qubit == 0 else np.kron(_I, op)
    return DenseTwoQubitState(full @ state.amplitudes)


def fidelity(first: DenseTwoQubitState, second: DenseTwoQubitState) -> float:
    """|<first|second>|^2; insensitive to global phase."""
    return float(abs(np.vdot(first.amplitudes, second.amplitudes)) ** 2)


def identify_label(state: DenseTwoQubitState, tol: float = 1e-9) -> BellLabel:
    for label in ALL_LABELS:
        if abs(fidelity(state, bell_state(label)) - 1.0) <= tol:
            return label
    raise ValueError("state is not a Bell state")


def bell_oracle(
    left: BellLabel, right: BellLabel, outcome: BellLabel
) -> tuple[float, DenseTwoQubitState]:
    """Project the inner qubits of two Bell pairs onto a Bell state.

    Qubits are ordered ``(B1, B1bar, B2, B2bar)`` with flat index
    ``8*B1 + 4*B1bar + 2*B2 + B2bar``; the measurement acts on ``B1bar`` and
    ``B2bar``.  Returns the outcome probability and the normalised state
    left on ``(B1, B2)``.
    """
    first = bell_state(left).amplitudes
    second = bell_state(right).amplitudes
    joint = np.empty(16, dtype=complex)
    for idx in range(16):
        b1, b1bar, b2, b2bar = (idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        joint[idx] = first[2 * b1 + b1bar] * second[2 * b2 + b2bar]

    bra = np.conj(bell_state(outcome).amplitudes)
    residual = np.zeros(4, dtype=complex)
    for idx in range(16):
        b1, b1bar, b2, b2bar = (idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        residual[2 * b1 + b2] += bra[2 * b1bar + b2bar] * joint[idx]

    probability = float(np.sum(np.abs(residual) ** 2))
    if probability <= _NORM_TOL:
        raise OracleError(
            f"zero-norm projection for left={left}, right={right}, outcome={outcome}"
        )
    return probability, DenseTwoQubitState(residual / math.sqrt(probability))
