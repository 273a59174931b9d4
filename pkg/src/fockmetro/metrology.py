"""Precision bounds, reference limits and classical Fisher information.

All precisions are single-shot standard deviations in radians. Divide by
``sqrt(M)`` (see :func:`multi_shot`) for M independent repetitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UndefinedPrecisionError
from .fock import OperatorMatrix, StateVector, variance_of

PROB_FLOOR = 1e-12

# The shot-noise reference uses the probe's maximum photon number N.
# Using the mean photon number N/2 instead would give sqrt(2/N).
SNL_CONVENTIONS = {
    "snl": "1/sqrt(N), N = maximum photon number of (|0>+|N>)/sqrt(2)",
    "snl_mean_photon": "1/sqrt(N/2), N/2 = mean photon number (not used)",
    "hl": "1/N",
}


@dataclass(frozen=True)
class PrecisionPoint:
    N: int
    delta_theta: float

    def __post_init__(self):
        if not (self.delta_theta > 0 and math.isfinite(self.delta_theta)):
            raise DomainError(f"delta_theta must be positive and finite, got {self.delta_theta!r}")
        if self.N < 1:
            raise DomainError(f"N must be positive, got {self.N}")

    def to_dict(self) -> dict:
        return {"N": int(self.N), "delta_theta": float(self.delta_theta)}


def qcrb(psi: StateVector, generator: OperatorMatrix) -> float:
    """Quantum Cramer-Rao bound 1 / (2 Delta H) for a pure probe."""
    var = variance_of(generator, psi)
    if var <= 0:
        raise UndefinedPrecisionError("generator variance is zero; probe is insensitive to the phase")
    return 1 / (2 * math.sqrt(var))


def quantum_fisher(psi: StateVector, generator: OperatorMatrix) -> float:
    """QFI of a pure probe, 4 (Delta H)^2."""
    return 4 * variance_of(generator, psi)


def hl(N: int) -> float:
    if N < 1:
        raise DomainError("N must be >= 1")
    return 1 / N


def snl(N: int) -> float:
    if N < 1:
        raise DomainError("N must be >= 1")
    return 1 / math.sqrt(N)


def db_enhancement(delta: float, reference: float) -> float:
    """20 log10(reference / delta): positive when ``delta`` beats ``reference``."""
    if not (delta > 0 and reference > 0):
        raise DomainError("precisions must be positive")
    return 20 * math.log10(reference / delta)


def multi_shot(delta: float, shots: int) -> float:
    if shots < 1:
        raise DomainError("shots must be >= 1")
    return delta / math.sqrt(shots)


def binary_precision(P: float, dPdphi: float) -> float:
    """Error-propagation precision sqrt(P (1-P)) / |dP/dphi| of a yes/no outcome."""
    if not 0 < P < 1:
        raise UndefinedPrecisionError(f"P must lie strictly inside (0, 1), got {P!r}")
    if dPdphi == 0 or not math.isfinite(dPdphi):
        raise UndefinedPrecisionError("zero slope: precision undefined")
    return math.sqrt(P * (1 - P)) / abs(dPdphi)


def classical_fisher(probs, derivs) -> float:
    probs = np.asarray(probs, dtype=float)
    derivs = np.asarray(derivs, dtype=float)
    if probs.shape != derivs.shape:
        raise DomainError("probs and derivs must have the same shape")
    if abs(probs.sum() - 1) > 1e-6:
        raise DomainError(f"probabilities sum to {probs.sum():.9f}, not 1")
    keep = probs >= PROB_FLOOR
    return float(np.sum(derivs[keep] ** 2 / probs[keep]))


def fisher_full(probs, derivs) -> float:
    """Precision 1/sqrt(F) with F = sum_n (dP_n/dphi)^2 / P_n.

    Outcomes with P_n below 1e-12 are dropped.
    """
    F = classical_fisher(probs, derivs)
    if F <= 0:
        raise UndefinedPrecisionError("all outcome derivatives vanish")
    return 1 / math.sqrt(F)
