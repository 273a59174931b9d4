"""Truncated Fock-space states and operators.

Everything here works on dense numpy arrays over the basis |0>, ..., |D-1>.
States and operators are frozen dataclasses; nothing mutates after
construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OutOfRangeError, TruncationWarning

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class TruncationPolicy:
    """Picks a Fock cutoff large enough for a probe plus a displacement.

    The base rule ``N_max + ceil(4 alpha_max^2) + pad`` covers a displaced
    vacuum. A displaced |N_max> reaches out to about ``(sqrt(N_max) + alpha)^2``
    photons, so the cutoff is raised to ``(sqrt(N_max) + alpha_max + 4)^2``
    when that is larger; the mass lost above it stays below 1e-14.
    """

    N_max: int
    alpha_max: float = 0.0
    pad: int = 10

    def __post_init__(self):
        if self.N_max < 0 or self.alpha_max < 0 or self.pad < 0:
            raise DomainError("TruncationPolicy fields must be nonnegative")

    @property
    def dim(self) -> int:
        return self.required(self.alpha_max)

    def required(self, alpha_mag: float) -> int:
        base = self.N_max + math.ceil(4 * alpha_mag**2) + max(self.pad, 1)
        if alpha_mag == 0:
            return base
        spread = math.ceil((math.sqrt(self.N_max) + alpha_mag + 4) ** 2)
        return max(base, spread)

    def covers(self, alpha: complex, dim: int) -> bool:
        return dim >= self.required(abs(alpha))


def safe_block(alpha: complex, dim: int, tol: float = 1e-10) -> int:
    """Number of leading columns of D(alpha) that lose less than ``tol`` to truncation.

    Column n of the truncated matrix misses the mass of D(alpha)|n> above the
    cutoff. By Cauchy-Schwarz the deficit of D^dag D on the leading block is
    at most the largest missing mass in it.
    """
    if alpha == 0:
        return dim
    cols = displacement_block(alpha, dim, dim)
    tail = 1 - np.sum(np.abs(cols) ** 2, axis=0)
    bad = np.nonzero(tail > tol)[0]
    return int(bad[0]) if bad.size else dim


@dataclass(frozen=True, eq=False)
class StateVector:
    dim: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.dim < 1 or amps.shape[0] != self.dim:
            raise DomainError(f"amplitude length {amps.shape[0]} does not match dim {self.dim}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = True) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps.shape[0], amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def mean_photon(self) -> float:
        return float(np.dot(np.arange(self.dim), self.populations))

    def padded(self, dim: int) -> "StateVector":
        """Embed into a larger truncation (zero amplitudes above the old cutoff)."""
        if dim < self.dim:
            if np.any(np.abs(self.amps[dim:]) > 0):
                raise OutOfRangeError(f"state has support above requested dim {dim}")
            return StateVector(dim, self.amps[:dim])
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.amps
        return StateVector(dim, out)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    dim: int
    entries: np.ndarray
    truncation_warning: bool = field(default=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise DomainError(f"operator shape {m.shape} does not match dim {self.dim}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            _check_dims(self.dim, other.dim)
            return StateVector(self.dim, self.entries @ other.amps)
        if isinstance(other, OperatorMatrix):
            _check_dims(self.dim, other.dim)
            return OperatorMatrix(
                self.dim,
                self.entries @ other.entries,
                self.truncation_warning or other.truncation_warning,
            )
        return NotImplemented

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.dim, self.entries.conj().T, self.truncation_warning)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def unitarity_deficit(self, block: int | None = None) -> float:
        """max |(O^dag O - I)_{jk}| over the leading ``block`` x ``block`` corner."""
        block = self.dim if block is None else block
        g = self.entries.conj().T @ self.entries
        g = g[:block, :block]
        return float(np.max(np.abs(g - np.eye(block)), initial=0.0))


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DomainError(f"dimension mismatch: {a} != {b}")


def make_fock(n: int, dim: int) -> StateVector:
    if dim < 1:
        raise DomainError("dim must be positive")
    if not 0 <= n < dim:
        raise OutOfRangeError(f"Fock index {n} outside truncation of dim {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return StateVector(dim, amps)


def make_mvs(N: int, dim: int) -> StateVector:
    """Maximum-variance probe (|0> + |N>)/sqrt(2) with real positive coefficients."""
    if N < 1:
        raise DomainError("N must be a positive integer")
    if N >= dim:
        raise OutOfRangeError(f"N={N} does not fit in dim {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[0] = amps[N] = 1 / math.sqrt(2)
    return StateVector(dim, amps)


def make_coherent(alpha: complex, dim: int) -> StateVector:
    """Coherent state from its Poisson series, renormalized after truncation."""
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        return make_fock(0, dim)
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * log_fact
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return StateVector.from_amplitudes(amps)


def number_op(dim: int) -> OperatorMatrix:
    return OperatorMatrix(dim, np.diag(np.arange(dim, dtype=complex)))


def annihilation_op(dim: int) -> OperatorMatrix:
    return OperatorMatrix(dim, np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex))


def parity_op(dim: int) -> OperatorMatrix:
    return OperatorMatrix(dim, np.diag((-1.0) ** np.arange(dim)).astype(complex))


def phase_op(theta: float, dim: int) -> OperatorMatrix:
    """U(theta) = exp(i theta a^dag a); diagonal, exactly unitary."""
    if not np.isfinite(theta):
        raise DomainError(f"phase must be finite, got {theta!r}")
    return OperatorMatrix(dim, np.diag(np.exp(1j * theta * np.arange(dim))))


def displacement_block(alphas, rows: int, cols: int) -> np.ndarray:
    """Matrix elements <m|D(alpha)|n> for m < rows, n < cols.

    Uses the ladder recurrences

        <0|D|n+1> = -conj(alpha) <0|D|n> / sqrt(n+1)
        <m|D|n>   = (alpha <m-1|D|n> + sqrt(n) <m-1|D|n-1>) / sqrt(m)

    which reproduce the associated-Laguerre closed form element by element.
    ``alphas`` may be a scalar or an array; the result has shape
    ``alphas.shape + (rows, cols)``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    shape = alphas.shape
    a = alphas.reshape(-1, 1)
    out = np.empty((a.shape[0], rows, cols), dtype=complex)
    sqrt_n = np.sqrt(np.arange(cols))
    first = np.empty((a.shape[0], cols), dtype=complex)
    first[:, 0] = np.exp(-np.abs(a[:, 0]) ** 2 / 2)
    for n in range(1, cols):
        first[:, n] = -np.conj(a[:, 0]) * first[:, n - 1] / sqrt_n[n]
    out[:, 0, :] = first
    for m in range(1, rows):
        prev = out[:, m - 1, :]
        cur = a * prev
        cur[:, 1:] += sqrt_n[1:] * prev[:, :-1]
        out[:, m, :] = cur / math.sqrt(m)
    return out.reshape(shape + (rows, cols))


def displacement_op(
    alpha: complex, dim: int, policy: TruncationPolicy | None = None
) -> OperatorMatrix:
    """D(alpha) = exp(alpha a^dag - conj(alpha) a), truncated to ``dim``.

    The returned operator carries ``truncation_warning=True`` when ``dim``
    is smaller than the policy requires for this ``|alpha|``.
    """
    policy = policy or TruncationPolicy(N_max=0, alpha_max=abs(alpha))
    if abs(alpha) > policy.alpha_max + 1e-12:
        warnings.warn(
            f"|alpha|={abs(alpha):.3g} exceeds policy alpha_max={policy.alpha_max}",
            TruncationWarning,
            stacklevel=2,
        )
    if alpha == 0:
        return OperatorMatrix(dim, np.eye(dim, dtype=complex))
    m = displacement_block(alpha, dim, dim)
    return OperatorMatrix(dim, m, truncation_warning=not policy.covers(alpha, dim))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    _check_dims(a.dim, b.dim)
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    return min(abs(inner(a, b)) ** 2, 1.0)


def expectation(op: OperatorMatrix, psi: StateVector) -> complex:
    _check_dims(op.dim, psi.dim)
    return complex(np.vdot(psi.amps, op.entries @ psi.amps))


def variance_of(op: OperatorMatrix, psi: StateVector) -> float:
    """<H^2> - <H>^2 for a Hermitian ``op``, clamped at zero."""
    if not op.is_hermitian(HERMITIAN_TOL):
        raise DomainError("variance_of requires a Hermitian operator")
    _check_dims(op.dim, psi.dim)
    h_psi = op.entries @ psi.amps
    second = np.vdot(h_psi, h_psi).real
    first = np.vdot(psi.amps, h_psi).real
    return max(float(second - first**2), 0.0)
