"""Phase accumulation and photon-loss / dephasing evolution of the sensing mode."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, IntegratorError
from .fock import HERMITIAN_TOL, StateVector, _check_dims

CHI_QS_DEFAULT = 2 * math.pi * 1.90e6  # rad/s

TRACE_DRIFT_MAX = 1e-6
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise DomainError(f"density matrix shape {m.shape} does not match dim {self.dim}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityMatrix":
        return cls(psi.dim, np.outer(psi.amps, psi.amps.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        # Tr(rho^2) = sum |rho_mn|^2 for Hermitian rho
        return float(np.sum(np.abs(self.entries) ** 2))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def min_eigenvalue(self) -> float:
        herm = (self.entries + self.entries.conj().T) / 2
        return float(np.linalg.eigvalsh(herm)[0])

    def overlap(self, psi: StateVector) -> float:
        """<psi|rho|psi>."""
        _check_dims(self.dim, psi.dim)
        return float(np.vdot(psi.amps, self.entries @ psi.amps).real)


@dataclass(frozen=True)
class DecoherenceParams:
    """Loss rate ``kappa`` and dephasing rate ``kappa_phi`` in 1/s; ``chi_qs`` in rad/s."""

    kappa: float = 0.0
    kappa_phi: float = 0.0
    chi_qs: float = CHI_QS_DEFAULT

    def __post_init__(self):
        for name in ("kappa", "kappa_phi", "chi_qs"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {value!r}")

    @property
    def kappa_total(self) -> float:
        return self.kappa + 2 * self.kappa_phi

    @property
    def is_trivial(self) -> bool:
        return self.kappa == 0 and self.kappa_phi == 0


def phase_from_wait(tau: float, chi_qs: float = CHI_QS_DEFAULT) -> float:
    """Dispersive phase theta = -chi_qs * tau (no wrapping)."""
    if tau < 0:
        raise DomainError(f"wait time must be nonnegative, got {tau!r}")
    return -chi_qs * tau


def wait_for_phase(theta: float, chi_qs: float = CHI_QS_DEFAULT) -> float:
    """Wait time that realizes |theta|."""
    return abs(theta) / chi_qs


def apply_phase(state, theta: float):
    """Apply U(theta) = exp(i theta a^dag a) to a StateVector or DensityMatrix."""
    if not np.isfinite(theta):
        raise DomainError(f"phase must be finite, got {theta!r}")
    phases = np.exp(1j * theta * np.arange(state.dim))
    if isinstance(state, DensityMatrix):
        return DensityMatrix(state.dim, phases[:, None] * state.entries * phases.conj()[None, :])
    return StateVector(state.dim, phases * state.amps)


def _generator(dim: int, params: DecoherenceParams):
    """Return L(rho) for the loss + dephasing Lindbladian, applied elementwise.

    Collapse operators sqrt(kappa) a and sqrt(2 kappa_phi) a^dag a.
    """
    n = np.arange(dim)
    m_idx, n_idx = np.meshgrid(n, n, indexing="ij")
    damp = -0.5 * params.kappa * (m_idx + n_idx) - params.kappa_phi * (m_idx - n_idx) ** 2
    feed = params.kappa * np.sqrt((m_idx + 1) * (n_idx + 1))

    def apply(rho):
        out = damp * rho
        # (a rho a^dag)_{mn} = sqrt((m+1)(n+1)) rho_{m+1, n+1}
        out[:-1, :-1] += feed[:-1, :-1] * rho[1:, 1:]
        return out

    return apply


def liouvillian(dim: int, params: DecoherenceParams) -> np.ndarray:
    """Dense superoperator acting on row-major vec(rho)."""
    apply = _generator(dim, params)
    cols = []
    for k in range(dim * dim):
        basis = np.zeros(dim * dim, dtype=complex)
        basis[k] = 1.0
        cols.append(apply(basis.reshape(dim, dim)).reshape(-1))
    return np.array(cols).T


def default_dt(params: DecoherenceParams, t: float) -> float:
    candidates = [t / 100] if t > 0 else []
    if params.kappa_total > 0:
        candidates.append(1 / (50 * params.kappa_total))
    return min(candidates) if candidates else 1.0


def lindblad_evolve(
    rho: DensityMatrix,
    params: DecoherenceParams,
    t: float,
    dt: float | None = None,
    backend: str = "rk4",
) -> DensityMatrix:
    """Evolve ``rho`` for time ``t`` under photon loss and dephasing.

    The free Hamiltonian is zero in this frame; phases are applied
    separately with :func:`apply_phase`. ``backend="rk4"`` uses fixed-step
    fourth-order Runge-Kutta (``dt`` rounded down so the steps tile ``t``);
    ``backend="expm"`` exponentiates the dense Liouvillian.
    """
    if t < 0:
        raise DomainError(f"evolution time must be nonnegative, got {t!r}")
    if dt is None:
        dt = default_dt(params, t)
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if t > 0 and dt > t:
        raise DomainError(f"dt={dt} exceeds total time t={t}")
    if t == 0 or params.is_trivial:
        return DensityMatrix(rho.dim, rho.entries)

    if backend == "expm":
        dim = rho.dim
        vec = expm(liouvillian(dim, params) * t) @ rho.entries.reshape(-1)
        out = vec.reshape(dim, dim)
    elif backend == "rk4":
        out = _rk4(rho, params, t, dt)
    else:
        raise DomainError(f"unknown backend {backend!r}")

    out = (out + out.conj().T) / 2
    result = DensityMatrix(rho.dim, out)
    if result.min_eigenvalue() < -POSITIVITY_TOL:
        raise IntegratorError(
            f"positivity violated (min eigenvalue {result.min_eigenvalue():.3e}); use a smaller dt"
        )
    return result


def _rk4(rho: DensityMatrix, params: DecoherenceParams, t: float, dt: float) -> np.ndarray:
    apply = _generator(rho.dim, params)
    steps = max(math.ceil(t / dt - 1e-9), 1)
    h = t / steps
    r = np.array(rho.entries)
    trace0 = np.trace(r).real
    for _ in range(steps):
        k1 = apply(r)
        k2 = apply(r + 0.5 * h * k1)
        k3 = apply(r + 0.5 * h * k2)
        k4 = apply(r + h * k3)
        r = r + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = abs(np.trace(r).real - trace0)
        if drift > TRACE_DRIFT_MAX or not np.all(np.isfinite(r)):
            raise IntegratorError(f"trace drift {drift:.3e} exceeds {TRACE_DRIFT_MAX}; use a smaller dt")
    if np.max(np.abs(r - r.conj().T)) > 10 * HERMITIAN_TOL:
        raise IntegratorError("Hermiticity lost during integration")
    return r
