"""Optimal (Ramsey-like) and hybrid (displacement + photon counting) schemes.

Hybrid model
------------
The outcome probabilities are

    P_n(phi) = |<n| D(beta) U(phi) |Psi(N)>|^2,   U(phi) = exp(-i phi a^dag a),

with ``beta = alpha_mag * exp(i * alpha_phase_offset)``. Sweeping the
displacement phase in the lab frame is the same as sweeping ``phi`` here
(a frame rotation by ``U(phi)`` moves it from D onto the state), so ``phi``
enters exactly once. Only ``phi + alpha_phase_offset`` is physical; the
optimizer keeps the offset at 0 and searches over ``phi_work``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import DecoherenceParams, DensityMatrix, apply_phase, lindblad_evolve, wait_for_phase
from .errors import DegenerateError, DomainError, OutOfRangeError, TruncationWarning
from .fock import TruncationPolicy, displacement_block, fidelity, make_mvs, phase_op
from .metrology import PROB_FLOOR, binary_precision, fisher_full

ALPHA_MAX = 3.0
ALPHA_STEP = 0.1
N_EXTRA = 8
PHI_STEPS_PER_PI = 24
TIE_TOL = 1e-9
DETECTORS = ("binary", "number_resolving")


@dataclass(frozen=True)
class HybridConfig:
    N: int
    alpha_mag: float
    alpha_phase_offset: float = 0.0
    n_detect: int = 0
    phi_work: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if self.alpha_mag < 0:
            raise DomainError("alpha_mag must be nonnegative")
        if self.n_detect < 0:
            raise DomainError("n_detect must be nonnegative")

    @property
    def beta(self) -> complex:
        return self.alpha_mag * complex(math.cos(self.alpha_phase_offset), math.sin(self.alpha_phase_offset))

    def validate(self, dim: int, alpha_max: float = ALPHA_MAX) -> None:
        if self.n_detect >= dim:
            raise OutOfRangeError(f"n_detect={self.n_detect} outside dim {dim}")
        if self.N >= dim:
            raise OutOfRangeError(f"N={self.N} outside dim {dim}")
        if self.alpha_mag > alpha_max + 1e-12:
            raise DomainError(f"alpha_mag={self.alpha_mag} exceeds alpha_max={alpha_max}")

    def to_dict(self) -> dict:
        return {k: (int(v) if isinstance(v, (int, np.integer)) else float(v)) for k, v in asdict(self).items()}


@dataclass(frozen=True, eq=False)
class FringeScan:
    N: int
    theta: np.ndarray
    probabilities: np.ndarray
    shots: int = 0
    counts: np.ndarray | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        probs = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if theta.shape != probs.shape:
            raise DomainError("theta and probabilities must have equal length")
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise DomainError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "probabilities", np.clip(probs, 0.0, 1.0))
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
            if counts.shape != theta.shape:
                raise DomainError("counts must match theta in length")
            if np.any(counts < 0) or np.any(counts > self.shots):
                raise DomainError("counts must lie in [0, shots]")
            object.__setattr__(self, "counts", counts)

    @property
    def empirical(self) -> np.ndarray:
        """Observed frequencies when counts are present, otherwise the exact probabilities."""
        if self.counts is None or self.shots == 0:
            return self.probabilities
        return self.counts / self.shots


@dataclass(frozen=True)
class HybridResult:
    config: HybridConfig
    precision: float
    detector: str
    dim: int

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "precision": float(self.precision),
            "detector": self.detector,
            "dim": int(self.dim),
        }


# -- optimal scheme ----------------------------------------------------------


def optimal_probability(N: int, theta, contrast_A: float = 0.5, contrast_B: float = 0.5, check: bool = False):
    """A + B cos(N theta); the defaults give the ideal projection probability."""
    if N < 1:
        raise DomainError("N must be >= 1")
    lo, hi = contrast_A - abs(contrast_B), contrast_A + abs(contrast_B)
    if lo < -1e-12 or hi > 1 + 1e-12:
        raise DomainError(f"A={contrast_A}, B={contrast_B} leave the probability range [0, 1]")
    p = contrast_A + contrast_B * np.cos(N * np.asarray(theta, dtype=float))
    if check:
        psi = make_mvs(N, N + 1)
        for th, value in zip(np.atleast_1d(theta), np.atleast_1d(p)):
            ideal = fidelity(psi, phase_op(float(th), N + 1) @ psi)
            expect = contrast_A + contrast_B * (2 * ideal - 1)
            if abs(expect - value) > 1e-12:
                raise AssertionError(f"closed form disagrees with state overlap at theta={th}")
    return float(p) if np.ndim(p) == 0 else p


def optimal_scan(
    N: int,
    theta_grid,
    params: DecoherenceParams | None = None,
    readout: tuple[float, float] = (0.5, 0.5),
    dim: int | None = None,
    dt: float | None = None,
) -> FringeScan:
    """Projection probability onto |Psi(N)> after a phase theta.

    With ``params``, each point starts from |Psi(N)><Psi(N)|, decays for the
    wait ``|theta| / chi_qs`` and then picks up U(theta). Loss and dephasing
    commute with U(theta), so the order does not matter. ``readout=(A, B)``
    maps an ideal probability p to ``A + B (2p - 1)``.
    """
    theta = np.asarray(theta_grid, dtype=float).reshape(-1)
    if theta.size == 0:
        raise DomainError("theta grid is empty")
    A, B = readout
    if params is None or params.is_trivial:
        probs = optimal_probability(N, theta, A, B)
        return FringeScan(N, theta, np.atleast_1d(probs))

    dim = dim or N + 1
    psi = make_mvs(N, dim)
    rho0 = DensityMatrix.from_state(psi)
    probs = np.empty_like(theta)
    for k, th in enumerate(theta):
        rho = lindblad_evolve(rho0, params, wait_for_phase(th, params.chi_qs), dt=dt)
        p = apply_phase(rho, th).overlap(psi)
        probs[k] = A + B * (2 * p - 1)
    return FringeScan(N, theta, probs)


# -- hybrid scheme -----------------------------------------------------------


def default_dim(N: int, alpha_max: float = ALPHA_MAX) -> int:
    return TruncationPolicy(N_max=N, alpha_max=alpha_max).dim


def _columns(N: int, beta, dim: int):
    """<n|D(beta)|0> and <n|D(beta)|N> for n < dim; leading axes follow ``beta``."""
    block = displacement_block(beta, dim, N + 1)
    return block[..., 0], block[..., N]


def _amplitudes(c0, cN, N: int, phis):
    """Amplitudes <n|D U(phi)|Psi(N)> and their phi-derivatives, shape (..., n, phi)."""
    rot = np.exp(-1j * N * np.asarray(phis, dtype=float))
    amp = (c0[..., :, None] + cN[..., :, None] * rot) / math.sqrt(2)
    damp = (-1j * N) * cN[..., :, None] * rot / math.sqrt(2)
    return amp, damp


def _probabilities(c0, cN, N: int, phis):
    amp, damp = _amplitudes(c0, cN, N, phis)
    return np.abs(amp) ** 2, 2 * np.real(np.conj(amp) * damp)


def counting_statistics(psi, beta: complex, phi: float, rows: int | None = None):
    """Photon-count distribution of D(beta) U(phi) psi and its phi-derivative.

    Works for any probe; ``rows`` sets how many outcomes n are returned.
    """
    rows = rows or psi.dim
    n = np.arange(psi.dim)
    D = displacement_block(beta, rows, psi.dim)
    rotated = np.exp(-1j * phi * n) * psi.amps
    amp = D @ rotated
    damp = D @ (-1j * n * rotated)
    return np.abs(amp) ** 2, 2 * np.real(np.conj(amp) * damp)


def hybrid_distribution(cfg: HybridConfig, phi: float, dim: int):
    """Probabilities and phi-derivatives of every photon-number outcome n < dim."""
    cfg.validate(dim, alpha_max=np.inf)
    c0, cN = _columns(cfg.N, cfg.beta, dim)
    P, dP = _probabilities(c0, cN, cfg.N, [phi])
    P, dP = P[:, 0], dP[:, 0]
    tail = 1 - P[: max(dim - 2, 0) + 1].sum()
    if tail > 1e-8:
        warnings.warn(f"displaced state leaks {tail:.2e} beyond dim {dim}", TruncationWarning, stacklevel=3)
    return P, dP


def hybrid_probability(cfg: HybridConfig, phi: float, dim: int) -> float:
    """P(n_detect | phi) = |<n_detect| D(beta) U(phi) |Psi(N)>|^2."""
    P, _ = hybrid_distribution(cfg, phi, dim)
    return float(P[cfg.n_detect])


def hybrid_scan(
    cfg: HybridConfig,
    phi_grid,
    dim: int | None = None,
    params: DecoherenceParams | None = None,
    dt: float | None = None,
) -> FringeScan:
    """P(n_detect) versus phi; with ``params`` the probe decays for |phi| / chi_qs first."""
    dim = dim or default_dim(cfg.N, max(cfg.alpha_mag, 1e-9))
    cfg.validate(dim, alpha_max=np.inf)
    phis = np.asarray(phi_grid, dtype=float).reshape(-1)
    if phis.size == 0:
        raise DomainError("phi grid is empty")
    if params is None or params.is_trivial:
        c0, cN = _columns(cfg.N, cfg.beta, dim)
        P, _ = _probabilities(c0[cfg.n_detect : cfg.n_detect + 1], cN[cfg.n_detect : cfg.n_detect + 1], cfg.N, phis)
        return FringeScan(cfg.N, phis, P[0])

    row = displacement_block(cfg.beta, dim, dim)[cfg.n_detect]
    rho0 = DensityMatrix.from_state(make_mvs(cfg.N, dim))
    probs = np.empty_like(phis)
    for k, phi in enumerate(phis):
        rho = lindblad_evolve(rho0, params, wait_for_phase(phi, params.chi_qs), dt=dt)
        rho = apply_phase(rho, -phi)
        probs[k] = float(np.real(row @ rho.entries @ row.conj()))
    return FringeScan(cfg.N, phis, probs)


def _binary_grid(P, dP):
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.sqrt(P * (1 - P)) / np.abs(dP)
    ok = (P > PROB_FLOOR) & (P < 1 - PROB_FLOOR) & (np.abs(dP) > 0)
    return np.where(ok & np.isfinite(prec), prec, np.inf)


def _fisher_grid(P, dP, axis):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P >= PROB_FLOOR, dP**2 / P, 0.0)
    F = terms.sum(axis=axis)
    with np.errstate(divide="ignore"):
        return np.where(F > 0, 1 / np.sqrt(F), np.inf)


def _refine(objective, x0, alpha_max: float):
    """Nelder-Mead over (alpha_mag, phi) from the best grid cell."""
    penalty = 1e6

    def wrapped(x):
        if not 0 <= x[0] <= alpha_max:
            return penalty
        value = objective(x[0], x[1])
        return value if np.isfinite(value) else penalty

    res = minimize(
        wrapped,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000, "maxfev": 8000},
    )
    start = wrapped(x0)
    if res.fun <= start:
        return res.x, float(res.fun)
    return np.asarray(x0, dtype=float), float(start)


def optimize_hybrid(
    N: int,
    dim: int | None = None,
    detector: str = "binary",
    alpha_max: float = ALPHA_MAX,
    alpha_step: float = ALPHA_STEP,
    n_extra: int = N_EXTRA,
) -> HybridResult:
    """Minimize the single-shot precision of the hybrid scheme for probe |Psi(N)>.

    Grid first (|alpha| in ``alpha_step`` steps up to ``alpha_max``, phi in
    pi/(24N) steps over one fringe period, and n in 0..N+n_extra for the
    binary detector), then Nelder-Mead on (|alpha|, phi) from the best cell.
    For the binary detector every n is refined and the smallest n within
    1e-9 of the best precision wins. The number-resolving result reports
    ``n_detect`` as the outcome with the largest Fisher contribution.
    """
    if detector not in DETECTORS:
        raise DomainError(f"detector must be one of {DETECTORS}, got {detector!r}")
    dim = dim or default_dim(N, alpha_max)
    if N >= dim - math.ceil(4 * alpha_max**2):
        raise OutOfRangeError(f"dim={dim} too small for N={N} with alpha_max={alpha_max}")

    alphas = np.round(np.arange(0, int(round(alpha_max / alpha_step)) + 1) * alpha_step, 12)
    period = 2 * math.pi / N
    phis = np.arange(2 * PHI_STEPS_PER_PI) * math.pi / (PHI_STEPS_PER_PI * N)
    c0, cN = _columns(N, alphas, dim)
    P, dP = _probabilities(c0, cN, N, phis)  # (alpha, n, phi)

    if detector == "binary":
        n_max = min(N + n_extra, dim - 1)
        grid = _binary_grid(P[:, : n_max + 1], dP[:, : n_max + 1])
        candidates = []
        for n in range(n_max + 1):
            sub = grid[:, n, :]
            if not np.isfinite(sub).any():
                continue
            ia, ip = np.unravel_index(np.argmin(sub), sub.shape)

            def objective(a, phi, n=n):
                c0_, cN_ = _columns(N, a, n + 1)
                p, d = _probabilities(c0_[n : n + 1], cN_[n : n + 1], N, [phi])
                return float(_binary_grid(p, d)[0, 0])

            x, val = _refine(objective, (alphas[ia], phis[ip]), alpha_max)
            candidates.append((val, n, x))
        if not candidates:
            raise DegenerateError(f"no grid point with nonzero slope for N={N}")
        best = min(c[0] for c in candidates)
        val, n_best, x = next(c for c in candidates if c[0] - best <= TIE_TOL)
    else:
        grid = _fisher_grid(P, dP, axis=1)
        if not np.isfinite(grid).any():
            raise DegenerateError(f"no grid point with nonzero Fisher information for N={N}")
        ia, ip = np.unravel_index(np.argmin(grid), grid.shape)

        def objective(a, phi):
            c0_, cN_ = _columns(N, a, dim)
            p, d = _probabilities(c0_, cN_, N, [phi])
            return float(_fisher_grid(p, d, axis=0)[0])

        x, val = _refine(objective, (alphas[ia], phis[ip]), alpha_max)
        c0_, cN_ = _columns(N, x[0], dim)
        p, d = _probabilities(c0_, cN_, N, [x[1]])
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(p[:, 0] >= PROB_FLOOR, d[:, 0] ** 2 / p[:, 0], 0.0)
        n_best = int(np.argmax(contrib))

    if not np.isfinite(val) or val >= 1e6:
        raise DegenerateError(f"optimizer found no usable working point for N={N}")
    cfg = HybridConfig(
        N=N,
        alpha_mag=float(x[0]),
        alpha_phase_offset=0.0,
        n_detect=int(n_best),
        phi_work=float(np.mod(x[1], period)),
    )
    return HybridResult(cfg, float(val), detector, dim)


def hybrid_precision(cfg: HybridConfig, dim: int, detector: str = "binary", phi: float | None = None) -> float:
    """Single-shot precision of ``cfg`` at ``phi`` (default: its working point)."""
    phi = cfg.phi_work if phi is None else phi
    P, dP = hybrid_distribution(cfg, phi, dim)
    if detector == "binary":
        return binary_precision(float(P[cfg.n_detect]), float(dP[cfg.n_detect]))
    return fisher_full(P, dP)


__all__ = [
    "FringeScan",
    "HybridConfig",
    "HybridResult",
    "optimal_probability",
    "optimal_scan",
    "hybrid_probability",
    "hybrid_distribution",
    "counting_statistics",
    "hybrid_scan",
    "hybrid_precision",
    "optimize_hybrid",
    "default_dim",
]
