"""Shot-noise sampling, fringe fits, precision extraction and scaling regressions.

Random numbers come from numpy's Philox4x32-10 counter-based generator.
Point ``k`` of a scan sampled with seed ``s`` draws from
``Generator(Philox(SeedSequence(s, spawn_key=(k,))))``, so every count
depends only on ``(s, k, M, p_k)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from .errors import DomainError, FitError, UndefinedPrecisionError
from .metrology import PrecisionPoint
from .schemes import FringeScan

FIT_MAX_ITER = 200
FIT_GTOL = 1e-12
RANGE_SLACK = 0.02


@dataclass(frozen=True)
class FringeFit:
    A: float
    B: float
    N_assumed: int
    phi0: float
    residual_rms: float
    stderr: tuple[float, float, float] | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "A": float(self.A),
            "B": float(self.B),
            "N_assumed": int(self.N_assumed),
            "phi0": float(self.phi0),
            "residual_rms": float(self.residual_rms),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FringeFit":
        return cls(float(d["A"]), float(d["B"]), int(d["N_assumed"]), float(d["phi0"]), float(d["residual_rms"]))


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: tuple[PrecisionPoint, ...]

    def to_dict(self) -> dict:
        return {
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "r_squared": float(self.r_squared),
            "points_used": [p.to_dict() for p in self.points_used],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingFit":
        pts = tuple(PrecisionPoint(int(p["N"]), float(p["delta_theta"])) for p in d["points_used"])
        return cls(float(d["slope"]), float(d["intercept"]), float(d["r_squared"]), pts)


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_shots(scan: FringeScan, M: int, seed: int) -> FringeScan:
    """Draw Binomial(M, p_k) counts for every point of an exact scan."""
    if M < 1:
        raise DomainError("M must be >= 1")
    counts = np.array(
        [point_rng(seed, k).binomial(M, p) for k, p in enumerate(scan.probabilities)],
        dtype=np.int64,
    )
    return FringeScan(scan.N, scan.theta, counts / M, shots=M, counts=counts)


def _model(params, x):
    A, B, phi0 = params
    return A + B * np.cos(x + phi0)


def _jacobian(params, x):
    _, B, phi0 = params
    return np.column_stack([np.ones_like(x), np.cos(x + phi0), -B * np.sin(x + phi0)])


def _weights(scan: FringeScan) -> np.ndarray:
    if scan.counts is None or scan.shots == 0:
        return np.ones_like(scan.theta)
    M = scan.shots
    p = scan.counts / M
    var = np.maximum(p * (1 - p) / M, 1 / (4 * M**2))
    return 1 / np.sqrt(var)


def fit_fringe(scan: FringeScan, N_assumed: int) -> FringeFit:
    """Weighted least-squares fit of ``A + B cos(N theta + phi0)`` with N fixed.

    Binomial weights are used when the scan carries counts. A weighted linear
    solve gives the start point; Levenberg-Marquardt with the analytic
    Jacobian polishes it.
    """
    theta, y = scan.theta, scan.empirical
    if theta.size < 6:
        raise DomainError(f"need at least 6 points, got {theta.size}")
    period = 2 * math.pi / N_assumed
    if np.ptp(theta) < period * (1 - 1e-9):
        raise DomainError(f"scan spans {np.ptp(theta):.4g} rad, less than one period {period:.4g}")

    x = N_assumed * theta
    w = _weights(scan)
    design = np.column_stack([np.ones_like(x), np.cos(x), -np.sin(x)])
    lin, *_ = np.linalg.lstsq(design * w[:, None], y * w, rcond=None)
    start = np.array([lin[0], math.hypot(lin[1], lin[2]), math.atan2(lin[2], lin[1])])

    res = least_squares(
        lambda p: w * (_model(p, x) - y),
        start,
        jac=lambda p: w[:, None] * _jacobian(p, x),
        method="lm",
        max_nfev=FIT_MAX_ITER,
        gtol=FIT_GTOL,
        xtol=1e-15,
        ftol=1e-15,
    )
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(
            f"fringe fit did not converge: {res.message}",
            {"status": res.status, "nfev": res.nfev, "start": start.tolist(), "x": res.x.tolist()},
        )
    A, B, phi0 = res.x
    if B < 0:
        B, phi0 = -B, phi0 + math.pi
    phi0 = math.remainder(phi0, 2 * math.pi)
    if A - B < -RANGE_SLACK or A + B > 1 + RANGE_SLACK:
        raise FitError(f"fit leaves the probability range: A={A:.4g}, B={B:.4g}", {"A": A, "B": B})

    resid = _model((A, B, phi0), x) - y
    stderr = None
    jac = w[:, None] * _jacobian((A, B, phi0), x)
    try:
        cov = np.linalg.inv(jac.T @ jac)
        if scan.counts is None:
            dof = max(x.size - 3, 1)
            cov = cov * float(np.sum((w * resid) ** 2)) / dof
        stderr = tuple(float(s) for s in np.sqrt(np.clip(np.diag(cov), 0, None)))
    except np.linalg.LinAlgError:
        pass
    return FringeFit(float(A), float(B), int(N_assumed), float(phi0), float(np.sqrt(np.mean(resid**2))), stderr)


def precision_from_fit(fit: FringeFit) -> PrecisionPoint:
    """sqrt(A (1 - A)) / (N B), the precision at the fringe's steepest point."""
    if not 0 < fit.A < 1:
        raise UndefinedPrecisionError(f"A must lie in (0, 1), got {fit.A}")
    if fit.B <= 0:
        raise UndefinedPrecisionError("zero contrast")
    return PrecisionPoint(fit.N_assumed, math.sqrt(fit.A * (1 - fit.A)) / (fit.N_assumed * fit.B))


def scaling_fit(points) -> ScalingFit:
    """OLS of log10(delta_theta) on log10(N)."""
    points = tuple(sorted(points, key=lambda p: p.N))
    if len(points) < 3:
        raise DomainError(f"need at least 3 points, got {len(points)}")
    Ns = [p.N for p in points]
    if len(set(Ns)) != len(Ns):
        raise DomainError("scaling fit needs distinct N values")
    lx = np.log10(np.array(Ns, dtype=float))
    ly = np.log10(np.array([p.delta_theta for p in points]))
    reg = stats.linregress(lx, ly)
    r2 = min(max(float(reg.rvalue) ** 2, 0.0), 1.0)
    return ScalingFit(float(reg.slope), float(reg.intercept), r2, points)


# -- file formats ------------------------------------------------------------

SCAN_COLUMNS = ("theta_rad", "probability", "shots", "counts")


def write_scan_csv(scan: FringeScan, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for k, (th, p) in enumerate(zip(scan.theta, scan.probabilities)):
            count = "" if scan.counts is None else int(scan.counts[k])
            writer.writerow([repr(float(th)), repr(float(p)), int(scan.shots), count])


def read_scan_csv(path, N: int) -> FringeScan:
    theta, probs, counts, shots = [], [], [], 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SCAN_COLUMNS:
            raise DomainError(f"unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            theta.append(float(row["theta_rad"]))
            probs.append(float(row["probability"]))
            shots = int(row["shots"])
            counts.append(None if row["counts"] == "" else int(row["counts"]))
    has_counts = all(c is not None for c in counts) and shots > 0
    return FringeScan(N, np.array(theta), np.array(probs), shots, np.array(counts) if has_counts else None)


def write_json(obj, path) -> None:
    payload = obj.to_dict() if hasattr(obj, "to_dict") else obj
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
