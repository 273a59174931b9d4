"""Wigner functions on phase-space grids via displaced parity.

W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) Pi], normalized so that the
integral over the plane is 1.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dynamics import DensityMatrix
from .errors import DomainError, TruncationWarning
from .fock import StateVector, TruncationPolicy, displacement_block

CHUNK = 256
IMAG_TOL = 1e-10

# Standard plot ranges for phase-space panels, keyed by the largest N they cover.
_PANEL_RANGES = ((6, -3.0, 2.9), (9, -3.6, 3.5), (12, -3.9, 3.8))


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    points_per_axis: int = 101

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise DomainError("grid maxima must exceed minima")
        if self.points_per_axis < 2:
            raise DomainError("points_per_axis must be >= 2")

    @property
    def re_axis(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.points_per_axis)

    @property
    def im_axis(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.points_per_axis)

    @property
    def cell_area(self) -> float:
        n = self.points_per_axis - 1
        return (self.re_max - self.re_min) / n * (self.im_max - self.im_min) / n

    @property
    def max_radius(self) -> float:
        return math.hypot(max(abs(self.re_min), abs(self.re_max)), max(abs(self.im_min), abs(self.im_max)))

    @classmethod
    def centered(cls, radius: float, points_per_axis: int = 101) -> "GridSpec":
        return cls(-radius, radius, -radius, radius, points_per_axis)


def default_grid_spec(N: int, points_per_axis: int = 101) -> GridSpec:
    """Square grid with the same range as the published panel for this N."""
    if N < 1:
        raise DomainError("N must be >= 1")
    for n_top, lo, hi in _PANEL_RANGES:
        if N <= n_top:
            return GridSpec(lo, hi, lo, hi, points_per_axis)
    r = math.sqrt(N) + 3
    return GridSpec.centered(r, points_per_axis)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    values: np.ndarray  # shape (len(im_axis), len(re_axis)), row-major in im
    spec: GridSpec
    metadata: dict

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.spec.cell_area)


def _support(state) -> int:
    return state.dim


def required_dim(state, radius: float) -> int:
    return TruncationPolicy(N_max=_support(state) - 1, alpha_max=radius).dim


def _as_parts(state):
    if isinstance(state, DensityMatrix):
        return None, state.entries
    if isinstance(state, StateVector):
        return state.amps, None
    raise DomainError(f"unsupported state type {type(state).__name__}")


def _wigner_batch(state, alphas: np.ndarray, dim: int) -> np.ndarray:
    psi, rho = _as_parts(state)
    parity = (-1.0) ** np.arange(dim)
    out = np.empty(alphas.shape[0])
    for start in range(0, alphas.shape[0], CHUNK):
        stop = start + CHUNK
        cols = displacement_block(-alphas[start:stop], dim, state.dim)  # (b, dim, d)
        if psi is not None:
            v = cols @ psi
            out[start:stop] = (2 / np.pi) * (np.abs(v) ** 2 @ parity)
        else:
            diag = np.einsum("bkm,mn,bkn->bk", cols, rho, cols.conj())
            val = diag @ parity
            if np.max(np.abs(val.imag)) > IMAG_TOL:
                raise DomainError("Wigner value has a non-negligible imaginary part; state not Hermitian")
            out[start:stop] = (2 / np.pi) * val.real
    return out


def wigner_value(state, alpha: complex, dim: int | None = None) -> float:
    """W at one phase-space point for a StateVector or DensityMatrix."""
    needed = required_dim(state, abs(alpha))
    dim = dim or needed
    if dim < state.dim:
        raise DomainError(f"dim={dim} smaller than the state's dimension {state.dim}")
    if dim < needed:
        warnings.warn(f"dim={dim} below the {needed} needed at |alpha|={abs(alpha):.3g}", TruncationWarning, stacklevel=2)
    return float(_wigner_batch(state, np.array([alpha], dtype=complex), dim)[0])


def wigner_grid(state, spec: GridSpec, dim: int | None = None, descriptor: str | None = None) -> WignerGrid:
    """Evaluate W on ``spec``; the metadata records the grid, truncation and integral."""
    needed = required_dim(state, spec.max_radius)
    dim = dim or needed
    if dim < state.dim:
        raise DomainError(f"dim={dim} smaller than the state's dimension {state.dim}")
    re, im = spec.re_axis, spec.im_axis
    points = (re[None, :] + 1j * im[:, None]).reshape(-1)
    values = _wigner_batch(state, points, dim).reshape(im.size, re.size)
    meta = {
        "spec": asdict(spec),
        "dim": int(dim),
        "state": descriptor or f"{type(state).__name__}(dim={state.dim})",
        "truncation_warning": bool(dim < needed),
        "required_dim": int(needed),
        "integral": float(values.sum() * spec.cell_area),
    }
    if dim < needed:
        meta["warning"] = f"grid radius {spec.max_radius:.3f} needs dim >= {needed}"
    return WignerGrid(values, spec, meta)


def write_wigner_csv(grid: WignerGrid, path) -> None:
    re, im = grid.spec.re_axis, grid.spec.im_axis
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("re_alpha", "im_alpha", "w_value"))
        for i, y in enumerate(im):
            for j, x in enumerate(re):
                writer.writerow((repr(float(x)), repr(float(y)), repr(float(grid.values[i, j]))))


def write_wigner_metadata(grid: WignerGrid, path) -> None:
    Path(path).write_text(json.dumps(grid.metadata, indent=2, sort_keys=True) + "\n")
