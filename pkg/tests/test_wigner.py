import csv
import json
import math

import numpy as np
import pytest

from fockmetro import (
    DensityMatrix,
    DomainError,
    GridSpec,
    apply_phase,
    default_grid_spec,
    make_fock,
    make_mvs,
    wigner_grid,
    wigner_value,
)
from fockmetro.wigner import write_wigner_csv, write_wigner_metadata


def test_fock_parity_at_origin():
    assert wigner_value(make_fock(0, 1), 0) == pytest.approx(2 / math.pi, abs=1e-10)
    assert wigner_value(make_fock(1, 2), 0) == pytest.approx(-2 / math.pi, abs=1e-10)


def test_coherent_gaussian():
    # vacuum: W(alpha) = (2/pi) exp(-2|alpha|^2)
    for alpha in (0.3, 1.0 + 0.5j, -2.0j):
        assert wigner_value(make_fock(0, 1), alpha) == pytest.approx(2 / math.pi * math.exp(-2 * abs(alpha) ** 2), abs=1e-12)


def test_mvs3_rotational_symmetry():
    psi = make_mvs(3, 4)
    for phi in np.linspace(0, 2 * math.pi, 7):
        a = 1.0 * np.exp(1j * phi)
        assert wigner_value(psi, a) == pytest.approx(wigner_value(psi, a * np.exp(2j * math.pi / 3)), abs=1e-8)


def test_rotation_matches_phase_operation():
    # W of U(theta) psi is W of psi rotated by theta
    psi = make_mvs(4, 5)
    theta = 0.37
    rotated = apply_phase(psi, theta)
    for a in (0.8, 1.2 + 0.4j, -0.5j):
        assert wigner_value(rotated, a * np.exp(1j * theta)) == pytest.approx(wigner_value(psi, a), abs=1e-10)


def test_orthogonal_rotation_flips_fringes():
    N = 6
    psi = make_mvs(N, N + 1)
    flipped = apply_phase(psi, math.pi / N)
    mixture = DensityMatrix(N + 1, 0.5 * (np.diag(np.eye(N + 1)[0]) + np.diag(np.eye(N + 1)[N])))
    r = math.sqrt(N) / 2
    for phi in np.linspace(0, 2 * math.pi, 13):
        a = r * np.exp(1j * phi)
        fringe = wigner_value(psi, a) - wigner_value(mixture, a)
        fringe_rot = wigner_value(flipped, a) - wigner_value(mixture, a)
        assert fringe_rot == pytest.approx(-fringe, abs=1e-10)


def test_density_matrix_path_matches_pure():
    psi = make_mvs(5, 6)
    rho = DensityMatrix.from_state(psi)
    for a in (0.0, 0.9 - 0.3j, 2.1j):
        assert wigner_value(rho, a) == pytest.approx(wigner_value(psi, a), abs=1e-12)


def test_bound_on_pure_states():
    rng = np.random.default_rng(0)
    grid = wigner_grid(make_mvs(7, 8), GridSpec.centered(3.0, 41))
    assert np.max(np.abs(grid.values)) <= 2 / math.pi + 1e-9
    alphas = rng.normal(size=20) + 1j * rng.normal(size=20)
    assert all(abs(wigner_value(make_mvs(2, 3), a)) <= 2 / math.pi + 1e-9 for a in alphas)


@pytest.mark.parametrize("N", [1, 3, 6, 12])
def test_grid_normalization(N):
    grid = wigner_grid(make_mvs(N, N + 1), GridSpec.centered(math.sqrt(N) + 3, 101))
    assert grid.integral == pytest.approx(1.0, abs=2e-3)
    assert grid.metadata["truncation_warning"] is False


def test_grid_rotation_invariance():
    N = 4
    psi = make_mvs(N, N + 1)
    spec = GridSpec.centered(2.5, 31)
    grid = wigner_grid(psi, spec)
    pts = spec.re_axis[None, :] + 1j * spec.im_axis[:, None]
    rot = np.array([[wigner_value(psi, p * np.exp(2j * math.pi / N)) for p in row] for row in pts[::5, ::5]])
    np.testing.assert_allclose(rot, grid.values[::5, ::5], atol=1e-8)


def test_vacuum_grid_radially_symmetric():
    spec = GridSpec.centered(2.0, 41)
    grid = wigner_grid(make_fock(0, 1), spec)
    v = grid.values
    assert np.unravel_index(np.argmax(v), v.shape) == (20, 20)
    np.testing.assert_allclose(v, v.T, atol=1e-8)
    np.testing.assert_allclose(v, v[::-1, :], atol=1e-8)


def test_panel_ranges():
    assert (default_grid_spec(3).re_min, default_grid_spec(3).re_max) == (-3.0, 2.9)
    assert (default_grid_spec(6).re_min, default_grid_spec(6).re_max) == (-3.0, 2.9)
    assert (default_grid_spec(9).im_min, default_grid_spec(9).im_max) == (-3.6, 3.5)
    assert (default_grid_spec(12).re_min, default_grid_spec(12).re_max) == (-3.9, 3.8)
    with pytest.raises(DomainError):
        default_grid_spec(0)


def test_truncation_warning_in_metadata():
    grid = wigner_grid(make_mvs(2, 3), GridSpec.centered(3.0, 5), dim=10)
    assert grid.metadata["truncation_warning"] is True
    assert "warning" in grid.metadata


def test_gridspec_validation():
    with pytest.raises(DomainError):
        GridSpec(1, 0, 0, 1)
    with pytest.raises(DomainError):
        GridSpec(0, 1, 0, 1, points_per_axis=1)


def test_export(tmp_path):
    grid = wigner_grid(make_mvs(3, 4), default_grid_spec(3, 11), descriptor="mvs(N=3)")
    write_wigner_csv(grid, tmp_path / "w.csv")
    write_wigner_metadata(grid, tmp_path / "w.json")
    rows = list(csv.reader(open(tmp_path / "w.csv")))
    assert rows[0] == ["re_alpha", "im_alpha", "w_value"]
    assert len(rows) == 1 + 11 * 11
    meta = json.loads((tmp_path / "w.json").read_text())
    assert meta["state"] == "mvs(N=3)" and meta["spec"]["re_min"] == -3.0
