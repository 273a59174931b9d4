import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockmetro import (
    DomainError,
    FringeFit,
    FringeScan,
    PrecisionPoint,
    ScalingFit,
    UndefinedPrecisionError,
    fit_fringe,
    hl,
    optimal_scan,
    precision_from_fit,
    sample_shots,
    scaling_fit,
    snl,
)
from fockmetro.analysis import read_scan_csv, write_json, write_scan_csv

GRID = np.linspace(0, 2 * math.pi, 241)


def test_sample_degenerate_probabilities():
    scan = FringeScan(1, [0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
    out = sample_shots(scan, 1000, seed=3)
    assert out.counts[0] == 0 and out.counts[1] == 1000
    assert out.shots == 1000


def test_sample_binomial_error():
    scan = FringeScan(1, [0.0], [0.5])
    out = sample_shots(scan, 10**6, seed=2024)
    assert abs(out.empirical[0] - 0.5) < 4 * math.sqrt(0.25 / 10**6)


def test_sample_reproducible():
    scan = optimal_scan(4, GRID)
    a = sample_shots(scan, 500, seed=11)
    b = sample_shots(scan, 500, seed=11)
    c = sample_shots(scan, 500, seed=12)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_sample_counts_depend_only_on_point_index():
    scan = optimal_scan(3, GRID)
    full = sample_shots(scan, 1000, seed=5)
    head = sample_shots(FringeScan(3, scan.theta[:10], scan.probabilities[:10]), 1000, seed=5)
    np.testing.assert_array_equal(full.counts[:10], head.counts)


@pytest.mark.parametrize("N", [1, 3, 7, 12])
def test_fit_ideal_scan(N):
    fit = fit_fringe(optimal_scan(N, GRID), N)
    assert fit.A == pytest.approx(0.5, abs=1e-9)
    assert fit.B == pytest.approx(0.5, abs=1e-9)
    assert fit.phi0 == pytest.approx(0.0, abs=1e-9)
    assert fit.residual_rms < 1e-12


def test_fit_scaled_scan():
    fit = fit_fringe(optimal_scan(5, GRID, readout=(0.5, 0.4)), 5)
    assert (fit.A, fit.B) == (pytest.approx(0.5, abs=1e-9), pytest.approx(0.4, abs=1e-9))


def test_fit_recovers_phase_offset():
    theta = np.linspace(0, 2 * math.pi / 3, 40)
    scan = FringeScan(3, theta, 0.5 + 0.3 * np.cos(3 * theta - 0.6))
    fit = fit_fringe(scan, 3)
    assert fit.phi0 == pytest.approx(-0.6, abs=1e-9)
    assert fit.B == pytest.approx(0.3, abs=1e-9)


def test_fit_sampled_within_standard_errors():
    N, M = 6, 10**6
    fit = fit_fringe(sample_shots(optimal_scan(N, GRID), M, seed=7), N)
    sA, sB, _ = fit.stderr
    # linearized oracle: with binomial weights, var(A) ~ 1 / sum w_k
    p = optimal_scan(N, GRID).probabilities
    w = 1 / np.maximum(p * (1 - p) / M, 1 / (4 * M**2))
    assert sA == pytest.approx(1 / math.sqrt(w.sum()), rel=0.5)
    assert abs(fit.A - 0.5) < 4 * sA
    assert abs(fit.B - 0.5) < 4 * sB


def test_fit_preconditions():
    with pytest.raises(DomainError):
        fit_fringe(FringeScan(2, np.linspace(0, 1, 5), np.full(5, 0.5)), 2)
    with pytest.raises(DomainError):
        fit_fringe(FringeScan(2, np.linspace(0, 1, 20), np.full(20, 0.5)), 2)


def test_precision_from_fit_examples():
    assert precision_from_fit(FringeFit(0.5, 0.5, 12, 0.0, 0.0)).delta_theta == pytest.approx(1 / 12)
    assert precision_from_fit(FringeFit(0.5, 0.25, 1, 0.0, 0.0)).delta_theta == pytest.approx(2.0)
    assert precision_from_fit(FringeFit(0.5, 0.45, 6, 0.0, 0.0)).delta_theta == pytest.approx(0.1852, abs=5e-5)
    with pytest.raises(UndefinedPrecisionError):
        precision_from_fit(FringeFit(1.0, 0.5, 2, 0.0, 0.0))
    with pytest.raises(UndefinedPrecisionError):
        precision_from_fit(FringeFit(0.5, 0.0, 2, 0.0, 0.0))


def test_ideal_pipeline_is_heisenberg():
    for N in range(1, 13):
        point = precision_from_fit(fit_fringe(optimal_scan(N, GRID), N))
        assert point.delta_theta * N == pytest.approx(1, abs=1e-6)


def test_scaling_exact_laws():
    hl_fit = scaling_fit([PrecisionPoint(N, hl(N)) for N in range(1, 13)])
    assert hl_fit.slope == pytest.approx(-1, abs=1e-9)
    assert hl_fit.intercept == pytest.approx(0, abs=1e-9)
    assert hl_fit.r_squared == pytest.approx(1, abs=1e-9)
    assert scaling_fit([PrecisionPoint(N, snl(N)) for N in range(1, 13)]).slope == pytest.approx(-0.5, abs=1e-9)


def test_scaling_preconditions():
    with pytest.raises(DomainError):
        scaling_fit([PrecisionPoint(1, 1.0), PrecisionPoint(2, 0.5)])
    with pytest.raises(DomainError):
        scaling_fit([PrecisionPoint(1, 1.0), PrecisionPoint(1, 0.9), PrecisionPoint(2, 0.5)])


@settings(max_examples=25)
@given(st.permutations(list(range(1, 9))), st.lists(st.floats(0.01, 2.0), min_size=8, max_size=8))
def test_scaling_order_invariant(order, values):
    pts = [PrecisionPoint(N, v) for N, v in zip(range(1, 9), values)]
    a = scaling_fit(pts)
    b = scaling_fit([pts[i - 1] for i in order])
    assert a.slope == b.slope and a.intercept == b.intercept


def test_sampled_precision_converges():
    N = 6
    exact = precision_from_fit(fit_fringe(optimal_scan(N, GRID), N)).delta_theta
    errors = []
    for M in (10**3, 10**5, 10**7):
        scan = sample_shots(optimal_scan(N, GRID), M, seed=99)
        errors.append(abs(precision_from_fit(fit_fringe(scan, N)).delta_theta - exact))
    assert errors[0] > errors[1] > errors[2]


def test_weighting_insensitive_on_ideal_data():
    weighted, uniform = [], []
    for N in range(1, 13):
        scan = sample_shots(optimal_scan(N, GRID), 10**6, seed=N)
        weighted.append(precision_from_fit(fit_fringe(scan, N)))
        plain = FringeScan(N, scan.theta, scan.empirical)
        uniform.append(precision_from_fit(fit_fringe(plain, N)))
    sw, su = scaling_fit(weighted).slope, scaling_fit(uniform).slope
    assert abs(sw - su) / abs(su) < 0.01


def test_scan_csv_roundtrip(tmp_path):
    scan = sample_shots(optimal_scan(3, GRID[:20]), 100, seed=1)
    path = tmp_path / "scan.csv"
    write_scan_csv(scan, path)
    assert path.read_text().splitlines()[0] == "theta_rad,probability,shots,counts"
    back = read_scan_csv(path, 3)
    np.testing.assert_array_equal(back.theta, scan.theta)
    np.testing.assert_array_equal(back.counts, scan.counts)
    exact = optimal_scan(3, GRID[:20])
    write_scan_csv(exact, path)
    assert read_scan_csv(path, 3).counts is None


def test_fit_json_fields(tmp_path):
    fit = fit_fringe(optimal_scan(2, GRID), 2)
    write_json(fit, tmp_path / "fit.json")
    data = json.loads((tmp_path / "fit.json").read_text())
    assert set(data) == {"A", "B", "N_assumed", "phi0", "residual_rms"}
    assert FringeFit.from_dict(data) == fit

    sf = scaling_fit([PrecisionPoint(N, hl(N)) for N in (1, 2, 3)])
    write_json(sf, tmp_path / "scaling.json")
    data = json.loads((tmp_path / "scaling.json").read_text())
    assert set(data) == {"slope", "intercept", "r_squared", "points_used"}
    assert ScalingFit.from_dict(data) == sf
