import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from fockmetro import (
    DomainError,
    PrecisionPoint,
    UndefinedPrecisionError,
    annihilation_op,
    binary_precision,
    db_enhancement,
    fisher_full,
    hl,
    make_coherent,
    make_fock,
    make_mvs,
    number_op,
    qcrb,
    snl,
)


def test_qcrb_examples():
    assert qcrb(make_mvs(12, 14), number_op(14)) == pytest.approx(1 / 12, abs=1e-15)
    with pytest.raises(UndefinedPrecisionError):
        qcrb(make_fock(3, 5), number_op(5))
    alpha = 1.7
    assert qcrb(make_coherent(alpha, 60), number_op(60)) == pytest.approx(1 / (2 * alpha), rel=1e-10)


@given(st.integers(1, 40))
def test_qcrb_is_heisenberg(N):
    assert qcrb(make_mvs(N, N + 1), number_op(N + 1)) * N == pytest.approx(1, abs=1e-12)


def test_limits():
    assert hl(12) == pytest.approx(1 / 12)
    assert snl(12) == pytest.approx(1 / math.sqrt(12))
    assert 20 * math.log10(snl(12) / hl(12)) == pytest.approx(10.79, abs=5e-3)
    assert snl(1) == hl(1) == 1
    assert snl(4) / hl(4) == pytest.approx(2)
    with pytest.raises(DomainError):
        snl(0)


def test_db_enhancement():
    assert db_enhancement(0.3, 0.3) == 0
    assert db_enhancement(hl(12), snl(12)) == pytest.approx(10 * math.log10(12), abs=1e-12)
    # 9.1 dB achieved and a 1.7 dB gap add up to the 10.8 dB between SNL and HL
    achieved = snl(12) / 10 ** (9.1 / 20)
    assert db_enhancement(hl(12), achieved) == pytest.approx(1.7, abs=0.01)
    with pytest.raises(DomainError):
        db_enhancement(0, 1)


@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_db_antisymmetric(x, y):
    assert db_enhancement(x, y) == pytest.approx(-db_enhancement(y, x), abs=1e-9)


def test_binary_precision_examples():
    assert binary_precision(0.5, 6.0) == pytest.approx(1 / 12)
    assert binary_precision(0.5, 0.5) == pytest.approx(1.0)
    N, theta = 12, math.pi / 24
    P = (1 + math.cos(N * theta)) / 2
    dP = -N / 2 * math.sin(N * theta)
    assert binary_precision(P, dP) == pytest.approx(1 / 12, abs=1e-12)
    for bad in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)]:
        with pytest.raises(UndefinedPrecisionError):
            binary_precision(*bad)


@given(st.floats(0.01, 0.99), st.floats(0.01, 10))
def test_fisher_two_outcomes_reduces_to_binary(P, slope):
    assert fisher_full([P, 1 - P], [slope, -slope]) == pytest.approx(binary_precision(P, slope), rel=1e-12)


def test_fisher_errors():
    with pytest.raises(UndefinedPrecisionError):
        fisher_full([0.5, 0.5], [0.0, 0.0])
    with pytest.raises(DomainError):
        fisher_full([0.5, 0.4], [0.1, -0.1])


def test_fisher_skips_tiny_outcomes():
    assert fisher_full([0.5, 0.5, 1e-15], [0.5, -0.5, 1e-3]) == pytest.approx(binary_precision(0.5, 0.5))


def displacement_expm(alpha, dim):
    a = annihilation_op(dim).entries
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def test_mvs1_bound_ordering_at_alpha_zero():
    # alpha = 0: no phase information reaches the counts
    psi = make_mvs(1, 4)
    with pytest.raises(UndefinedPrecisionError):
        fisher_full([0.5, 0.5, 0, 0], [0, 0, 0, 0])
    assert qcrb(psi, number_op(4)) == pytest.approx(1.0)


def test_mvs2_beats_snl_with_displacement():
    """Brute-force grid with an expm displacement, dim 24 outcomes."""
    big, dim, N = 60, 24, 2
    psi = np.zeros(big, complex)
    psi[0] = psi[N] = 1 / math.sqrt(2)
    n = np.arange(big)
    best = np.inf
    for alpha in np.arange(0.1, 2.01, 0.05):
        D = displacement_expm(alpha, big)[:dim]
        for phi in np.linspace(0, math.pi, 97):
            rot = np.exp(-1j * phi * n) * psi
            amp, damp = D @ rot, D @ (-1j * n * rot)
            P, dP = np.abs(amp) ** 2, 2 * np.real(amp.conj() * damp)
            if abs(P.sum() - 1) > 1e-6 or not np.any(dP):
                continue
            best = min(best, fisher_full(P, dP))
    assert best < snl(2) == pytest.approx(0.70710678)
    assert best >= qcrb(make_mvs(2, 3), number_op(3)) - 1e-9


def test_precision_point_validation():
    with pytest.raises(DomainError):
        PrecisionPoint(3, 0.0)
    assert PrecisionPoint(3, 0.2).to_dict() == {"N": 3, "delta_theta": 0.2}
