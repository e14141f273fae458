import math

import numpy as np
import pytest

from errors import DomainError
from gauss_integrals import Cov2, I, absolute_moment, quad_oracle, quad_oracle_2d, vecI, vector_scale
from utils.rng import chunk_rng

ROOT_2PI = math.sqrt(2 * math.pi)


def test_closed_form_pins():
    assert I(0, 1.0, 0.0) == pytest.approx(ROOT_2PI, abs=1e-14)
    assert I(3, 1.0, 1.0) == pytest.approx(2j * ROOT_2PI * math.exp(-0.5), abs=1e-14)
    for sigma in (0.3, 1.0, 4.0):
        assert I(1, sigma, 0.0) == 0


@pytest.mark.parametrize("j, expected", [(0, ROOT_2PI), (2, ROOT_2PI), (4, 3 * ROOT_2PI)])
def test_quadrature_pins(j, expected):
    assert abs(quad_oracle(j, 1.0, 0.0) - expected) < 1e-10


@pytest.mark.parametrize("j", range(13))
def test_recursion_matches_quadrature(j):
    for sigma in (0.5, 1.0, 2.0):
        for L in (0.0, 0.3, 1.0, 2.5, -1.7):
            err = abs(I(j, sigma, L) - quad_oracle(j, sigma, L))
            assert err < 1e-8 * absolute_moment(j, sigma)


@pytest.mark.parametrize("j", range(13))
def test_parity_is_exact(j):
    for L in (0.4, 1.9, 5.0):
        assert I(j, 1.3, -L) == (-1) ** j * I(j, 1.3, L)
        value = I(j, 1.3, L)
        assert (value.imag if j % 2 == 0 else value.real) == 0


def test_large_order_stays_finite():
    value = I(20, 0.7, 6.0)
    assert math.isfinite(value.real) and value.imag == 0


def test_arguments_checked():
    with pytest.raises(DomainError):
        I(-1, 1.0, 0.0)
    with pytest.raises(DomainError):
        I(2, 0.0, 0.0)


def test_identity_covariance():
    cov = Cov2(s11=1.0, s12=0.0, s22=1.0)
    assert vecI(0, cov, [0.0, 0.0]) == pytest.approx(np.array([2 * math.pi, 2 * math.pi]))
    assert np.all(vecI(1, cov, [0.0, 0.0]) == 0)


def test_vector_integrals_match_quadrature():
    rng = chunk_rng(21, 0)
    for _ in range(6):
        m = rng.normal(size=(2, 2))
        cov = Cov2.from_matrix(m @ m.T + 0.3 * np.eye(2))
        L = rng.uniform(-2.0, 2.0, 2)
        for j in range(3):
            err = np.max(np.abs(vecI(j, cov, L) - quad_oracle_2d(j, cov, L)))
            assert err < 1e-8 * vector_scale(j, cov)


def test_cubature_sees_the_mixed_term():
    # the oracle never diagonalises Sigma, so dropping the mixed w1 w2 term shows up here
    cov = Cov2(s11=1.3, s12=0.6, s22=0.8)
    L = [0.7, -1.1]
    ref = quad_oracle_2d(2, cov, L)
    a, s1, s2 = cov.diagonalize()
    ell = a.T @ np.asarray(L)
    wrong = (a[:, 0] ** 2 * I(2, s1, ell[0]) * I(0, s2, ell[1])
             + a[:, 1] ** 2 * I(0, s1, ell[0]) * I(2, s2, ell[1]))
    assert np.max(np.abs(vecI(2, cov, L) - ref)) < 1e-8 * vector_scale(2, cov)
    assert np.max(np.abs(wrong - ref)) > 1e-6 * vector_scale(2, cov)


def test_cubature_of_identity_second_moment():
    cov = Cov2(s11=1.0, s12=0.0, s22=1.0)
    # int u1^2 exp(-|u|^2 / 2) = 2 pi, each component
    assert quad_oracle_2d(2, cov, [0.0, 0.0]) == pytest.approx(np.array([2 * math.pi] * 2), rel=1e-10)
    assert np.all(quad_oracle_2d(1, cov, [0.0, 0.0]) == 0)


def test_vector_order_capped():
    with pytest.raises(DomainError):
        vecI(3, Cov2(s11=1.0, s12=0.0, s22=1.0), [0.0, 0.0])


def test_covariance_must_be_positive_definite():
    with pytest.raises(ValueError):
        Cov2(s11=1.0, s12=2.0, s22=1.0)


def test_covariance_square_root():
    cov = Cov2.from_covariance([[4.0, 0.0], [0.0, 9.0]])
    assert (cov.s11, cov.s12, cov.s22) == pytest.approx((2.0, 0.0, 3.0))
    assert cov.exponent([2.0, 3.0]) == pytest.approx(2.0)
