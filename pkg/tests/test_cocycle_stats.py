import math

import numpy as np
import pytest

from cocycle_stats import (
    asclt_average, asclt_ensemble, gaussian_lattice_density, green_kubo, lambda_u, llt_histogram, sigma_root,
    variance_growth,
)
from errors import DegenerateSigma, DomainError
from renorm import CoboundaryCocycle, FrobeniusCocycle, identity


@pytest.fixture(scope="module")
def stair2_sigma2(stair2_hv):
    return green_kubo(FrobeniusCocycle(stair2_hv), J=20, n_samples=20_000, seed=0)


def test_identity_has_zero_variance(stair2):
    estimate = green_kubo(FrobeniusCocycle(identity(stair2)), J=5, n_samples=10_000)
    assert estimate.sigma2 == [[0.0]]


def test_green_kubo_arguments_checked(stair2_hv):
    with pytest.raises(DomainError):
        green_kubo(FrobeniusCocycle(stair2_hv), J=0)
    with pytest.raises(DomainError):
        green_kubo(FrobeniusCocycle(stair2_hv), n_samples=100)


def test_correlations_decay(stair2_sigma2):
    lags = np.asarray(stair2_sigma2.per_lag)[:, 0, 0]
    assert abs(lags[20]) < 0.05 * abs(lags[0])
    assert stair2_sigma2.sigma2[0][0] > 0
    assert len(stair2_sigma2.partial_sums) == 21


def test_windtree_covariance_is_two_by_two(windtree_hv):
    estimate = green_kubo(FrobeniusCocycle(windtree_hv), J=10, n_samples=10_000, seed=1)
    s = np.asarray(estimate.sigma2)
    assert s.shape == (2, 2)
    assert np.allclose(s, s.T)


def test_sigma_agrees_with_variance_growth(stair2_hv, stair2_sigma2):
    growth = variance_growth(FrobeniusCocycle(stair2_hv), [256, 1024], 20_000, seed=4)
    assert growth.rows[-1].ratio == pytest.approx(stair2_sigma2.sigma2[0][0], rel=0.05)


def test_frobenius_is_not_a_coboundary(stair2_hv):
    report = variance_growth(FrobeniusCocycle(stair2_hv), [16, 32, 64, 128], 3000, seed=0)
    assert report.verdict == "NOT_COBOUNDARY"
    assert report.slope > 0


def test_telescoping_cocycle_is_flagged(stair2_hv):
    report = variance_growth(CoboundaryCocycle(stair2_hv), [16, 32, 64, 128], 3000, seed=0)
    assert report.verdict == "COBOUNDARY_SUSPECTED"


def test_zero_cocycle_growth(stair2):
    report = variance_growth(FrobeniusCocycle(identity(stair2)), [4, 8], 500, seed=0)
    assert report.verdict == "COBOUNDARY_SUSPECTED"
    assert [row.variance for row in report.rows] == [0.0, 0.0]


def test_growth_needs_increasing_k(stair2_hv):
    with pytest.raises(DomainError):
        variance_growth(FrobeniusCocycle(stair2_hv), [32, 16], 100)


def test_sigma_root_rejects_degenerate():
    with pytest.raises(DegenerateSigma):
        sigma_root([[0.0]])


def test_sigma_root_squares_back():
    s2 = np.array([[2.0, 0.5], [0.5, 1.0]])
    root = sigma_root(s2)
    assert np.allclose(root @ root, s2)


def test_lattice_density_sums_to_one():
    sigma = sigma_root([[1.7]])
    M = np.arange(-200, 201)[:, None]
    assert gaussian_lattice_density(M, sigma, 30).sum() == pytest.approx(1.0, abs=1e-9)


def test_llt_needs_large_k(stair2_hv):
    with pytest.raises(DomainError):
        llt_histogram(FrobeniusCocycle(stair2_hv), 5, 100, 0, [[1.0]])


def test_llt_histogram_symmetry(stair2_hv, stair2_sigma2):
    n = 40_000
    report = llt_histogram(FrobeniusCocycle(stair2_hv), 12, n, 1, stair2_sigma2.sigma2)
    assert sum(b.frequency for b in report.bins) == pytest.approx(1.0, abs=1e-12)
    counts = report.counts
    for (m,), p in counts.items():
        q = counts.get((-m,), 0.0)
        assert abs(p - q) < 4 * math.sqrt((p + q) / n) + 1e-12


@pytest.mark.slow
def test_llt_leading_order(stair2_hv, stair2_sigma2):
    report = llt_histogram(FrobeniusCocycle(stair2_hv), 30, 10_000_000, 2, stair2_sigma2.sigma2, workers=4)
    assert report.sup_error < 0.05


def test_lambda_at_zero_is_one(stair2_hv):
    est = lambda_u(FrobeniusCocycle(stair2_hv), [0.0], 16, 100)
    assert est.magnitude == 1.0 and est.phase == 0.0


def test_lambda_domain(stair2_hv):
    with pytest.raises(DomainError):
        lambda_u(FrobeniusCocycle(stair2_hv), [0.6], 16, 100)


@pytest.mark.slow
@pytest.mark.parametrize("r", [0.02, 0.05, 0.1])
def test_lambda_curvature_matches_sigma(r, stair2_hv, stair2_sigma2):
    est = lambda_u(FrobeniusCocycle(stair2_hv), [r], 64, 400_000, seed=5, workers=4)
    assert est.curvature_sigma2 == pytest.approx(stair2_sigma2.sigma2[0][0], rel=0.05)
    assert abs(est.phase) <= 3 * est.phase_stderr


def test_asclt_is_scale_free():
    values = {sigma: asclt_average(sigma, 20_000, seed=3) for sigma in (0.5, 1.0, 2.0)}
    assert values[0.5] == values[1.0] == values[2.0]


def test_asclt_average_near_limit():
    runs = [asclt_average(1.0, 100_000, seed=s) for s in range(20)]
    assert abs(np.mean(runs) - 2 ** -0.5) < 0.15


def test_asclt_arguments_checked():
    with pytest.raises(DomainError):
        asclt_average(1.0, 100, seed=0)
    with pytest.raises(DomainError):
        asclt_average(0.0, 20_000, seed=0)
    with pytest.raises(DomainError):
        asclt_ensemble(1.0, 20_000, 1, seed=0)


def test_asclt_unbiased_at_moderate_n():
    # a 1/log N normalisation sits about 0.044 above the limit at this N
    report = asclt_ensemble(1.0, 10_000, 1000, seed=0)
    assert report.stderr < 0.02
    assert abs(report.mean - report.limit) < 4 * report.stderr


def test_asclt_ensemble_runs_are_independent_walks():
    report = asclt_ensemble(1.0, 20_000, 3, seed=7)
    runs = [asclt_average(1.0, 20_000, seed=7, run=r) for r in range(3)]
    assert report.mean == pytest.approx(np.mean(runs), rel=1e-12)
    assert len(set(runs)) == 3
    assert report.limit == 2 ** -0.5
