import math

import numpy as np
import pytest

from asymptotics import (
    aligned_times, compare_expansion, expansion_ensemble, hore_average, hore_grid, leading_term_1d, leading_term_2d,
    log_star, wre_average, wre_proxy,
)
from cocycle_stats import green_kubo
from cover_flow import CoverPoint
from errors import DomainError, NotHyperbolic
from gauss_integrals import Cov2
from observables import bump_observable, zero_observable
from renorm import FrobeniusCocycle, dehn_twist
from surface import HORIZONTAL

LAM = 3 - 2 * math.sqrt(2)


def test_log_star_pins():
    assert log_star(1.0, LAM) == 0
    assert log_star(1e3, LAM) == 4
    assert log_star(1e6, LAM) == 8


def test_log_star_domain():
    with pytest.raises(DomainError):
        log_star(0.5, LAM)
    with pytest.raises(DomainError):
        log_star(10.0, 1.5)


def test_leading_term_1d_pins():
    sigma, K = 1.3, 9
    assert leading_term_1d(sigma * math.sqrt(2 * math.pi), sigma, 0.0, math.sqrt(K), K) == pytest.approx(1.0)
    assert leading_term_1d(0.0, 1.0, 3.0, 100.0, 4) == 0.0
    expected = 50 * math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert leading_term_1d(1.0, 1.0, 2.0, 100.0, 4) == pytest.approx(expected, rel=1e-12)


def test_leading_term_2d_identity():
    cov = Cov2(s11=1.0, s12=0.0, s22=1.0)
    assert leading_term_2d(1.0, cov, [0, 0], 2.0, 4) == pytest.approx(np.array([1.0, 1.0]))
    assert np.all(leading_term_2d(0.0, cov, [1, 2], 2.0, 4) == 0)


def test_leading_term_2d_shares_prefactor():
    cov = Cov2(s11=2.0, s12=0.4, s22=1.0)
    a, _, _ = cov.diagonalize()
    out = leading_term_2d(0.7, cov, [3, -1], 50.0, 6)
    assert out[0] / out[1] == pytest.approx((a[0, 0] + a[0, 1]) / (a[1, 0] + a[1, 1]))


def test_zero_observable_expansion(stair2, stair2_hv):
    x = CoverPoint(square=0, u=0.3141, v=0.2718, index=(0,))
    reports = compare_expansion(stair2, stair2_hv, zero_observable(1), x, [10.0, 100.0], sigma2=[[1.0]])
    assert [(r.measured, r.predicted, r.ratio) for r in reports] == [(0.0, 0.0, None)] * 2


def test_expansion_needs_hyperbolic(stair2):
    a = dehn_twist(stair2, HORIZONTAL)
    x = CoverPoint(square=0, u=0.3, v=0.2, index=(0,))
    with pytest.raises(NotHyperbolic):
        compare_expansion(stair2, a, bump_observable(stair2), x, [10.0], sigma2=[[1.0]])


def test_expansion_starts_at_index_zero(stair2, stair2_hv):
    x = CoverPoint(square=0, u=0.3, v=0.2, index=(1,))
    with pytest.raises(DomainError):
        compare_expansion(stair2, stair2_hv, bump_observable(stair2), x, [10.0], sigma2=[[1.0]])


def test_ensemble_reports(stair2, stair2_hv):
    run = expansion_ensemble(stair2, stair2_hv, bump_observable(stair2), [100.0, 1000.0], 8, seed=0,
                             sigma2=[[1.0]])
    assert len(run.reports) == 16
    assert all(r.measured >= 0 for r in run.reports)
    assert [r.K for r in run.reports[:1] + run.reports[8:9]] == [3, 4]
    assert set(run.summary.median_abs_ratio_err_by_T) == {repr(100.0), repr(1000.0)}


@pytest.mark.slow
def test_expansion_trend(stair2, stair2_hv):
    T_list = aligned_times(stair2_hv.lam, (4, 6, 8))
    run = expansion_ensemble(stair2, stair2_hv, bump_observable(stair2), T_list, 100, seed=0, workers=4)
    medians = [run.summary.median_abs_ratio_err_by_T[repr(T)] for T in T_list]
    assert all(m is not None and math.isfinite(m) for m in medians)
    assert medians[0] >= medians[1] >= medians[2]
    assert medians[-1] < 0.5


def test_aligned_times_hit_their_exponent():
    ks = list(range(1, 13))
    assert [log_star(T, LAM) for T in aligned_times(LAM, ks)] == ks
    assert aligned_times(-LAM, [2]) == aligned_times(LAM, [2])


def test_aligned_horizons_use_their_exponent(stair2, stair2_hv):
    T_list = aligned_times(stair2_hv.lam, (3, 4))
    run = expansion_ensemble(stair2, stair2_hv, bump_observable(stair2), T_list, 4, seed=0, sigma2=[[1.0]])
    assert sorted({r.K for r in run.reports}) == [3, 4]


def test_wre_of_zero_observable(stair2, stair2_hv):
    report = wre_average(stair2, stair2_hv, zero_observable(1), 100.0, 10, seed=0, sigma2=[[1.0]])
    assert (report.lhs, report.rhs) == (0.0, 0.0)


def test_wre_proxy_constant(stair2_hv):
    sigma2 = green_kubo(FrobeniusCocycle(stair2_hv), seed=0).sigma2
    assert wre_proxy(stair2_hv, 20, 20_000, 1, sigma2) == pytest.approx(2 ** -0.5, abs=0.05)


@pytest.mark.slow
def test_wre_proxy_constant_large_ensemble(stair2_hv):
    sigma2 = green_kubo(FrobeniusCocycle(stair2_hv), n_samples=100_000, seed=0).sigma2
    assert wre_proxy(stair2_hv, 50, 1_000_000, 1, sigma2, workers=4) == pytest.approx(2 ** -0.5, abs=0.02)


def test_hore_grid():
    assert hore_grid(100) == [3.0, 6.0, 12.0, 24.0, 48.0, 96.0]


def test_hore_needs_long_horizon(stair2, stair2_hv):
    with pytest.raises(DomainError):
        hore_average(stair2, stair2_hv, bump_observable(stair2), 100, seed=0, sigma2=[[1.0]])


def test_hore_of_zero_observable(stair2, stair2_hv):
    report = hore_average(stair2, stair2_hv, zero_observable(1), 1e4, seed=0, sigma2=[[1.0]])
    assert report.value == 0.0


def test_hore_synthetic_walk(stair2, stair2_hv):
    report = hore_average(stair2, stair2_hv, bump_observable(stair2), 1e5, seed=0, sigma2=[[1.0]],
                          n_starts=64, mode="synthetic")
    assert 0.5 < report.value < 1.5
    assert report.ci_low <= report.value <= report.ci_high
    assert report.mode == "synthetic"


def test_ensemble_ignores_worker_count(stair2, stair2_hv):
    args = (stair2, stair2_hv, bump_observable(stair2), [50.0, 200.0], 40)
    serial = expansion_ensemble(*args, seed=3, sigma2=[[1.0]], workers=1)
    pooled = expansion_ensemble(*args, seed=3, sigma2=[[1.0]], workers=2)
    assert serial.model_dump() == pooled.model_dump()
