"""Monte Carlo statistics of Z^d-valued cocycles over an automorphism.

Every estimator takes a cocycle object (FrobeniusCocycle or
CoboundaryCocycle from renorm) and works on one seeded ensemble of uniform
orbits, so two runs with the same seed and sample count agree bit for bit.
"""
import logging
import math
from typing import Sequence

import numpy as np
from scipy import stats

from errors import DegenerateSigma, DomainError, Unstable
from renorm import sample_cocycle, sample_partial_sums, sample_sums
from schemas.reports import (
    AscltReport, CovarianceEstimate, LambdaEstimate, LLTBin, LLTReport, VarianceGrowthReport, VarianceRow,
)
from utils.rng import chunk_rng

log = logging.getLogger(__name__)

DEFAULT_LAGS = 20
MIN_GREEN_KUBO_SAMPLES = 10_000
MIN_LLT_K = 10
LLT_WINDOW = 3.0
SLOPE_T_THRESHOLD = 5.0
LAMBDA_STABILITY = 0.10
MIN_ASCLT_STEPS = 10_000
MIN_ASCLT_RUNS = 2


def _per_sample_lags(series: np.ndarray, J: int) -> np.ndarray:
    """Per-orbit lag products: out[n, j] = mean_i X_i (x) X_{i+j}, X centered over the ensemble"""
    x = series.astype(np.float64)
    x -= x.mean(axis=(0, 1))
    n, width, d = x.shape
    out = np.empty((n, J + 1, d, d))
    for j in range(J + 1):
        out[:, j] = np.einsum('nia,nib->nab', x[:, :width - j], x[:, j:]) / (width - j)
    return out


def _symmetrized(lags: np.ndarray) -> np.ndarray:
    """sigma2 partial sums C_0 + sum_{1<=j<=J'} (C_j + C_j^T) along the lag axis"""
    terms = lags.copy()
    terms[..., 1:, :, :] += np.swapaxes(lags[..., 1:, :, :], -1, -2)
    return np.cumsum(terms, axis=-3)


def green_kubo(cocycle, J: int = DEFAULT_LAGS, n_samples: int = MIN_GREEN_KUBO_SAMPLES,
               seed: int = 0, workers: int = 1) -> CovarianceEstimate:
    """Truncated Green-Kubo sum for the covariance of the cocycle"""
    if J < 1:
        raise DomainError("Green-Kubo truncation J must be at least 1")
    if n_samples < MIN_GREEN_KUBO_SAMPLES:
        raise DomainError(f"green_kubo needs at least {MIN_GREEN_KUBO_SAMPLES} samples")
    series = sample_cocycle(cocycle, 2 * J + 1, n_samples, seed, workers)
    per_sample = _per_sample_lags(series, J)
    lags = per_sample.mean(axis=0)
    partial = _symmetrized(lags)
    sample_sigma2 = _symmetrized(per_sample)[:, J]
    stderr = sample_sigma2.std(axis=0, ddof=1) / math.sqrt(n_samples)
    sigma2 = (partial[J] + partial[J].T) / 2
    log.info("green-kubo sigma2 %s (J=%d, %d samples)", sigma2.tolist(), J, n_samples)
    return CovarianceEstimate(sigma2=sigma2.tolist(), per_lag=lags.tolist(), partial_sums=partial.tolist(),
                              J=J, stderr=stderr.tolist(), n_samples=n_samples, seed=seed)


def variance_growth(cocycle, K_list: Sequence[int], n_samples: int, seed: int = 0,
                    workers: int = 1) -> VarianceGrowthReport:
    """Var(F_K) against K on a common ensemble, with a coboundary verdict.

    For d > 1 the variance is the trace of the covariance of F_K.
    """
    ks = [int(k) for k in K_list]
    if len(ks) < 2 or any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] < 1:
        raise DomainError("K_list must hold at least two strictly increasing positive values")
    partial = sample_partial_sums(cocycle, ks, n_samples, seed, workers)
    variances = []
    for col in range(len(ks)):
        fk = partial[:, col].astype(np.float64)
        variances.append(float(fk.var(axis=0, ddof=1).sum()))
    fit = stats.linregress(ks, variances)
    if fit.stderr > 0:
        t_stat = fit.slope / fit.stderr
    else:
        t_stat = math.inf if fit.slope > 0 else 0.0
    grows = variances[0] > 0 and variances[-1] / variances[0] > math.sqrt(ks[-1] / ks[0])
    verdict = 'NOT_COBOUNDARY' if t_stat > SLOPE_T_THRESHOLD and grows else 'COBOUNDARY_SUSPECTED'
    log.info("variance growth slope %.4g (t=%.3g): %s", fit.slope, t_stat, verdict)
    rows = [VarianceRow(K=k, variance=v, ratio=v / k) for k, v in zip(ks, variances)]
    return VarianceGrowthReport(rows=rows, slope=float(fit.slope), slope_stderr=float(fit.stderr),
                                t_statistic=float(t_stat) if math.isfinite(t_stat) else 1e300,
                                verdict=verdict, n_samples=n_samples, seed=seed)


def sigma_root(sigma2) -> np.ndarray:
    """Symmetric square root of a covariance matrix"""
    s2 = np.atleast_2d(np.asarray(sigma2, dtype=np.float64))
    w, vecs = np.linalg.eigh((s2 + s2.T) / 2)
    if np.any(w <= 1e-12 * max(1.0, float(np.max(np.abs(w))))):
        raise DegenerateSigma(f"covariance {s2.tolist()} is not positive definite")
    return vecs @ np.diag(np.sqrt(w)) @ vecs.T


def gaussian_lattice_density(M: np.ndarray, sigma: np.ndarray, K: int) -> np.ndarray:
    """Leading-order local limit prediction for m(F_K = M), one row of M per lattice point"""
    d = sigma.shape[0]
    z = np.linalg.solve(sigma, np.atleast_2d(M).T.astype(np.float64)).T
    norm = (2 * math.pi) ** (-d / 2) / np.linalg.det(sigma) * K ** (-d / 2)
    return norm * np.exp(-np.sum(z * z, axis=1) / (2 * K))


def llt_histogram(cocycle, K: int, n_samples: int, seed: int, sigma2, workers: int = 1) -> LLTReport:
    """Exact-integer histogram of F_K against the Gaussian lattice density"""
    if K < MIN_LLT_K:
        raise DomainError(f"llt_histogram needs K >= {MIN_LLT_K}")
    sigma = sigma_root(sigma2)
    d = sigma.shape[0]
    fk = sample_sums(cocycle, K, n_samples, seed, workers)
    values, counts = np.unique(fk, axis=0, return_counts=True)
    freq = counts / n_samples

    # lattice points with |sigma^-1 M| <= 3 sqrt(K) lie in a box of half-width 3 sqrt(K) * ||sigma||
    radius = int(math.ceil(LLT_WINDOW * math.sqrt(K) * np.linalg.norm(sigma, 2)))
    axes = [np.arange(-radius, radius + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, d)
    z = np.linalg.solve(sigma, grid.T.astype(np.float64)).T
    window = grid[np.sum(z * z, axis=1) <= LLT_WINDOW ** 2 * K]
    observed = {tuple(int(c) for c in v): f for v, f in zip(values, freq)}
    window_freq = np.array([observed.get(tuple(int(c) for c in m), 0.0) for m in window])
    window_pred = gaussian_lattice_density(window, sigma, K)
    sup_error = float(np.max(np.abs(window_freq - window_pred)) * K ** (d / 2)) if len(window) else 0.0

    preds = gaussian_lattice_density(values, sigma, K)
    bins = [LLTBin(M=[int(c) for c in v], frequency=float(f), gaussian_pred=float(p))
            for v, f, p in zip(values, freq, preds)]
    log.info("LLT at K=%d: sup error %.4f over %d lattice points", K, sup_error, len(window))
    return LLTReport(K=K, bins=bins, sup_error=sup_error, n_samples=n_samples, seed=seed)


def _root_of_mean(phases: np.ndarray, K: int):
    mean = np.mean(np.exp(1j * phases))
    return abs(mean) ** (1.0 / K), np.angle(mean) / K, mean


def lambda_u(cocycle, u: Sequence[float], K: int, n_samples: int, seed: int = 0,
             workers: int = 1) -> LambdaEstimate:
    """K-th root of the characteristic function of F_K at u (principal branch)"""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if np.linalg.norm(u) > 0.5:
        raise DomainError("lambda_u is estimated for |u| <= 0.5")
    if not np.any(u):
        return LambdaEstimate(u=u.tolist(), K=K, magnitude=1.0, phase=0.0, phase_stderr=0.0,
                              curvature_sigma2=None, n_samples=n_samples, seed=seed)
    partial = sample_partial_sums(cocycle, [K, 2 * K], n_samples, seed, workers)
    phase_k = partial[:, 0] @ u
    phase_2k = partial[:, 1] @ u
    mag_k, arg_k, mean_k = _root_of_mean(phase_k, K)
    mag_2k, _, _ = _root_of_mean(phase_2k, 2 * K)
    rate_k, rate_2k = -math.log(mag_k), -math.log(mag_2k)
    if abs(rate_k - rate_2k) > LAMBDA_STABILITY * max(abs(rate_k), abs(rate_2k)):
        raise Unstable(f"-log|lambda_u| is {rate_k:.4g} at K={K} but {rate_2k:.4g} at K={2 * K}")
    spread = np.sin(phase_k - np.angle(mean_k)).std(ddof=1)
    phase_stderr = float(spread / math.sqrt(n_samples) / abs(mean_k) / K)
    return LambdaEstimate(u=u.tolist(), K=K, magnitude=float(mag_k), phase=float(arg_k),
                          phase_stderr=phase_stderr, curvature_sigma2=2 * rate_k / float(u @ u),
                          n_samples=n_samples, seed=seed)


def _asclt_run(sigma: float, N: int, rng: np.random.Generator) -> float:
    walk = sigma * np.cumsum(rng.standard_normal(N))
    k = np.arange(1, N + 1, dtype=np.float64)
    terms = np.exp(-(walk / sigma) ** 2 / (2 * k)) / k
    return math.fsum(terms) / math.fsum(1.0 / k)


def asclt_average(sigma: float, N: int, seed: int, run: int = 0) -> float:
    """Logarithmic average (1/D_N) sum_k (1/k) exp(-S_k^2 / (2 sigma^2 k)) of a Gaussian walk.

    D_N = sum_{k <= N} 1/k = log N + O(1). Every term has mean 2^(-1/2), so the
    average is unbiased at any N; dividing by log N instead would add a
    relative bias of about 0.58 / log N.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if N < MIN_ASCLT_STEPS:
        raise DomainError(f"asclt_average needs N >= {MIN_ASCLT_STEPS}")
    return _asclt_run(sigma, N, chunk_rng(seed, run))


def asclt_ensemble(sigma: float, N: int, n_runs: int, seed: int) -> AscltReport:
    """asclt_average over n_runs independent walks, with the standard error of their mean"""
    if n_runs < MIN_ASCLT_RUNS:
        raise DomainError(f"asclt_ensemble needs at least {MIN_ASCLT_RUNS} runs")
    values = np.array([asclt_average(sigma, N, seed, run) for run in range(n_runs)])
    mean = math.fsum(values) / n_runs
    stderr = float(values.std(ddof=1)) / math.sqrt(n_runs)
    log.info("ASCLT average %.4f +- %.4f over %d runs of N=%d", mean, stderr, n_runs, N)
    return AscltReport(sigma=sigma, N=N, mean=mean, stderr=stderr, n_runs=n_runs, seed=seed, limit=2 ** -0.5)
