"""Predicted leading-order asymptotics of ergodic integrals and their measured counterparts.

Normalizations used throughout:
  * integrals of observables are taken against Lebesgue measure normalized so
    one copy of the base surface has mass 1 (total_integral / n_squares);
  * the depth paired with time T is K = log_star(T, lambda);
  * the return sequence is a(T) = 2^(-d/2) * (int G) * T * phi_K(0), where
    phi_K is the leading lattice density of F_K.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from cocycle_stats import gaussian_lattice_density, green_kubo, sigma_root
from cover_flow import CoverPoint, PointBatch, ergodic_integral, ergodic_integral_batch, uniform_points
from errors import DomainError, NotHyperbolic, Singular
from gauss_integrals import Cov2
from observables import Observable
from renorm import AffineAuto, FrobeniusCocycle, frobenius_series, frobenius_sums, sample_sums
from schemas.reports import ExpansionReport, ExpansionRun, ExpansionSummary, HoreReport, WREReport
from surface import Origami
from utils.parallel import map_chunks
from utils.rng import chunk_rng

log = logging.getLogger(__name__)

MAX_START_ROUNDS = 50
BOOTSTRAP_ROUNDS = 200
HORE_GRID_BASE = 3.0
MIN_HORE_N = 1000
ORBIT_CHUNK = 16
LOG_STAR_SLACK = 1e-9


def log_star(T: float, lam: float) -> int:
    if T < 1:
        raise DomainError(f"log_star needs T >= 1, got {T}")
    if not 0 < abs(lam) < 1:
        raise DomainError(f"log_star needs 0 < |lambda| < 1, got {lam}")
    # exact powers of lambda map to their own exponent despite rounding
    return max(0, math.ceil(-math.log(T) / math.log(abs(lam)) - LOG_STAR_SLACK))


def leading_term_1d(G_integral: float, sigma: float, xi_K: float, T: float, K: int) -> float:
    if K < 1:
        raise DomainError("The leading term needs K >= 1")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    return (G_integral / (sigma * math.sqrt(2 * math.pi)) * math.exp(-xi_K ** 2 / (2 * sigma ** 2 * K))
            * T / math.sqrt(K))


def leading_term_2d(G_integral: float, cov: Cov2, xi_K: Sequence[int], T: float, K: int) -> np.ndarray:
    """(int G / det Sigma) exp(-|Sigma^-1 xi|^2 / 2K) (T / sqrt K) A (1, 1)^T"""
    if K < 1:
        raise DomainError("The leading term needs K >= 1")
    a, _, _ = cov.diagonalize()
    scalar = G_integral / cov.det * math.exp(-cov.exponent(xi_K) / (2 * K)) * T / math.sqrt(K)
    return scalar * (a @ np.ones(2))


def _sigma_matrix(sigma2, a: Optional[AffineAuto] = None, seed: int = 0, workers: int = 1) -> np.ndarray:
    """Sigma from a given covariance, or from a Green-Kubo estimate when none is given"""
    if sigma2 is None:
        sigma2 = green_kubo(FrobeniusCocycle(a), seed=seed, workers=workers).sigma2
    return sigma_root(np.atleast_2d(np.asarray(sigma2, dtype=np.float64)))


def _require_hyperbolic(a: AffineAuto) -> None:
    if not a.is_hyperbolic:
        raise NotHyperbolic(f"automorphism with trace {a.trace} is not hyperbolic")


def predicted_integral(G_integral: float, sigma: np.ndarray, xi_K: Sequence[int], T: float, K: int) -> float:
    """Scalar leading term: int G * T * (lattice density of F_K at xi_K); equals leading_term_1d for d = 1"""
    if G_integral == 0:
        return 0.0
    if sigma.shape[0] == 1:
        return leading_term_1d(G_integral, float(sigma[0, 0]), float(xi_K[0]), T, K)
    return G_integral * T * float(gaussian_lattice_density(np.asarray([xi_K]), sigma, K)[0])


def compare_expansion(o: Origami, a: AffineAuto, G: Observable, x: CoverPoint, T_list: Sequence[float],
                      seed: int = 0, sigma2=None) -> List[ExpansionReport]:
    """Measured ergodic integral in the stable direction against the predicted leading term, per T.

    `seed` is recorded for reproducibility only: everything here is deterministic in x.
    """
    _require_hyperbolic(a)
    if any(x.index):
        raise DomainError("Start points must lie in the fundamental domain (index 0)")
    sigma = _sigma_matrix(sigma2, a, seed)
    g_int = G.total_integral / o.n_squares
    reports = []
    for T in T_list:
        K = max(1, log_star(T, a.lam))
        measured = ergodic_integral(o, G, x, a.stable_dir, T)
        xi = list(frobenius_sums(a, x, K).FK)
        predicted = predicted_integral(g_int, sigma, xi, T, K)
        reports.append(ExpansionReport(T=T, K=K, xi_K=xi, measured=measured, predicted=predicted,
                                       ratio=measured / predicted if predicted else None,
                                       G_integral=g_int, sigma_or_Sigma=sigma.tolist(), residual_band=1.0 / K))
    return reports


def _regular_starts(o: Origami, a: AffineAuto, G: Observable, T_max: float, K_max: int, n: int, rng):
    """n uniform index-0 starts whose orbits avoid singularities for the flow and for K_max iterates"""
    kept = []
    for _ in range(MAX_START_ROUNDS):
        need = n - sum(k.size for k in kept)
        if need <= 0:
            break
        cand = uniform_points(o, rng, need)
        _, bad_flow = ergodic_integral_batch(o, G, cand, a.stable_dir, T_max)
        _, _, bad_auto = frobenius_series(a, cand, K_max)
        good = np.nonzero(~bad_flow & ~bad_auto)[0]
        if len(good) < need:
            log.warning("resampling %d singular start points", need - len(good))
        kept.append(cand.take(good))
    else:
        raise Singular("could not draw enough regular start points")
    square = np.concatenate([k.square for k in kept])
    return PointBatch(square, np.concatenate([k.u for k in kept]), np.concatenate([k.v for k in kept]),
                      np.concatenate([k.index for k in kept]))


def _orbit_chunk(seed: int, chunk: int, size: int, o: Origami, a: AffineAuto, G: Observable,
                 T_list: Tuple[float, ...], K_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Ergodic integrals per T, shape (size, len(T_list)), and F_1..F_K_max, shape (size, K_max, d)"""
    starts = _regular_starts(o, a, G, max(T_list), K_max, size, chunk_rng(seed, chunk))
    measured = np.column_stack([ergodic_integral_batch(o, G, starts, a.stable_dir, T)[0] for T in T_list])
    series, _, _ = frobenius_series(a, starts, K_max)
    return measured, np.cumsum(series, axis=1)


def orbit_ensemble(o: Origami, a: AffineAuto, G: Observable, T_list: Sequence[float], K_max: int, n_starts: int,
                   seed: int, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded regular starts in chunks of ORBIT_CHUNK; the same for any worker count"""
    parts = map_chunks(_orbit_chunk, n_starts, seed, workers, o, a, G, tuple(float(T) for T in T_list), K_max,
                       chunk_size=ORBIT_CHUNK)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def aligned_times(lam: float, ks: Sequence[int]) -> List[float]:
    """T = |lambda|^-K, where log_star(T) is exactly K"""
    return [abs(lam) ** -int(k) for k in ks]


def expansion_ensemble(o: Origami, a: AffineAuto, G: Observable, T_list: Sequence[float], n_starts: int,
                       seed: int, sigma2=None, workers: int = 1) -> ExpansionRun:
    """compare_expansion over n_starts seeded uniform starts, with the median |ratio - 1| per T"""
    _require_hyperbolic(a)
    sigma = _sigma_matrix(sigma2, a, seed, workers)
    g_int = G.total_integral / o.n_squares
    ks = [max(1, log_star(T, a.lam)) for T in T_list]
    measured, partial = orbit_ensemble(o, a, G, T_list, max(ks), n_starts, seed, workers)

    reports, medians = [], {}
    for col, (T, K) in enumerate(zip(T_list, ks)):
        errs = []
        for i in range(n_starts):
            xi = [int(c) for c in partial[i, K - 1]]
            predicted = predicted_integral(g_int, sigma, xi, T, K)
            value = float(measured[i, col])
            ratio = value / predicted if predicted else None
            if ratio is not None:
                errs.append(abs(ratio - 1.0))
            reports.append(ExpansionReport(T=T, K=K, xi_K=xi, measured=value, predicted=predicted,
                                           ratio=ratio, G_integral=g_int, sigma_or_Sigma=sigma.tolist(),
                                           residual_band=1.0 / K))
        medians[repr(float(T))] = float(np.median(errs)) if errs else None
        log.info("T=%g K=%d: median |ratio - 1| = %s", T, K, medians[repr(float(T))])
    summary = ExpansionSummary(median_abs_ratio_err_by_T=medians, sigma_used=sigma.tolist(), lambda_=a.lam)
    return ExpansionRun(reports=reports, summary=summary)


def return_sequence(G_integral: float, sigma: np.ndarray, T: float, K: int) -> float:
    """a(T) = 2^(-d/2) * int G * T * phi_K(0)"""
    d = sigma.shape[0]
    return 2 ** (-d / 2) * predicted_integral(G_integral, sigma, [0] * d, T, K)


def wre_average(o: Origami, a: AffineAuto, G: Observable, T: float, n_samples: int, seed: int,
                sigma2=None, workers: int = 1) -> WREReport:
    """Ensemble mean of ergodic integrals from index-0 starts against the return sequence a(T)"""
    _require_hyperbolic(a)
    sigma = _sigma_matrix(sigma2, a, seed, workers)
    g_int = G.total_integral / o.n_squares
    K = max(1, log_star(T, a.lam))
    if G.is_zero:
        return WREReport(lhs=0.0, rhs=0.0, ratio=None, K=K, n_samples=n_samples)
    measured, _ = orbit_ensemble(o, a, G, [T], 1, n_samples, seed, workers)
    lhs = math.fsum(measured[:, 0]) / n_samples
    rhs = return_sequence(g_int, sigma, T, K)
    return WREReport(lhs=lhs, rhs=rhs, ratio=lhs / rhs if rhs else None, K=K, n_samples=n_samples)


def wre_proxy(a: AffineAuto, K: int, n_samples: int, seed: int, sigma2, workers: int = 1) -> float:
    """Mean of exp(-|Sigma^-1 F_K|^2 / 2K); tends to 2^(-d/2)"""
    sigma = _sigma_matrix(sigma2, a, seed, workers)
    fk = sample_sums(FrobeniusCocycle(a), K, n_samples, seed, workers).astype(np.float64)
    z = np.linalg.solve(sigma, fk.T).T
    return math.fsum(np.exp(-np.sum(z * z, axis=1) / (2 * K))) / n_samples


def hore_grid(N: float) -> List[float]:
    grid, T = [], HORE_GRID_BASE
    while T <= N:
        grid.append(T)
        T *= 2
    return grid


def _double_log_average(grid: Sequence[float], values: np.ndarray, N: float) -> np.ndarray:
    """(1 / log log N) int_3^N values(T) / (T log T) dT, trapezoidal in log T; values has T on its last axis"""
    logs = np.log(np.asarray(grid))
    integrand = values / logs
    return trapezoid(integrand, logs, axis=-1) / math.log(math.log(N))


def _bootstrap(per_start: np.ndarray, rng) -> tuple:
    if len(per_start) < 2:
        return None, None
    picks = rng.integers(0, len(per_start), size=(BOOTSTRAP_ROUNDS, len(per_start)))
    means = per_start[picks].mean(axis=1)
    return float(np.quantile(means, 0.025)), float(np.quantile(means, 0.975))


def hore_average(o: Origami, a: AffineAuto, G: Observable, N: float, seed: int, sigma2=None,
                 n_starts: int = 16, mode: str = 'measured', workers: int = 1) -> HoreReport:
    """Double-logarithmic average of A_T / a(T) over the geometric grid T_k = 3 * 2^k <= N.

    In synthetic mode A_T / a(T) is replaced by 2^(d/2) exp(-|S_K|^2 / 2K) for a
    standardized Gaussian walk S, which needs no orbit simulation.
    """
    _require_hyperbolic(a)
    if N < MIN_HORE_N:
        raise DomainError(f"hore_average needs N >= {MIN_HORE_N}")
    grid = hore_grid(N)
    sigma = _sigma_matrix(sigma2, a, seed, workers)
    d = sigma.shape[0]
    ks = [max(1, log_star(T, a.lam)) for T in grid]
    rng = chunk_rng(seed, 0)
    if mode == 'synthetic':
        walks = np.cumsum(rng.standard_normal((n_starts, max(ks), d)), axis=1)
        sk = walks[:, np.asarray(ks) - 1]
        values = 2 ** (d / 2) * np.exp(-np.sum(sk * sk, axis=-1) / (2 * np.asarray(ks)))
    elif mode == 'measured':
        g_int = G.total_integral / o.n_squares
        if G.is_zero:
            return HoreReport(value=0.0, N=N, mode=mode, grid=grid)
        measured, _ = orbit_ensemble(o, a, G, grid, 1, n_starts, seed, workers)
        values = measured / np.array([return_sequence(g_int, sigma, T, K) for T, K in zip(grid, ks)])
    else:
        raise DomainError(f"Unknown hore mode {mode!r}")
    per_start = _double_log_average(grid, values, N)
    low, high = _bootstrap(per_start, chunk_rng(seed, 1))
    value = float(per_start.mean())
    log.info("higher-order average %.4f (%s, N=%g)", value, mode, N)
    return HoreReport(value=value, ci_low=low, ci_high=high, N=N, mode=mode, grid=grid)
