"""Acceptance battery run by `zdcover verify`.

Each check is registered under one suite and returns (passed, detail). In
quick mode the Monte Carlo checks shrink their ensembles and loosen their
tolerances to match; the structural and closed-form checks are unchanged.
"""
import logging
import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from asymptotics import aligned_times, expansion_ensemble, leading_term_1d, log_star, wre_proxy
from cocycle_stats import asclt_ensemble, green_kubo, lambda_u, llt_histogram, variance_growth
from cover_flow import deck_batch, first_return, flow_batch, uniform_points
from errors import ZdcoverError
from gauss_integrals import Cov2, I, absolute_moment, quad_oracle, quad_oracle_2d, vecI, vector_scale
from observables import bump_observable
from renorm import (
    CoboundaryCocycle, FrobeniusCocycle, apply_batch, automorphism_from_word, average_drift, dehn_twist,
)
from schemas.config import RunConfig
from schemas.reports import CheckResult, SuiteReport
from surface import HORIZONTAL, VERTICAL, staircase, stratum, windtree_plus
from utils.rng import chunk_rng

log = logging.getLogger(__name__)

SUITE_ORDER = ('surface', 'flow', 'renorm', 'stats', 'gauss', 'asymptotics')
CHECKS: Dict[str, List[Tuple[str, Callable[[bool, int], Tuple[bool, str]]]]] = {s: [] for s in SUITE_ORDER}

STAIRCASE_LAMBDA = 3 - 2 * math.sqrt(2)
COORD_TOL = 1e-8


def check(suite: str, name: str):
    def register(fn):
        CHECKS[suite].append((name, fn))
        return fn
    return register


def _models():
    return [("staircase(2)", staircase(2)), ("windtree_plus", windtree_plus())]


# surface

@check('surface', 'twist matrices')
def _twist_matrices(quick: bool, workers: int):
    pins = [(staircase(s), HORIZONTAL, ((1, s), (0, 1))) for s in (2, 3, 4, 5)]
    pins += [(staircase(s), VERTICAL, ((1, 0), (2, 1))) for s in (2, 3, 4, 5)]
    pins += [(windtree_plus(), HORIZONTAL, ((1, 12), (0, 1))), (windtree_plus(), VERTICAL, ((1, 0), (6, 1)))]
    wrong = [(o.n_squares, d, dehn_twist(o, d).derivative) for o, d, m in pins if dehn_twist(o, d).derivative != m]
    return not wrong, f"{len(pins)} twists pinned" if not wrong else f"mismatches: {wrong}"


@check('surface', 'standard automorphism eigenvalue')
def _standard_lambda(quick: bool, workers: int):
    a = automorphism_from_word(staircase(2), 'hv')
    b = automorphism_from_word(windtree_plus(), 'hv')
    ok = a.trace == 6 and abs(a.lam - STAIRCASE_LAMBDA) < 1e-12 and b.trace == 74
    return ok, f"staircase trace {a.trace}, lambda {a.lam!r}; windtree trace {b.trace}"


@check('surface', 'genus and marked points')
def _genus(quick: bool, workers: int):
    genera = {s: stratum(staircase(s)).genus for s in (2, 3, 4)}
    marked = len(stratum(staircase(2)).marked_points)
    ok = genera == {2: 1, 3: 2, 4: 2} and marked == 2
    return ok, f"genera {genera}, staircase(2) marked points {marked}"


# flow

@check('flow', 'renormalization identity')
def _renormalization(quick: bool, workers: int):
    n = 100 if quick else 1000
    details, ok = [], True
    for name, o in _models():
        a = automorphism_from_word(o, 'hv')
        rng = chunk_rng(0, 0)
        starts, t = uniform_points(o, rng, n), rng.uniform(0.0, 100.0, n)
        moved, _, bad1 = flow_batch(o, starts, a.stable_dir, t)
        lhs, bad2 = apply_batch(a, moved)
        image, bad3 = apply_batch(a, starts)
        rhs, _, bad4 = flow_batch(o, image, a.stable_dir, a.lam * t)
        good = ~(bad1 | bad2 | bad3 | bad4)
        same = (lhs.square == rhs.square) & np.all(lhs.index == rhs.index, axis=1)
        dist = np.hypot(lhs.u - rhs.u, lhs.v - rhs.v)
        passed = bool(np.all(same[good]) and np.all(dist[good] < COORD_TOL))
        ok &= passed
        details.append(f"{name}: {int(good.sum())} regular pairs, max distance {float(dist[good].max()):.2e}")
    return ok, "; ".join(details)


@check('flow', 'reversibility and deck equivariance')
def _reversibility(quick: bool, workers: int):
    o = windtree_plus()
    a = automorphism_from_word(o, 'hv')
    starts = uniform_points(o, chunk_rng(1, 0), 200 if quick else 2000)
    end, _, bad = flow_batch(o, starts, a.unstable_dir, 50.0)
    back, _, bad_back = flow_batch(o, end, a.unstable_dir, -50.0)
    good = ~(bad | bad_back)
    rev = bool(np.all(back.square[good] == starts.square[good])
               and np.all(back.index[good] == starts.index[good])
               and np.all(np.abs(back.u[good] - starts.u[good]) < 1e-9))
    shift = (3, -2)
    shifted, _, bad_s = flow_batch(o, deck_batch(starts, shift), a.unstable_dir, 50.0)
    expected = deck_batch(end, shift)
    g2 = good & ~bad_s
    eq = bool(np.all(shifted.index[g2] == expected.index[g2]) and np.all(shifted.square[g2] == expected.square[g2]))
    return rev and eq, f"reversible {rev}, deck equivariant {eq} over {int(g2.sum())} orbits"


@check('flow', 'first return map')
def _first_return(quick: bool, workers: int):
    o = staircase(2)
    a = automorphism_from_word(o, 'hv')
    iet = first_return(o, 0, a.stable_dir)
    mean, err = iet.mean_label(), iet.label_stderr()
    ok = iet.images_tile() and bool(np.all(np.abs(mean) <= 3 * err + 1e-12))
    return ok, f"{len(iet.break_points)} subintervals, label mean {mean.tolist()}"


# renorm

@check('renorm', 'zero drift')
def _zero_drift(quick: bool, workers: int):
    n = 10_000 if quick else 1_000_000
    failures, count = [], 0
    models = [(f"staircase({s})", staircase(s)) for s in (2, 3, 4)] + [("windtree_plus", windtree_plus())]
    for name, o in models:
        for word in ('h', 'v', 'hv'):
            est, err = average_drift(automorphism_from_word(o, word), n, seed=0, workers=workers)
            count += 1
            if np.any(np.abs(est) > 3 * err):
                failures.append(f"{name}/{word}: {est.tolist()} +- {err.tolist()}")
    return not failures, f"{count} drifts within 3 stderr" if not failures else "; ".join(failures)


@check('renorm', 'non-coboundary')
def _non_coboundary(quick: bool, workers: int):
    ks = [2 ** p for p in range(4, 8 if quick else 11)]
    n = 2000 if quick else 10_000
    verdicts = {}
    for name, o in _models():
        a = automorphism_from_word(o, 'hv')
        verdicts[name] = variance_growth(FrobeniusCocycle(a), ks, n, seed=0, workers=workers).verdict
    a = automorphism_from_word(staircase(2), 'hv')
    verdicts['coboundary'] = variance_growth(CoboundaryCocycle(a), ks, n, seed=0, workers=workers).verdict
    ok = (verdicts['staircase(2)'] == verdicts['windtree_plus'] == 'NOT_COBOUNDARY'
          and verdicts['coboundary'] == 'COBOUNDARY_SUSPECTED')
    return ok, str(verdicts)


# stats

@check('stats', 'sigma2 concordance')
def _sigma_concordance(quick: bool, workers: int):
    a = automorphism_from_word(staircase(2), 'hv')
    cocycle = FrobeniusCocycle(a)
    n = 10_000 if quick else 100_000
    K = 2 ** 7 if quick else 2 ** 10
    gk = green_kubo(cocycle, J=20, n_samples=n, seed=0, workers=workers).sigma2[0][0]
    growth = variance_growth(cocycle, [K // 2, K], n, seed=1, workers=workers)
    var_k = growth.rows[-1].ratio
    curv = lambda_u(cocycle, [0.1], 64, n, seed=2, workers=workers).curvature_sigma2
    values = (gk, var_k, curv)
    spread = max(values) / min(values) - 1
    tol = 0.2 if quick else 0.1
    return spread < tol, f"green-kubo {gk:.4f}, Var/K {var_k:.4f}, curvature {curv:.4f}"


@check('stats', 'local limit theorem')
def _llt(quick: bool, workers: int):
    a = automorphism_from_word(staircase(2), 'hv')
    cocycle = FrobeniusCocycle(a)
    sigma2 = green_kubo(cocycle, seed=0, workers=workers).sigma2
    report = llt_histogram(cocycle, 30, 100_000 if quick else 10_000_000, 1, sigma2, workers)
    tol = 0.1 if quick else 0.05
    return report.sup_error < tol, f"sup error {report.sup_error:.4f} over the 3 sigma window"


@check('stats', 'almost sure CLT average')
def _asclt(quick: bool, workers: int):
    N, runs = (100_000, 20) if quick else (1_000_000, 100)
    report = asclt_ensemble(1.0, N, runs, seed=0)
    tol = 0.15 if quick else 0.05
    return (abs(report.mean - report.limit) < tol,
            f"average {report.mean:.4f} +- {report.stderr:.4f} over {runs} walks of N={N}")


@check('stats', 'determinism across worker counts')
def _determinism(quick: bool, workers: int):
    # commands imports verify, which imports this module
    from commands import flow, frobenius, stats
    jobs = [
        (frobenius, dict(command='frobenius', word='hv', K=30, samples=5000 if quick else 20_000)),
        (stats, dict(command='stats', word='hv', task='sigma', lags=10, samples=10_000 if quick else 50_000)),
        (flow, dict(command='flow', task='integral', model='windtree', word='hv', T=[5.0, 10.0],
                    samples=5000 if quick else 20_000)),
    ]
    counts = sorted({1, 2, max(2, workers)})
    differ = []
    for module, fields in jobs:
        outputs = {module.run(RunConfig(seed=11, workers=w, **fields), "determinism")[0] for w in counts}
        if len(outputs) != 1:
            differ.append(fields['command'])
    return not differ, f"identical output at workers {counts}" if not differ else f"outputs differ: {differ}"


# gauss

@check('gauss', 'recursion against quadrature')
def _gauss_1d(quick: bool, workers: int):
    worst = 0.0
    for j in range(13):
        for sigma in (0.5, 1.0, 2.0):
            for L in (0.0, 0.3, 1.0, 2.5, -1.7):
                err = abs(I(j, sigma, L) - quad_oracle(j, sigma, L)) / absolute_moment(j, sigma)
                worst = max(worst, err)
    return worst < 1e-8, f"worst scaled error {worst:.2e}"


@check('gauss', 'parity and closed forms')
def _gauss_pins(quick: bool, workers: int):
    parity = all(I(j, s, -L) == (-1) ** j * I(j, s, L)
                 for j in range(13) for s in (0.7, 1.3) for L in (0.4, 2.0))
    shapes = all((I(j, 1.1, 0.9).imag == 0) if j % 2 == 0 else (I(j, 1.1, 0.9).real == 0) for j in range(13))
    i4 = abs(quad_oracle(4, 1.0, 0.0).real - 3 * math.sqrt(2 * math.pi)) < 1e-10
    return parity and shapes and i4, f"parity {parity}, real/imaginary split {shapes}, I_4 pin {i4}"


@check('gauss', 'vector integrals')
def _gauss_2d(quick: bool, workers: int):
    rng = chunk_rng(7, 0)
    worst = 0.0
    for _ in range(5 if quick else 20):
        m = rng.normal(size=(2, 2))
        cov = Cov2.from_matrix(m @ m.T + 0.3 * np.eye(2))
        L = rng.uniform(-3.0, 3.0, 2) / math.sqrt(2)
        for j in range(3):
            ref = quad_oracle_2d(j, cov, L)
            got = vecI(j, cov, L)
            worst = max(worst, float(np.max(np.abs(got - ref))) / vector_scale(j, cov))
    return worst < 1e-8, f"worst scaled error {worst:.2e} against direct cubature"


# asymptotics

@check('asymptotics', 'closed-form pins')
def _asymptotic_pins(quick: bool, workers: int):
    ks = (log_star(1e3, STAIRCASE_LAMBDA), log_star(1e6, STAIRCASE_LAMBDA))
    lead = leading_term_1d(1.0, 1.0, 2.0, 100.0, 4)
    ok = ks == (4, 8) and abs(lead - 50 * math.exp(-0.5) / math.sqrt(2 * math.pi)) < 1e-12
    return ok, f"log* {ks}, leading term {lead:.4f}"


@check('asymptotics', 'weak rational ergodicity constant')
def _wre(quick: bool, workers: int):
    a = automorphism_from_word(staircase(2), 'hv')
    sigma2 = green_kubo(FrobeniusCocycle(a), seed=0, workers=workers).sigma2
    value = wre_proxy(a, 50, 10_000 if quick else 1_000_000, 1, sigma2, workers=workers)
    tol = 0.05 if quick else 0.02
    return abs(value - 2 ** -0.5) < tol, f"proxy average {value:.4f}"


@check('asymptotics', 'expansion trend')
def _expansion_trend(quick: bool, workers: int):
    o = staircase(2)
    a = automorphism_from_word(o, 'hv')
    # horizons on exact powers of 1/|lambda| so log* carries no fractional part
    T_list = aligned_times(a.lam, (4, 5) if quick else (4, 6, 8))
    run = expansion_ensemble(o, a, bump_observable(o), T_list, 20 if quick else 100, seed=0, workers=workers)
    medians = [run.summary.median_abs_ratio_err_by_T[repr(float(T))] for T in T_list]
    if any(m is None for m in medians):
        return False, f"missing medians {medians}"
    if quick:
        return all(math.isfinite(m) for m in medians), f"medians {medians}"
    ok = all(b <= a_ for a_, b in zip(medians, medians[1:])) and medians[-1] < 0.5
    return ok, f"medians {medians} at K = 4, 6, 8"


def run_suite(suite: str, quick: bool = False, workers: int = 1) -> SuiteReport:
    names = SUITE_ORDER if suite == 'all' else (suite,)
    results = []
    for name in names:
        for label, fn in CHECKS[name]:
            started = time.perf_counter()
            try:
                passed, detail = fn(quick, workers)
            except ZdcoverError as exc:
                passed, detail = False, f"{type(exc).__name__}: {exc.detail}"
            seconds = time.perf_counter() - started
            log.info("[%s] %s: %s (%.1fs)", name, label, "ok" if passed else "FAILED", seconds)
            results.append(CheckResult(name=f"{name}/{label}", passed=bool(passed), detail=detail, seconds=seconds))
    return SuiteReport(suite=suite, quick=quick, checks=results)
