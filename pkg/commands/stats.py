import logging
from typing import Tuple

from cocycle_stats import (
    MIN_GREEN_KUBO_SAMPLES, asclt_ensemble, green_kubo, lambda_u, llt_histogram, variance_growth,
)
from errors import Unstable
from file_utils import render_json
from renorm import FrobeniusCocycle, average_drift
from schemas.config import TASKS, RunConfig
from schemas.reports import DriftReport
from utils.command_helpers import (
    add_command, add_model_options, add_sampling_options, add_twist_options, load_automorphism, load_surface,
)

log = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "stats", parents, "Monte Carlo statistics of the Frobenius cocycle")
    add_model_options(parser)
    add_twist_options(parser)
    add_sampling_options(parser)
    parser.add_argument("--task", choices=TASKS['stats'], help="statistic to estimate (default sigma)")
    parser.add_argument("--lags", type=int, help="Green-Kubo truncation J (default 20)")
    parser.add_argument("--K", type=int, help="iterates for llt and lambda-u (default 100)")
    parser.add_argument("--K-list", dest="K_list", help="comma-separated increasing K for growth")
    parser.add_argument("--u-grid", dest="u_grid", help="comma-separated |u| values for lambda-u")
    parser.add_argument("--sigma", type=float, help="walk scale for asclt (default 1)")
    parser.add_argument("--N", type=float, help="walk length for asclt (default 1e5)")


def _covariance(config: RunConfig, cocycle):
    return green_kubo(cocycle, J=config.lags, n_samples=max(config.samples, MIN_GREEN_KUBO_SAMPLES),
                      seed=config.seed, workers=config.workers)


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    if config.task == 'asclt':
        report = asclt_ensemble(config.sigma, int(config.N), config.samples, config.seed)
        return render_json(report.model_dump(), manifest_name), 0

    o, name = load_surface(config)
    a = load_automorphism(config, o)
    cocycle = FrobeniusCocycle(a)
    log.info("stats %s on %s with word %s", config.task, name, config.word)

    if config.task == 'sigma':
        report = _covariance(config, cocycle)
    elif config.task == 'drift':
        estimate, stderr = average_drift(a, config.samples, config.seed, config.workers)
        report = DriftReport(estimate=estimate.tolist(), stderr=stderr.tolist(),
                             n_samples=config.samples, seed=config.seed)
    elif config.task == 'growth':
        report = variance_growth(cocycle, config.K_list, config.samples, config.seed, config.workers)
    elif config.task == 'llt':
        sigma2 = _covariance(config, cocycle).sigma2
        report = llt_histogram(cocycle, config.K, config.samples, config.seed, sigma2, config.workers)
    else:
        estimates = []
        for r in config.u_grid:
            u = [r] + [0.0] * (o.d - 1)
            try:
                estimates.append(lambda_u(cocycle, u, config.K, config.samples, config.seed, config.workers))
            except Unstable as exc:
                log.warning("lambda_u at |u|=%g skipped: %s", r, exc.detail)
        return render_json({"estimates": [e.model_dump() for e in estimates]}, manifest_name), 0
    return render_json(report.model_dump(), manifest_name), 0
