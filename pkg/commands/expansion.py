import logging
from typing import Tuple

from asymptotics import expansion_ensemble, hore_average, wre_average
from file_utils import render_json
from schemas.config import HORE_MODES, TASKS, RunConfig
from utils.command_helpers import (
    add_command, add_model_options, add_sampling_options, add_twist_options, load_automorphism, load_observable,
    load_surface,
)

log = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "expansion", parents,
                         "ergodic integrals in the stable direction against their predicted leading terms")
    add_model_options(parser)
    add_twist_options(parser)
    add_sampling_options(parser)
    parser.add_argument("--task", choices=TASKS['expansion'], help="compare, wre or hore (default compare)")
    parser.add_argument("--T", help="comma-separated integration times")
    parser.add_argument("--N", type=float, help="upper time for the double-log average")
    parser.add_argument("--mode", choices=HORE_MODES, help="hore from measured orbits or a synthetic walk")
    parser.add_argument("--observable", help="observable file (default: unit bump at index 0)")


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    o, name = load_surface(config)
    a = load_automorphism(config, o)
    g = load_observable(config, o)
    log.info("expansion %s on %s, lambda %.6g", config.task, name, a.lam)
    if config.task == 'compare':
        result = expansion_ensemble(o, a, g, config.T, config.samples, config.seed, workers=config.workers)
        return render_json(result.model_dump(), manifest_name), 0
    if config.task == 'wre':
        reports = [wre_average(o, a, g, T, config.samples, config.seed, workers=config.workers).model_dump()
                   for T in config.T]
        return render_json({"reports": reports}, manifest_name), 0
    report = hore_average(o, a, g, config.N, config.seed, n_starts=config.samples, mode=config.mode,
                          workers=config.workers)
    return render_json(report.model_dump(), manifest_name), 0
