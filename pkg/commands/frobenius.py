import logging
from typing import Tuple

from file_utils import render_csv
from renorm import FrobeniusCocycle, sample_sums
from schemas.config import RunConfig
from utils.command_helpers import (
    add_command, add_model_options, add_sampling_options, add_twist_options, load_automorphism, load_surface,
)

log = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "frobenius", parents,
                         "Frobenius sums F_K over uniform starts, one row per sample")
    add_model_options(parser)
    add_twist_options(parser)
    add_sampling_options(parser)
    parser.add_argument("--K", type=int, help="number of automorphism iterates (default 100)")


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    o, name = load_surface(config)
    a = load_automorphism(config, o)
    fk = sample_sums(FrobeniusCocycle(a), config.K, config.samples, config.seed, config.workers)
    log.info("frobenius sums on %s: %d samples, K=%d", name, config.samples, config.K)
    header = ["sample", "K"] + [f"FK_{i}" for i in range(o.d)]
    rows = ([i, config.K, *(int(c) for c in fk[i])] for i in range(fk.shape[0]))
    return render_csv(header, rows, manifest_name), 0
