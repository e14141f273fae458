import logging
from typing import Tuple

import numpy as np

from cover_flow import PointBatch, ergodic_integral_batch, first_return, flow_batch, return_statistics, uniform_points
from file_utils import render_csv, render_json
from schemas.config import FLOW_DIRECTIONS, TASKS, RunConfig
from utils.command_helpers import (
    add_command, add_model_options, add_sampling_options, add_twist_options, load_automorphism, load_direction,
    load_observable, load_surface,
)
from utils.parallel import map_chunks
from utils.rng import chunk_rng

log = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "flow", parents, "straight-line flow on the cover")
    add_model_options(parser)
    add_twist_options(parser)
    add_sampling_options(parser)
    parser.add_argument("--task", choices=TASKS['flow'], help="orbit endpoints, ergodic integrals or first return")
    parser.add_argument("--direction", choices=FLOW_DIRECTIONS, help="flow direction (default stable)")
    parser.add_argument("--t", type=float, help="flow time for the orbit task (default 100)")
    parser.add_argument("--T", help="comma-separated integration times")
    parser.add_argument("--K", type=int, help="induced-map iterates for the return task")
    parser.add_argument("--observable", help="observable file (default: unit bump at index 0)")


def _orbit_chunk(seed: int, chunk: int, size: int, o, direction, t: float):
    starts = uniform_points(o, chunk_rng(seed, chunk), size)
    end, _, singular = flow_batch(o, starts, direction, t)
    return end, singular


def _integral_chunk(seed: int, chunk: int, size: int, o, g, direction, T_list):
    starts = uniform_points(o, chunk_rng(seed, chunk), size)
    return [ergodic_integral_batch(o, g, starts, direction, T) for T in T_list]


def _orbit(config: RunConfig, o, direction, manifest_name: str) -> str:
    parts = map_chunks(_orbit_chunk, config.samples, config.seed, config.workers, o, direction, config.t)
    end = PointBatch(*(np.concatenate([p[0][field] for p in parts]) for field in range(4)))
    singular = np.concatenate([p[1] for p in parts])
    if singular.any():
        log.warning("%d of %d orbits hit a singularity and are left out", int(singular.sum()), len(singular))
    header = ["sample", "t", "square", "u", "v"] + [f"index_{i}" for i in range(o.d)]
    rows = ([i, config.t, int(end.square[i]), float(end.u[i]), float(end.v[i]), *(int(c) for c in end.index[i])]
            for i in np.nonzero(~singular)[0])
    return render_csv(header, rows, manifest_name)


def _integrals(config: RunConfig, o, direction, manifest_name: str) -> str:
    g = load_observable(config, o)
    parts = map_chunks(_integral_chunk, config.samples, config.seed, config.workers, o, g, direction, config.T)
    rows = []
    for col, T in enumerate(config.T):
        values = np.concatenate([p[col][0] for p in parts])
        singular = np.concatenate([p[col][1] for p in parts])
        rows.extend([i, T, float(values[i])] for i in np.nonzero(~singular)[0])
    return render_csv(["sample", "T", "value"], rows, manifest_name)


def _first_return(config: RunConfig, o, direction, manifest_name: str) -> str:
    iet = first_return(o, 0, direction)
    law = return_statistics(iet, config.K, config.samples, chunk_rng(config.seed, 0))
    payload = {
        "iet": iet.model_dump(),
        "images_tile": iet.images_tile(),
        "mean_label": iet.mean_label().tolist(),
        "statistics": {
            "K": law["K"],
            "zero_fraction": law["zero_fraction"],
            "law": [{"value": list(k), "frequency": f} for k, f in sorted(law["law"].items())],
        },
    }
    return render_json(payload, manifest_name)


TASK_RUNNERS = {'orbit': _orbit, 'integral': _integrals, 'return': _first_return}


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    o, name = load_surface(config)
    a = load_automorphism(config, o) if config.needs_automorphism else None
    direction = load_direction(config, a)
    log.info("flow %s on %s in direction (%.6g, %.6g)", config.task, name, direction.dx, direction.dy)
    return TASK_RUNNERS[config.task](config, o, direction, manifest_name), 0
