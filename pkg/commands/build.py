from typing import Tuple

from file_utils import render_json
from schemas.config import RunConfig
from utils.command_helpers import add_command, add_model_options, load_surface, summarize_surface


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "build", parents, "construct a surface and report its structure")
    add_model_options(parser)


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    """Cylinders, twist data, stratum and cover weights of the chosen surface"""
    o, name = load_surface(config)
    summary = summarize_surface(o, name)
    return render_json(summary.model_dump(), manifest_name), 0
