"""Command-line and config-file parsing into a validated RunConfig, plus run manifests."""
import argparse
import json
import logging
import os
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from commands import COMMANDS
from errors import MissingRequired, UnknownKey, UsageError
from file_utils import read_text
from schemas.config import RunConfig
from utils.command_helpers import load_automorphism, load_surface

log = logging.getLogger(__name__)

VERSION = "0.3.0"
PROG = "zdcover"
WORKERS_ENV = "ZDCOVER_WORKERS"
LOG_LEVEL_ENV = "ZDCOVER_LOG_LEVEL"
FIELDS = frozenset(RunConfig.model_fields)


class ZdcoverParser(argparse.ArgumentParser):
    """argparse reports problems through UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _global_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or all cores)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--config", help="key=value config file or a run manifest")
    common.add_argument("-v", "--verbose", action="count", help="-v for progress, -vv for debug output")
    return common


def build_parser() -> ZdcoverParser:
    common = _global_options()
    parser = ZdcoverParser(prog=PROG, parents=[common], argument_default=argparse.SUPPRESS,
                           description="Simulation lab for translation flows on Z^d-covers of square-tiled surfaces")
    parser.add_argument("--version", action="version", version=f"{PROG} {VERSION}")
    subparsers = parser.add_subparsers(dest="command", parser_class=ZdcoverParser)
    for name, module in COMMANDS.items():
        module.register(subparsers, [common])
    return parser


def _file_key(key: str, line_no: int, path: str) -> str:
    name = key.strip().replace('-', '_')
    if name not in FIELDS:
        raise UnknownKey(f"{path}:{line_no}: unknown key {key.strip()!r}")
    return name


def load_config_file(path: str) -> Dict[str, object]:
    """Read a flat key=value file (# comments allowed) or a JSON run manifest"""
    text = read_text(path)
    if text.lstrip().startswith('{'):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not a valid manifest ({exc})") from exc
        values = data.get("config", data)
        return {_file_key(k, 0, path): v for k, v in values.items()}

    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value, got {raw.strip()!r}")
        key, value = line.split('=', 1)
        values[_file_key(key, line_no, path)] = value.strip()
    return values


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _validate_early(config: RunConfig) -> None:
    """Catch missing twist words and parabolic automorphisms before any simulation starts"""
    if not config.needs_automorphism:
        return
    if not config.word:
        raise MissingRequired(f"{config.command} needs a twist word (--word)")
    if config.needs_hyperbolic:
        o, _ = load_surface(config)
        load_automorphism(config, o)


def parse_config(argv: Sequence[str], config_file: Optional[str] = None) -> RunConfig:
    """RunConfig from argv layered over an optional config file; flags win over file values"""
    parser = build_parser()
    argv = list(argv)
    if not argv and config_file is None:
        raise UsageError(parser.format_usage())
    given = {k: v for k, v in vars(parser.parse_args(argv)).items() if v is not None}
    path = given.pop("config", None) or config_file
    values = load_config_file(path) if path else {}
    values.update(given)
    if not values.get("command"):
        raise MissingRequired(f"no subcommand given\n{parser.format_usage()}")
    values.setdefault("workers", _default_workers())
    try:
        config = RunConfig(**values)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    _validate_early(config)
    return config


def log_level(config: RunConfig) -> int:
    if config.verbose >= 2:
        return logging.DEBUG
    if config.verbose == 1:
        return logging.INFO
    name = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.WARNING


def build_manifest(config: RunConfig, run_id: str, wall_time: float, outputs: List[str]) -> dict:
    return {
        "tool": PROG,
        "version": VERSION,
        "run_id": run_id,
        "seed": config.seed,
        "wall_time": wall_time,
        "outputs": outputs,
        "config": config.model_dump(),
    }
