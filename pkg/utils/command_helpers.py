import argparse
import logging
from typing import Tuple

from cover_flow import HORIZONTAL_FLOW, VERTICAL_FLOW, Direction
from errors import ConfigNotHyperbolic, MissingRequired
from file_utils import read_text
from observables import Observable, bump_observable, parse_observable
from renorm import AffineAuto, automorphism_from_word, dehn_twist
from schemas.config import MODELS, RunConfig
from schemas.surface import CylinderSummary, StratumSummary, SurfaceSummary, TwistSummary, WeightRow
from surface import DIRECTIONS, Origami, cylinders, parse_surface, staircase, stratum, torus, windtree_plus

log = logging.getLogger(__name__)


def load_surface(config: RunConfig) -> Tuple[Origami, str]:
    """Build the surface named by the config, with a display name"""
    if config.model == 'staircase':
        return staircase(config.s), f"staircase({config.s})"
    if config.model == 'windtree':
        return windtree_plus(), "windtree_plus"
    if config.model == 'torus':
        return torus(), "torus"
    return parse_surface(read_text(config.file)), config.file


def load_automorphism(config: RunConfig, o: Origami) -> AffineAuto:
    if not config.word:
        raise MissingRequired(f"{config.command} needs a twist word (--word)")
    a = automorphism_from_word(o, config.word)
    if config.needs_hyperbolic and not a.is_hyperbolic:
        raise ConfigNotHyperbolic(f"word {config.word!r} gives trace {a.trace}; "
                                  f"{config.command} needs |trace| > 2")
    log.info("automorphism %s: derivative %s, lambda %s", config.word, a.derivative, a.lam)
    return a


def load_direction(config: RunConfig, a: AffineAuto = None) -> Direction:
    if config.direction == 'horizontal':
        return HORIZONTAL_FLOW
    if config.direction == 'vertical':
        return VERTICAL_FLOW
    return a.stable_dir if config.direction == 'stable' else a.unstable_dir


def load_observable(config: RunConfig, o: Origami) -> Observable:
    """Observable from file, or the unit bump on the fundamental domain"""
    if config.observable:
        return parse_observable(read_text(config.observable), d=o.d)
    return bump_observable(o)


def summarize_surface(o: Origami, name: str) -> SurfaceSummary:
    cyl_data, twists = {}, {}
    for direction in DIRECTIONS:
        cyl_data[direction] = [
            CylinderSummary(rows=c.rows, width=c.width, height=c.height, modulus=str(c.modulus))
            for c in cylinders(o, direction)
        ]
        try:
            stage = dehn_twist(o, direction).stages[0]
            twists[direction] = TwistSummary(c=stage.c, k=list(stage.k), matrix=[list(r) for r in stage.matrix])
        except Exception as exc:
            log.warning("no lifted %s twist: %s", direction, exc)
    strat = stratum(o)
    weights = [WeightRow(square=sq, right=o.right_perm[sq], up=o.up_perm[sq],
                         w_right=list(o.w_right[sq]), w_up=list(o.w_up[sq])) for sq in range(o.n_squares)]
    return SurfaceSummary(model=name, n_squares=o.n_squares, d=o.d, cylinders=cyl_data, twists=twists,
                          stratum=StratumSummary(cone_angles=strat.cone_angles, genus=strat.genus,
                                                 marked_points=strat.marked_points, holonomy=strat.holonomy),
                          weights=weights)


def add_model_options(parser) -> None:
    group = parser.add_argument_group("surface")
    group.add_argument("--model", choices=MODELS, help="base surface (default staircase)")
    group.add_argument("--s", type=int, help="staircase parameter (default 2)")
    group.add_argument("--file", help="surface file; implies --model file")


def add_twist_options(parser) -> None:
    parser.add_argument("--word", help="twist word over h, v (H, V for inverses), applied right to left")


def add_sampling_options(parser) -> None:
    parser.add_argument("--samples", type=int, help="ensemble size, or independent walks for asclt (default 1000)")


def add_command(subparsers, name: str, parents, help: str):
    """Subcommand parser whose unset options stay absent, so config-file values survive"""
    return subparsers.add_parser(name, parents=parents, help=help, description=help,
                                 argument_default=argparse.SUPPRESS)
