from typing import Tuple

from file_utils import render_csv
from gauss_integrals import I, quad_oracle
from schemas.config import RunConfig
from utils.command_helpers import add_command


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "gauss", parents, "Gaussian moment integrals I_j(sigma, L)")
    parser.add_argument("--j", type=int, help="moment order (default 0)")
    parser.add_argument("--sigma", type=float, help="Gaussian scale (default 1)")
    parser.add_argument("--L", help="comma-separated frequencies (default 0)")
    parser.add_argument("--oracle", action="store_true", help="add quadrature values alongside the recursion")


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    header = ["L", "re", "im"]
    if config.oracle:
        header += ["oracle_re", "oracle_im"]
    rows = []
    for L in config.L:
        value = I(config.j, config.sigma, L)
        row = [L, value.real, value.imag]
        if config.oracle:
            check = quad_oracle(config.j, config.sigma, L)
            row += [check.real, check.imag]
        rows.append(row)
    return render_csv(header, rows, manifest_name), 0
