from typing import Tuple

from acceptance import run_suite
from file_utils import render_json
from schemas.config import SUITES, RunConfig
from utils.command_helpers import add_command


def register(subparsers, parents) -> None:
    parser = add_command(subparsers, "verify", parents, "run the acceptance battery")
    parser.add_argument("--suite", choices=SUITES, help="which block of checks to run (default all)")
    parser.add_argument("--quick", action="store_true", help="smaller ensembles with matching tolerances")


def run(config: RunConfig, manifest_name: str) -> Tuple[str, int]:
    report = run_suite(config.suite, config.quick, config.workers)
    payload = report.model_dump()
    payload["passed"] = report.passed
    return render_json(payload, manifest_name), 0 if report.passed else 1
