import logging
import os
import sys
import time
from typing import Optional, Sequence

from commands import COMMANDS
from config import build_manifest, log_level, parse_config
from errors import ZdcoverError
from file_utils import atomic_write_text, emit, generate_run_id, manifest_path_for, render_json

log = logging.getLogger("zdcover")


def configure_logging(level: int) -> None:
    # stdout carries CSV/JSON, so log records go to stderr
    logging.basicConfig(stream=sys.stderr, level=level, force=True,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, run one subcommand, write its output and manifest; returns the exit code"""
    argv = sys.argv[1:] if argv is None else argv
    configure_logging(logging.WARNING)
    started = time.perf_counter()
    try:
        config = parse_config(argv)
        configure_logging(log_level(config))
        run_id = generate_run_id()
        manifest_path = manifest_path_for(config.out, run_id)
        log.info("run %s: %s (seed %d, %d workers)", run_id, config.command, config.seed, config.workers)

        text, code = COMMANDS[config.command].run(config, os.path.basename(manifest_path))
        emit(text, config.out)
        outputs = [config.out] if config.out else []
        manifest = build_manifest(config, run_id, time.perf_counter() - started, outputs)
        atomic_write_text(manifest_path, render_json(manifest, os.path.basename(manifest_path)))
        log.info("manifest written to %s", manifest_path)
        return code
    except ZdcoverError as exc:
        print(f"zdcover: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("zdcover: interrupted", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
