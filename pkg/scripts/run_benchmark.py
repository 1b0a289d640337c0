"""Script to run the default method-comparison benchmark and its report."""

import sys
from pathlib import Path

from loguru import logger

from rq_rate_control.cli import cmd_report, cmd_run
from rq_rate_control.utils.logging import setup_logging

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    """Run config/benchmark.json with four workers and write the report next to it."""
    setup_logging(log_dir=ROOT / "logs")
    config = ROOT / "config" / "benchmark.json"
    jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 4

    logger.info(f"Starting benchmark from {config}")
    out_dir = cmd_run(config, jobs=jobs)
    cmd_report(out_dir)


if __name__ == "__main__":
    main()
