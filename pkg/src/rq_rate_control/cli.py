"""Command-line entry point: generate, run, report."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from .config import EXPERIMENT, SIMULATION
from .exceptions import ConfigError, RQControlError
from .pipeline.experiment import TRACE_DIR, ExperimentRunner, sequence_seed
from .pipeline.report import report_from_dir
from .schemas import load_experiment_config
from .simulation.codec_sim import BENCHMARK_BASES, generate_sequence, save_sequence
from .utils.logging import setup_logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def cmd_generate(
    seed: int,
    count: int,
    drift: float,
    out_path: Path,
    n_frames: int = SIMULATION["n_frames"],
    jitter: float = 0.0,
    content: Optional[str] = None
) -> List[Path]:
    """Write ``count`` synthetic sequence profiles as JSON, deterministic per seed."""
    if count < 1:
        raise ConfigError("count must be >= 1", field="count")
    if content is not None and content not in BENCHMARK_BASES:
        raise ConfigError(f"unknown content class {content!r}", field="content")

    base = BENCHMARK_BASES[content] if content else None
    paths = []
    for index in range(count):
        name = f"seq_{seed}_{index:03d}"
        profile = generate_sequence(
            seed=sequence_seed(seed, index),
            n_frames=n_frames,
            drift=drift,
            base=base,
            jitter=jitter,
            name=name,
        )
        paths.append(save_sequence(profile, out_path / f"{name}.json"))
    logger.info(f"Generated {count} sequences in {out_path}")
    return paths


def cmd_run(
    config_path: Path,
    out_dir: Optional[Path] = None,
    jobs: int = EXPERIMENT["jobs"],
    seed: Optional[int] = None
) -> Path:
    """Run an experiment configuration; returns the output directory."""
    config = load_experiment_config(config_path)
    if seed is not None:
        config = config.model_copy(update={"seeds": [seed]})
    runner = ExperimentRunner(
        config,
        out_dir=out_dir or config.output_dir or EXPERIMENT["output_dir"],
        jobs=jobs,
        base_dir=config_path.resolve().parent,
    )
    result = runner.run()
    logger.info(f"Run finished: {len(result.traces)} traces")
    return runner.out_dir


def cmd_report(trace_dir: Path, out_dir: Optional[Path] = None) -> List[Path]:
    """Recompute report tables from the trace CSVs of ``trace_dir``."""
    if (trace_dir / TRACE_DIR).is_dir():
        trace_dir = trace_dir / TRACE_DIR
    report = report_from_dir(trace_dir)
    paths = report.write(out_dir or trace_dir.parent / "report")
    print(report.to_text(), end="")
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rq-rate-control",
        description="R-Q model based rate control simulation and benchmarks",
    )
    parser.add_argument("--log-level", default=None, help="console log level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic sequence profiles")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--drift", type=float, default=0.0)
    gen.add_argument("--jitter", type=float, default=0.0)
    gen.add_argument("--frames", type=int, default=SIMULATION["n_frames"])
    gen.add_argument("--content", choices=sorted(BENCHMARK_BASES), default=None)
    gen.add_argument("--out", type=Path, required=True, help="output directory")

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("--config", type=Path, required=True)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--jobs", type=int, default=EXPERIMENT["jobs"])
    run.add_argument("--seed", type=int, default=None, help="override the config's seeds")

    rep = sub.add_parser("report", help="build report tables from trace CSVs")
    rep.add_argument("traces", type=Path, help="run output or trace directory")
    rep.add_argument("--out", type=Path, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)

    try:
        if args.command == "generate":
            cmd_generate(
                args.seed, args.count, args.drift, args.out,
                n_frames=args.frames, jitter=args.jitter, content=args.content,
            )
        elif args.command == "run":
            cmd_run(args.config, args.out, args.jobs, args.seed)
        else:
            cmd_report(args.traces, args.out)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first.get("loc", ()))
        logger.error(f"Invalid input document: {field}: {first['msg']}")
        print(f"error: {field}: {first['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except (RQControlError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
