"""Experiment runner: sequences x methods x targets x seeds."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from ..control.rate_control import run_closed_loop, run_constant_quality, run_one_step_eval
from ..estimation.estimator import EstimatorVariant, calibrate_initial_params
from ..evaluation.metrics import predictor_accuracy_pct, summary_frame
from ..exceptions import ConfigError
from ..modeling.rq_model import RQParams
from ..prediction.base import BasePredictor, PredictorContext, QualityGrid
from ..prediction.regressor import LinearRateRegressor, collect_training_records, train_regressor
from ..prediction.synthetic import OraclePredictor, SyntheticNoisyPredictor
from ..schemas import ExperimentConfig, SequenceFileRef, SyntheticSequenceSpec
from ..simulation.codec_sim import (
    SequenceProfile,
    encode_frame,
    generate_sequence,
    load_sequence,
    multi_pass_probe,
    target_rate_for_anchor,
)
from ..trace import SequenceTrace

# 各輔助亂數流的固定索引，與 (序列, 目標, 方法) 亂數流不相交
STREAM_CALIBRATION = 1_000_001
STREAM_TRAINING = 1_000_002
STREAM_ACCURACY = 1_000_003
ANCHOR_METHOD_INDEX = len(EstimatorVariant)
METHOD_INDEX: Dict[EstimatorVariant, int] = {v: i for i, v in enumerate(EstimatorVariant)}

TRACE_DIR = "traces"
SUMMARY_FILE = "summary.csv"
ACCURACY_FILE = "predictor_accuracy.csv"


def sequence_seed(seed: int, index: int) -> int:
    """Deterministic integer seed of one generated sequence."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass(frozen=True)
class Cell:
    """One independent run of the experiment grid."""

    seed: int
    sequence_index: int
    sequence: SequenceProfile
    target_index: int
    target_label: str
    method: Optional[EstimatorVariant]
    r_s: Optional[float] = None
    anchor_q: Optional[float] = None
    init_params: Optional[RQParams] = None
    predictor: Optional[BasePredictor] = None

    @property
    def method_index(self) -> int:
        return ANCHOR_METHOD_INDEX if self.method is None else METHOD_INDEX[self.method]

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(
            [self.seed, self.sequence_index, self.target_index, self.method_index]
        )


@dataclass
class ExperimentResult:
    """Traces and tables of a finished run."""

    traces: List[SequenceTrace]
    summary: pd.DataFrame
    accuracy: Optional[pd.DataFrame] = None
    paths: List[Path] = field(default_factory=list)


def run_cell(cell: Cell, config: ExperimentConfig) -> SequenceTrace:
    """Execute one cell; module-level so worker processes can pickle it."""
    rng = cell.rng()
    if cell.method is None:
        return run_constant_quality(
            cell.sequence, cell.anchor_q, rng, target_label=cell.target_label, seed=cell.seed
        )

    cfg = config.rate_control.to_config(
        cell.method, config.predictor.quality_grid, cell.sequence.gop_length
    )
    if config.protocol == "one_step":
        return run_one_step_eval(
            cell.sequence, cfg, cell.predictor, rng,
            q_range=config.one_step_q_range, init_params=cell.init_params, seed=cell.seed,
        )
    return run_closed_loop(
        cell.sequence, cell.r_s, cfg, cell.predictor, rng,
        init_params=cell.init_params, target_label=cell.target_label, seed=cell.seed,
    )


def _run_cell_star(args: Tuple[Cell, ExperimentConfig]) -> SequenceTrace:
    return run_cell(*args)


class ExperimentRunner:
    """Plans and executes an experiment and writes its trace and summary files."""

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        jobs: int = 1,
        base_dir: Optional[Path] = None
    ):
        """Initialize the runner.

        Args:
            config: Validated experiment configuration.
            out_dir: Output directory; falls back to ``config.output_dir``.
            jobs: Worker processes; 1 runs in-process.
            base_dir: Directory that relative sequence file paths resolve against.
        """
        self.config = config
        self.out_dir = Path(out_dir or config.output_dir or "results")
        self.jobs = max(1, jobs)
        self.base_dir = base_dir or Path.cwd()

        logger.info(
            f"Initialized ExperimentRunner: {len(config.sequences)} sequences, "
            f"{len(config.methods)} methods, {len(config.seeds)} seeds, jobs={self.jobs}"
        )

    def build_sequences(self, seed: int) -> List[SequenceProfile]:
        """Sequences of one seed, in config order."""
        sequences = []
        for index, spec in enumerate(self.config.sequences):
            if isinstance(spec, SequenceFileRef):
                path = Path(spec.path)
                path = path if path.is_absolute() else self.base_dir / path
                sequences.append(load_sequence(path))
                continue
            sequences.append(self._generate(spec, seed, index))
        names = [s.name for s in sequences]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"duplicate sequence names {duplicates}", field="sequences")
        return sequences

    @staticmethod
    def _generate(spec: SyntheticSequenceSpec, seed: int, index: int) -> SequenceProfile:
        return generate_sequence(
            seed=sequence_seed(seed, index),
            n_frames=spec.n_frames,
            drift=spec.drift,
            base=spec.base_profile(),
            jitter=spec.jitter,
            rho=spec.rho,
            gop_length=spec.gop_length,
            name=spec.name,
        )

    def build_predictor(self, seed: int) -> Optional[BasePredictor]:
        """Predictor of one seed, or None when no method uses one."""
        if not any(m.uses_predictor for m in self.config.methods):
            return None
        settings = self.config.predictor
        if settings.kind == "oracle":
            return OraclePredictor()
        if settings.kind == "synthetic":
            if settings.calibrate_to_pct is None:
                return SyntheticNoisyPredictor(settings.sigmas)
            return SyntheticNoisyPredictor.calibrated(settings.calibrate_to_pct, settings.sigmas)
        if settings.regressor_path:
            return LinearRateRegressor.load(self.base_dir / settings.regressor_path)
        return self._train_regressor(seed)

    def _train_regressor(self, seed: int) -> LinearRateRegressor:
        rng = np.random.default_rng([seed, STREAM_TRAINING])
        specs = [s for s in self.config.sequences if isinstance(s, SyntheticSequenceSpec)]
        if not specs:
            specs = [SyntheticSequenceSpec(name="training")]
        profiles = [
            self._generate(specs[i % len(specs)], seed, STREAM_TRAINING + i)
            for i in range(self.config.predictor.training_sequences)
        ]
        grid = self.config.predictor.quality_grid
        return train_regressor(collect_training_records(profiles, grid, rng), grid)

    def _targets(self, sequence: SequenceProfile) -> List[Tuple[str, Optional[float]]]:
        """(label, R_s) per target."""
        if self.config.target_bits:
            return [(f"r{bits:g}", bits) for bits in self.config.target_bits]
        return [
            (f"q{q:g}", target_rate_for_anchor(sequence, q))
            for q in self.config.anchor_levels
        ]

    def plan(self) -> Tuple[List[Cell], Dict[int, Tuple[List[SequenceProfile], BasePredictor]]]:
        """Every cell of the grid in deterministic order."""
        cells: List[Cell] = []
        per_seed = {}
        for seed in self.config.seeds:
            sequences = self.build_sequences(seed)
            predictor = self.build_predictor(seed)
            per_seed[seed] = (sequences, predictor)
            init = calibrate_initial_params(
                sequences,
                self.config.predictor.quality_grid,
                np.random.default_rng([seed, STREAM_CALIBRATION]),
            )
            for s_idx, sequence in enumerate(sequences):
                targets = self._targets(sequence)
                if self.config.protocol == "one_step":
                    low, high = self.config.one_step_q_range
                    targets = [(f"onestep{low:g}-{high:g}", None)]
                for t_idx, (label, r_s) in enumerate(targets):
                    for method in self.config.methods:
                        cells.append(Cell(
                            seed=seed, sequence_index=s_idx, sequence=sequence,
                            target_index=t_idx, target_label=label, method=method, r_s=r_s,
                            init_params=init,
                            predictor=predictor if method.uses_predictor else None,
                        ))
                for a_idx, q in enumerate(self.config.anchor_levels):
                    cells.append(Cell(
                        seed=seed, sequence_index=s_idx, sequence=sequence,
                        target_index=a_idx, target_label=f"q{q:g}", method=None, anchor_q=q,
                    ))
        return cells, per_seed

    def _execute(self, cells: List[Cell]) -> List[SequenceTrace]:
        args = [(cell, self.config) for cell in cells]
        if self.jobs == 1:
            return [_run_cell_star(a) for a in tqdm(args, desc="cells", unit="run")]
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            return list(tqdm(
                pool.map(_run_cell_star, args, chunksize=8),
                total=len(args), desc="cells", unit="run",
            ))

    def run(self) -> ExperimentResult:
        """Run every cell and write traces, the summary and predictor accuracy."""
        try:
            cells, per_seed = self.plan()
            logger.info(f"Running {len(cells)} cells")
            traces = self._execute(cells)
        except Exception as e:
            logger.error(f"Error running experiment: {str(e)}")
            raise

        fallbacks = sum(trace.fallback_count for trace in traces)
        clamps = sum(trace.clamp_count for trace in traces)
        repairs = sum(trace.repair_count for trace in traces)
        if fallbacks:
            logger.warning(f"{fallbacks} frames used fallback parameters across {len(traces)} runs")
        if clamps:
            worst = max(traces, key=lambda trace: trace.clamp_count)
            logger.warning(
                f"{clamps} frame budgets floored at min_bits across {len(traces)} runs, "
                f"most in {worst.file_stem} ({worst.clamp_count})"
            )
        if repairs:
            logger.warning(f"{repairs} prior predictions needed monotone repair")

        trace_dir = self.out_dir / TRACE_DIR
        paths = [trace.to_csv(trace_dir / f"{trace.file_stem}.csv") for trace in traces]

        summary = summary_frame(traces)
        summary_path = self.out_dir / SUMMARY_FILE
        summary.to_csv(summary_path, index=False)
        paths.append(summary_path)

        accuracy = None
        if any(predictor is not None for _, predictor in per_seed.values()):
            accuracy = predictor_accuracy_table(per_seed, self.config.predictor.quality_grid)
            accuracy_path = self.out_dir / ACCURACY_FILE
            accuracy.to_csv(accuracy_path, index=False)
            paths.append(accuracy_path)

        logger.info(f"Wrote {len(traces)} traces and summary to {self.out_dir}")
        return ExperimentResult(traces=traces, summary=summary, accuracy=accuracy, paths=paths)


def predictor_accuracy_table(
    per_seed: Dict[int, Tuple[List[SequenceProfile], Optional[BasePredictor]]],
    grid: QualityGrid
) -> pd.DataFrame:
    """Per-sequence predictor accuracy at every grid level, normalized by the prediction.

    Frame t's context comes from frame t-1 encoded at the grid midpoint; frame t is then
    probed at every grid level.
    """
    pooled: Dict[str, Dict[int, Tuple[List[float], List[float]]]] = {}
    for seed, (sequences, predictor) in per_seed.items():
        if predictor is None:
            continue
        rng = np.random.default_rng([seed, STREAM_ACCURACY])
        for sequence in sequences:
            per_level = pooled.setdefault(
                sequence.name, {i: ([], []) for i in range(len(grid.levels))}
            )
            for prev, frame in zip(sequence.frames, sequence.frames[1:]):
                prev_result = encode_frame(prev, grid.midpoint, rng)
                ctx = PredictorContext(
                    prev_rate=prev_result.rate,
                    prev_distortion=prev_result.distortion,
                    prev_quality=grid.midpoint,
                    content_scalar=frame.complexity(),
                    frame=frame,
                )
                predicted = predictor.predict(ctx, grid, rng).rates
                probe = multi_pass_probe(frame, grid.levels, rng)
                for i, point in enumerate(probe):
                    per_level[i][0].append(point.rate)
                    per_level[i][1].append(float(predicted[i]))

    rows = []
    for name in sorted(pooled):
        row = {"sequence": name}
        for i, q in enumerate(grid.levels):
            enc, pred = pooled[name][i]
            row[f"q{q:g}"] = predictor_accuracy_pct(enc, pred) if enc else float("nan")
        rows.append(row)
    table = pd.DataFrame(rows)
    if not table.empty:
        level_columns = [c for c in table.columns if c != "sequence"]
        table["average"] = table[level_columns].mean(axis=1)
    return table
