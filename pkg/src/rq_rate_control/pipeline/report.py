"""Report tables recomputed from trace CSV files alone."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import pandas as pd
from loguru import logger

from ..evaluation.metrics import (
    ANCHOR_METHOD,
    operating_points,
    per_frame_deviation,
    summarize,
    summary_frame,
)
from ..exceptions import ContractError
from ..trace import SequenceTrace

DEVIATION_TABLE = "table_deviation.csv"
BD_RATE_TABLE = "table_bd_rate.csv"
PER_FRAME_FILE = "per_frame_deviation.csv"
OPERATING_POINTS_TABLE = "table_operating_points.csv"
SUMMARY_FILE = "summary.csv"
REPORT_TEXT = "report.txt"


@dataclass
class Report:
    """Method-by-sequence tables, per-frame figure data and per-cell operating points."""

    deviation: pd.DataFrame
    bd_rate: pd.DataFrame
    per_frame: pd.DataFrame
    summary: pd.DataFrame
    operating_points: pd.DataFrame

    def to_text(self) -> str:
        """Aligned text rendering with an average row per table."""
        sections = []
        for title, table in (("Mean rate deviation (%)", self.deviation),
                              ("BD-rate vs. constant-quality anchor (%)", self.bd_rate)):
            shown = table.copy()
            if not shown.empty:
                shown.loc["average"] = shown.mean(skipna=True)
            sections.append(f"{title}\n{shown.to_string(float_format=lambda v: f'{v:.3f}')}")
        return "\n\n".join(sections) + "\n"

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / DEVIATION_TABLE, out_dir / BD_RATE_TABLE, out_dir / PER_FRAME_FILE]
        self.deviation.to_csv(paths[0])
        self.bd_rate.to_csv(paths[1])
        self.per_frame.to_csv(paths[2], index=False)
        self.summary.to_csv(out_dir / SUMMARY_FILE, index=False)
        self.operating_points.to_csv(out_dir / OPERATING_POINTS_TABLE, index=False)
        paths += [out_dir / SUMMARY_FILE, out_dir / OPERATING_POINTS_TABLE]
        text_path = out_dir / REPORT_TEXT
        text_path.write_text(self.to_text(), encoding="utf-8")
        return paths + [text_path]


def load_traces(trace_dir: Union[str, Path]) -> List[SequenceTrace]:
    """Read every trace CSV of a directory in file-name order.

    Raises:
        ContractError: If the directory holds no trace CSVs.
    """
    trace_dir = Path(trace_dir)
    files = sorted(trace_dir.glob("*.csv")) if trace_dir.is_dir() else []
    if not files:
        raise ContractError(f"no trace CSV files in {trace_dir}")
    return [SequenceTrace.from_csv(path) for path in files]


def build_report(traces: List[SequenceTrace]) -> Report:
    """Pivot summaries into method-by-sequence tables.

    Methods without traces get no column.
    """
    summaries = summarize(traces)
    deviation = {s.method: {seq: v[0] for seq, v in s.per_sequence.items()} for s in summaries}
    bd = {s.method: {seq: v[1] for seq, v in s.per_sequence.items()} for s in summaries}
    deviation_table = pd.DataFrame(deviation).sort_index()
    bd_table = pd.DataFrame(bd).sort_index()
    deviation_table.index.name = bd_table.index.name = "sequence"

    report = Report(
        deviation=deviation_table,
        bd_rate=bd_table,
        per_frame=per_frame_deviation(traces),
        summary=summary_frame(traces),
        operating_points=operating_points(traces),
    )
    n_anchor = sum(1 for t in traces if t.method == ANCHOR_METHOD)
    logger.info(
        f"Report over {len(traces) - n_anchor} controlled traces and {n_anchor} anchor traces"
    )
    return report


def report_from_dir(trace_dir: Union[str, Path]) -> Report:
    return build_report(load_traces(trace_dir))
