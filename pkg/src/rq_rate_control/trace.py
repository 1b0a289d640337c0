"""Per-frame rate-control traces and their CSV / JSON documents."""

import json
import math
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from .config import SIMULATION

# 前八欄順序固定
TRACE_COLUMNS = [
    "t", "r_target", "q_pred", "r_enc", "psnr_db", "alpha", "beta", "deviation_pct",
]
EXTRA_COLUMNS = ["distortion", "fallback", "q_target", "clamped", "repaired"]
META_COLUMNS = ["sequence", "method", "target", "seed", "r_s", "pixels"]


class FrameRecord(BaseModel):
    """One encoded frame."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t: int = Field(..., ge=0)
    r_target: float
    q_pred: float
    r_enc: float
    psnr_db: float
    alpha: float
    beta: float
    deviation_pct: float = Field(..., ge=0)
    distortion: float
    fallback: bool = False
    q_target: Optional[float] = None
    clamped: bool = Field(False, description="budget floored at min_bits")
    repaired: bool = Field(False, description="prior rates needed monotone repair")


class SequenceTrace(BaseModel):
    """Time-ordered frame records of one (sequence, method, target, seed) run."""

    model_config = ConfigDict(extra="forbid")

    sequence: str
    method: str
    target: str
    seed: int = 0
    r_s: float = Field(..., description="target bits per frame")
    pixels: int = Field(SIMULATION["pixels"], gt=0, description="pixels per frame")
    records: List[FrameRecord] = Field(default_factory=list)

    @property
    def consumed_bits(self) -> float:
        return sum(r.r_enc for r in self.records)

    @property
    def fallback_count(self) -> int:
        return sum(1 for r in self.records if r.fallback)

    @property
    def clamp_count(self) -> int:
        return sum(1 for r in self.records if r.clamped)

    @property
    def repair_count(self) -> int:
        return sum(1 for r in self.records if r.repaired)

    @property
    def mean_deviation_pct(self) -> float:
        if not self.records:
            return float("nan")
        return math.fsum(r.deviation_pct for r in self.records) / len(self.records)

    @property
    def mean_rate(self) -> float:
        return self.consumed_bits / len(self.records) if self.records else float("nan")

    @property
    def mean_bpp(self) -> float:
        """Mean encoded bits per pixel."""
        return self.mean_rate / self.pixels

    @property
    def mean_quality(self) -> float:
        if not self.records:
            return float("nan")
        return math.fsum(r.q_pred for r in self.records) / len(self.records)

    @property
    def mean_psnr_db(self) -> float:
        if not self.records:
            return float("nan")
        return math.fsum(r.psnr_db for r in self.records) / len(self.records)

    @property
    def file_stem(self) -> str:
        return f"{self.sequence}__{self.method}__{self.target}__{self.seed}"

    def to_frame(self) -> pd.DataFrame:
        """One row per frame, fixed column order, metadata repeated on every row."""
        rows = [record.model_dump() for record in self.records]
        df = pd.DataFrame(rows, columns=TRACE_COLUMNS + EXTRA_COLUMNS)
        for column in META_COLUMNS:
            df[column] = getattr(self, column)
        return df[TRACE_COLUMNS + EXTRA_COLUMNS + META_COLUMNS]

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "SequenceTrace":
        """Rebuild a trace from the table written by :meth:`to_frame`."""
        if df.empty:
            raise ValueError("trace table has no rows")
        first = df.iloc[0]
        records = []
        for row in df.to_dict(orient="records"):
            q_target = row.get("q_target")
            records.append(FrameRecord(
                t=int(row["t"]),
                r_target=float(row["r_target"]),
                q_pred=float(row["q_pred"]),
                r_enc=float(row["r_enc"]),
                psnr_db=float(row["psnr_db"]),
                alpha=float(row["alpha"]),
                beta=float(row["beta"]),
                deviation_pct=float(row["deviation_pct"]),
                distortion=float(row["distortion"]),
                fallback=bool(row["fallback"]),
                q_target=None if q_target is None or pd.isna(q_target) else float(q_target),
                clamped=bool(row.get("clamped", False)),
                repaired=bool(row.get("repaired", False)),
            ))
        return cls(
            sequence=str(first["sequence"]),
            method=str(first["method"]),
            target=str(first["target"]),
            seed=int(first["seed"]),
            r_s=float(first["r_s"]),
            pixels=int(first["pixels"]) if "pixels" in df.columns else SIMULATION["pixels"],
            records=records,
        )

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "SequenceTrace":
        try:
            df = pd.read_csv(
                path, dtype={"target": str, "sequence": str}, float_precision="round_trip"
            )
            return cls.from_frame(df)
        except Exception as e:
            logger.error(f"Error reading trace {path}: {str(e)}")
            raise

    def to_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SequenceTrace":
        return cls.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
