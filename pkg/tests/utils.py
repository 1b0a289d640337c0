"""Test utilities and helper functions."""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

from rq_rate_control.modeling.rq_model import RQPoint
from rq_rate_control.trace import FrameRecord, SequenceTrace


def log_law_points(alpha: float, beta: float, rates: Sequence[float]) -> List[RQPoint]:
    """Points lying exactly on Q = alpha * ln R + beta."""
    return [RQPoint(rate=r, quality=alpha * math.log(r) + beta) for r in rates]


def make_trace(
    deviations: Sequence[float],
    sequence: str = "seq",
    method: str = "fusion",
    target: str = "q25",
    seed: int = 0,
    r_s: float = 1000.0,
    psnr_db: float = 35.0
) -> SequenceTrace:
    """建立每幀偏差已知的測試軌跡；負值代表編碼碼率低於目標。"""
    records = []
    for t, dev in enumerate(deviations):
        r_enc = r_s * (1.0 + dev / 100.0)
        records.append(FrameRecord(
            t=t, r_target=r_s, q_pred=25.0, r_enc=r_enc, psnr_db=psnr_db,
            alpha=12.0, beta=-100.0, deviation_pct=abs(dev), distortion=100.0,
        ))
    return SequenceTrace(
        sequence=sequence, method=method, target=target, seed=seed, r_s=r_s, records=records
    )


def write_config(path: Path, **overrides: Any) -> Path:
    """寫入最小實驗設定檔。"""
    config: Dict[str, Any] = {
        "schema_version": 1,
        "sequences": [{"name": "small", "n_frames": 16, "drift": 0.02, "jitter": 0.5}],
        "methods": ["fusion", "four_pass_oracle"],
        "anchor_levels": [10, 25, 40, 55],
        "seeds": [3],
    }
    config.update(overrides)
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
