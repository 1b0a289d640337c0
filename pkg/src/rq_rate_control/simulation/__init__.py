"""Simulated variable-rate codec."""

from .codec_sim import (
    BENCHMARK_BASES,
    EncodeResult,
    FrameProfile,
    SequenceProfile,
    constant_quality_anchor,
    encode_frame,
    generate_sequence,
    load_sequence,
    multi_pass_probe,
    save_sequence,
    target_rate_for_anchor,
)

__all__ = [
    "BENCHMARK_BASES",
    "EncodeResult",
    "FrameProfile",
    "SequenceProfile",
    "constant_quality_anchor",
    "encode_frame",
    "generate_sequence",
    "load_sequence",
    "multi_pass_probe",
    "save_sequence",
    "target_rate_for_anchor",
]
