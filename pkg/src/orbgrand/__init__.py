"""Ordered reliability bits GRAND decoding with a cycle-level pipeline simulator."""

from .channel import BLOCK_FRAMES, ChannelConfig, block_rng, hard_decision, transmit
from .decoder import (
    CompiledSchedule,
    DecodeResult,
    decode,
    decode_batch,
    run_channel_block,
    sort_reliability,
)
from .harness import ExperimentConfig, build_schedule, run_point, run_sweep
from .linear_code import Code, Gf2Poly, bch_construct, encode, get_code, load_code, syndrome
from .pipeline import (
    FastPipeline,
    PipelineConfig,
    RunStats,
    SlotPipeline,
    select_output,
    simulate,
    stage_of_query,
)
from .schedule import (
    Schedule,
    calibrate_lut,
    compose_la_ilwo,
    enumerate_ilwo,
    enumerate_lwo,
    ilw,
    lw,
    split_hardwired,
    validity_mask,
)

__version__ = "0.1.0"

__all__ = [
    "BLOCK_FRAMES",
    "ChannelConfig",
    "block_rng",
    "hard_decision",
    "transmit",
    "CompiledSchedule",
    "DecodeResult",
    "decode",
    "decode_batch",
    "run_channel_block",
    "sort_reliability",
    "ExperimentConfig",
    "build_schedule",
    "run_point",
    "run_sweep",
    "Code",
    "Gf2Poly",
    "bch_construct",
    "encode",
    "get_code",
    "load_code",
    "syndrome",
    "FastPipeline",
    "PipelineConfig",
    "RunStats",
    "SlotPipeline",
    "select_output",
    "simulate",
    "stage_of_query",
    "Schedule",
    "calibrate_lut",
    "compose_la_ilwo",
    "enumerate_ilwo",
    "enumerate_lwo",
    "ilw",
    "lw",
    "split_hardwired",
    "validity_mask",
    "__version__",
]
