"""Monte Carlo experiment engine: shared-noise sweeps and deterministic CSVs.

All t_fill variants of a sweep point consume the same decoded blocks (common
random numbers), so variant-to-variant BLER differences are paired rather
than buried in independent sampling noise.  Block decoding is the dominant
cost and can be farmed out to worker processes; blocks are always consumed in
index order and stopping is decided only on consumed blocks, so results are
byte-identical for any worker count.
"""

from __future__ import annotations

import itertools
import os
from collections import Counter, deque
from dataclasses import dataclass, replace

import numpy as np

from .channel import BLOCK_FRAMES, ChannelConfig
from .decoder import BlockOutcome, CompiledSchedule, run_channel_block
from .linear_code import Code, get_code
from .pipeline import FastPipeline, PipelineConfig, RunStats, query_stages
from .schedule import (
    LutCalibration,
    Schedule,
    compose_la_ilwo,
    enumerate_ilwo,
    enumerate_lwo,
    read_pattern_file,
    split_hardwired,
    validity_mask,
)

__all__ = [
    "ExperimentConfig",
    "RefStats",
    "PointResult",
    "build_schedule",
    "ilwo_intersection",
    "run_point",
    "run_sweep",
    "CSV_COLUMNS",
    "result_rows",
    "write_csv",
    "fmt",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a code, a schedule family, channel points and t_fill variants."""

    code: str = "bch-127-113"
    schedule: str = "ilwo"  # lwo | ilwo | la-ilwo
    pattern_file: str | None = None  # ranked LUT patterns (la-ilwo only)
    q_lut: int = 512
    programmable_slots: int = 32
    stages: int = 18
    q_s: int = 512
    t_fills: tuple[int, ...] = (3, 4, 7, 17)
    ebn0_db: tuple[float, ...] = (5.0, 5.5, 6.0, 6.5, 7.0, 7.5)
    seed: int = 1
    target_errors: int = 200  # 0 = fixed-frame run of max_frames
    max_frames: int = 500_000_000
    min_frames: int = BLOCK_FRAMES
    workers: int = 1

    def pipeline(self, t_fill: int | None = None) -> PipelineConfig:
        return PipelineConfig(self.stages, self.q_s, t_fill if t_fill is not None else 4)


def build_schedule(kind: str, capacity: int, q_max: int, pattern_file: str | None = None,
                   q_lut: int | None = None, programmable_slots: int = 32,
                   mask_n: int | None = None) -> Schedule:
    """Construct a query schedule by family name.

    la-ilwo needs a pattern file (as written by the calibrate command); its
    line order is taken as the LUT ranking.
    """
    if kind == "lwo":
        s = enumerate_lwo(capacity, q_max)
    elif kind == "ilwo":
        s = enumerate_ilwo(capacity, q_max)
    elif kind == "la-ilwo":
        if pattern_file is None:
            raise ValueError("la-ilwo schedule requires a calibrated pattern file")
        file_cap, pats = read_pattern_file(pattern_file)
        if file_cap > capacity:
            raise ValueError(f"pattern file capacity {file_cap} exceeds schedule capacity {capacity}")
        pats = [v for v in pats if v]  # zero pattern is implicit
        counts = Counter({v: len(pats) - i for i, v in enumerate(pats)})
        calib = LutCalibration(file_cap, 0.0, 0, 0, counts)
        s = compose_la_ilwo(calib, q_lut if q_lut is not None else len(pats), capacity, q_max)
        s = split_hardwired(s, programmable_slots)
    else:
        raise ValueError(f"unknown schedule kind {kind!r} (expected lwo, ilwo or la-ilwo)")
    if mask_n is not None:
        s, _ = validity_mask(s, mask_n)
    return s


def ilwo_intersection(patterns, capacity: int, q_lut: int, q_max: int) -> int:
    """How many of the top-q_lut patterns the first-q_max iLWO sequence already covers."""
    prefix = set(enumerate_ilwo(capacity, q_max).patterns)
    return len(set(patterns[:q_lut]) & prefix)


# ---------------------------------------------------------------------------
# Shared-noise point runner


@dataclass
class RefStats:
    """Sequential-decoder outcomes of the same frames (no pipeline effects)."""

    frames: int = 0
    errors: int = 0
    abandoned: int = 0

    @property
    def bler(self) -> float:
        return self.errors / self.frames if self.frames else 0.0

    @property
    def abandon_rate(self) -> float:
        return self.abandoned / self.frames if self.frames else 0.0


@dataclass
class PointResult:
    ebn0_db: float
    stats: dict[int, RunStats]  # keyed by t_fill
    ref: RefStats
    records: dict[int, list] | None = None  # t_fill -> [(frame, stage, status)]


_WSTATE: tuple | None = None


def _worker_init(code, chan, compiled):
    global _WSTATE
    _WSTATE = (code, chan, compiled)


def _worker_run(block: int) -> BlockOutcome:
    code, chan, compiled = _WSTATE
    return run_channel_block(code, chan, compiled, block)


def run_point(code: Code, schedule: Schedule, pcfg: PipelineConfig, chan: ChannelConfig,
              t_fills=(), target_errors: int = 200, max_frames: int = 500_000_000,
              min_frames: int = BLOCK_FRAMES, workers: int = 1,
              progress=None, record: bool = False) -> PointResult:
    """Run one channel point, feeding every t_fill variant the same frames.

    Stops at block granularity once every variant (and the reference tally)
    has target_errors block errors, or at max_frames.  target_errors=0 runs
    exactly max_frames frames.  record=True keeps per-frame (frame, stage,
    status) tuples; only use it for runs that fit in memory.
    """
    compiled = CompiledSchedule(schedule, code.n)
    pipes = {tf: FastPipeline(replace(pcfg, t_fill=tf), record=record) for tf in t_fills}
    ref = RefStats()
    done = 0

    def feed(out: BlockOutcome) -> None:
        nonlocal done
        take = min(out.frames, max_frames - done)
        ranks, correct = out.ranks[:take], out.correct[:take]
        qs = query_stages(ranks, pcfg)
        for pipe in pipes.values():
            pipe.feed(qs, correct)
        ref.frames += take
        ref.errors += int(take - correct.sum())
        ref.abandoned += int((ranks == -2).sum())
        done += take

    def stop() -> bool:
        if done >= max_frames:
            return True
        if target_errors <= 0 or done < min_frames:
            return False
        if ref.errors < target_errors:
            return False
        return all(p.stats.errors >= target_errors for p in pipes.values())

    if workers <= 1:
        block = 0
        while not stop():
            feed(run_channel_block(code, chan, compiled, block, max_frames - done))
            block += 1
            if progress and block % 64 == 0:
                progress(done, ref)
    else:
        from multiprocessing import get_context

        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(code, chan, compiled)) as pool:
            pending: deque = deque()
            blocks = itertools.count()
            while not stop():
                while len(pending) < 2 * workers:
                    pending.append(pool.apply_async(_worker_run, (next(blocks),)))
                feed(pending.popleft().get())
                if progress and done % (64 * BLOCK_FRAMES) == 0:
                    progress(done, ref)
    stats = {tf: pipe.finish() for tf, pipe in pipes.items()}
    records = {tf: pipe.records for tf, pipe in pipes.items()} if record else None
    return PointResult(chan.ebn0_db, stats, ref, records)


def run_sweep(cfg: ExperimentConfig, progress=None, record: bool = False) -> list[PointResult]:
    code = get_code(cfg.code)
    pcfg = cfg.pipeline()
    schedule = build_schedule(cfg.schedule, code.n, pcfg.q_max, cfg.pattern_file,
                              cfg.q_lut, cfg.programmable_slots)
    results = []
    for ebn0 in cfg.ebn0_db:
        chan = ChannelConfig(ebn0_db=ebn0, rate=code.rate, seed=cfg.seed)
        point = run_point(code, schedule, pcfg, chan, cfg.t_fills, cfg.target_errors,
                          cfg.max_frames, cfg.min_frames, cfg.workers,
                          progress=(lambda d, r, e=ebn0: progress(e, d, r)) if progress else None,
                          record=record)
        results.append(point)
    return results


# ---------------------------------------------------------------------------
# CSV output


# the first twelve columns are the stable reporting interface; the raw counts
# after them exist so confidence intervals can be recomputed from the file
CSV_COLUMNS = [
    "ebn0_db",
    "t_fill",
    "frames",
    "bler",
    "abandon_rate",
    "eviction_rate",
    "additional_failure_rate",
    "avg_output_stage",
    "avg_latency_cycles",
    "p99_latency_cycles",
    "sorter_gated_fraction",
    "active_stage_cycles",
    "errors",
    "correct",
    "wrong_codeword",
    "evicted_undecoded",
    "abandoned",
    "additional_failures",
    "cycles",
]


def fmt(x) -> str:
    """Deterministic cell formatting; floats use shortest-round-trip-ish %.12g."""
    if isinstance(x, float):
        return f"{x:.12g}"
    return "" if x is None else str(x)


def result_rows(point: PointResult, pcfg: PipelineConfig) -> list[list]:
    """One 'ref' row (sequential decoder) plus one row per t_fill variant."""
    r = point.ref
    rows = [[
        point.ebn0_db, "ref", r.frames, r.bler, r.abandon_rate, 0.0, 0.0,
        None, None, None, None, None,
        r.errors, r.frames - r.errors, r.errors - r.abandoned, 0, r.abandoned,
        0, None,
    ]]
    for tf in sorted(point.stats):
        st = point.stats[tf]
        act = ";".join(str(int(c)) for c in st.active_stage_cycles[1 : pcfg.stages - 1])
        rows.append([
            point.ebn0_db, tf, st.frames, st.bler, st.abandon_rate, st.eviction_rate,
            st.additional_failure_rate, st.avg_output_stage, st.avg_latency_cycles,
            st.p99_latency_cycles, st.sorter_gated_fraction, act,
            st.errors, st.correct, st.wrong_codeword, st.evicted_undecoded,
            st.abandoned, st.additional_failures, st.cycles,
        ])
    return rows


def write_csv(path: str, rows: list[list], header=CSV_COLUMNS) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(c) for c in row) + "\n")
