"""Cycle-level model of a fully pipelined guessing decoder with out-of-order output.

The hardware picture: T pipeline stages, one frame injected per cycle (full
load).  Stage 0 sorts reliabilities and checks the hard decision's syndrome;
stages 1..T-2 each test q_s scheduled patterns; a frame's corrected word is
retrievable one stage after its successful query, never before stage 3.  Every
cycle, once the pipe has filled to stage t_fill, exactly one frame is popped:
the slot at T-1 if present (it would otherwise fall off), else the oldest
valid candidate, else the oldest present frame is sacrificed (eviction).

Frames advance one stage per cycle without stalls, so a frame's stage equals
its age in cycles and per-frame latency equals its output stage.  The
functional simulator exploits this: a frame's fate is fully determined by the
stage at which its reference decode becomes selectable, so the whole pipeline
reduces to bookkeeping over (age, selectable stage) pairs, bit-exact with the
slot-level model (which is also implemented here and used as a cross-check).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig
from .decoder import BlockOutcome, CompiledSchedule, run_channel_block
from .linear_code import Code
from .schedule import Schedule

__all__ = [
    "PipelineConfig",
    "stage_of_query",
    "selectable_stage",
    "query_stages",
    "StageSlot",
    "select_output",
    "SlotPipeline",
    "FastPipeline",
    "RunStats",
    "ActivityStats",
    "activity_counters",
    "simulate",
    "CORRECT",
    "WRONG_CODEWORD",
    "EVICTED_UNDECODED",
    "ABANDONED",
    "STATUS_NAMES",
]

CORRECT, WRONG_CODEWORD, EVICTED_UNDECODED, ABANDONED = 0, 1, 2, 3
STATUS_NAMES = ("correct", "wrong_codeword", "evicted_undecoded", "abandoned")

_NEVER = 10**9  # selectable stage of a frame whose decode abandons


@dataclass(frozen=True)
class PipelineConfig:
    """Geometry of the decoder pipe: T stages, q_s patterns per query stage."""

    stages: int = 18
    q_s: int = 512
    t_fill: int = 4

    def __post_init__(self):
        if self.stages < 4:
            raise ValueError("need at least stages 0..3")
        if self.q_s < 1:
            raise ValueError("q_s must be positive")
        if not 3 <= self.t_fill <= self.stages - 1:
            raise ValueError(f"t_fill must lie in [3, {self.stages - 1}]")

    @property
    def q_max(self) -> int:
        """Pattern budget: q_s patterns in each of the T-2 query stages."""
        return self.q_s * (self.stages - 2)


def stage_of_query(q: int, cfg: PipelineConfig) -> int:
    """Stage that tests query q; q = -1 is the stage-0 hard-decision check."""
    if q == -1:
        return 0
    if not 0 <= q < cfg.q_max:
        raise ValueError(f"query index {q} outside [-1, {cfg.q_max})")
    return 1 + q // cfg.q_s

def selectable_stage(q: int, cfg: PipelineConfig) -> int:
    """Earliest stage at which query q's corrected word can be output.

    One stage after the query runs, floored at 3: stages 0..1 still hold the
    incoming frame and stage 2 ends the sorter's long combinational path.
    """
    return max(stage_of_query(q, cfg) + 1, 3)


def query_stages(ranks: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Vectorized stage_of_query over decode_batch ranks.

    Returns uint8: 0 for an HD(y) success, 1..T-2 for pattern queries, 255 for
    frames that abandon (or whose rank exceeds this pipe's budget).
    """
    qs = np.full(ranks.shape, 255, dtype=np.uint8)
    hd = ranks == -1
    qs[hd] = 0
    pat = (ranks >= 0) & (ranks < cfg.q_max)
    qs[pat] = (1 + ranks[pat] // cfg.q_s).astype(np.uint8)
    return qs


# ---------------------------------------------------------------------------
# Literal slot-level model


@dataclass
class StageSlot:
    """One pipeline register: present/valid flags plus frame bookkeeping."""

    pnt: bool = False
    vld: bool = False
    frame_id: int = -1
    entry_cycle: int = -1


def select_output(slots: list[StageSlot], cfg: PipelineConfig) -> int | None:
    """Pick the slot to pop this cycle; clears its flags and returns its stage.

    Priority: slot T-1 unconditionally if present; else the oldest (highest
    stage >= 3) valid slot; else the oldest present slot is evicted.  Returns
    None when no slot in [3, T-1] is present.
    """
    t_last = cfg.stages - 1
    chosen = None
    if slots[t_last].pnt:
        chosen = t_last
    else:
        for t in range(t_last, 2, -1):
            if slots[t].vld:
                chosen = t
                break
        if chosen is None:
            for t in range(t_last, 2, -1):
                if slots[t].pnt:
                    chosen = t
                    break
    if chosen is None:
        return None
    slots[chosen].pnt = False
    slots[chosen].vld = False
    return chosen


class SlotPipeline:
    """Reference simulator that moves StageSlot records one stage per cycle.

    Kept deliberately literal (shift, inject, set vld, select) as the
    cross-check for the fast engine.  Frame metadata arrives via feed() as
    (selectable stage, correct flag) pairs, exactly like FastPipeline.
    """

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.slots = [StageSlot() for _ in range(cfg.stages)]
        self.meta: dict[int, tuple[int, bool]] = {}
        self.cycle = 0
        self.filled = False
        self.draining = False
        self.next_frame = 0
        self.outputs: list[tuple[int, int, int]] = []  # (frame, stage, status)

    def _step(self, inject: bool) -> None:
        cfg = self.cfg
        self.cycle += 1
        if self.slots[-1].pnt:
            raise AssertionError("frame about to fall off stage T-1")
        for t in range(cfg.stages - 1, 0, -1):
            self.slots[t] = self.slots[t - 1]
        self.slots[0] = StageSlot()
        if inject:
            self.slots[0] = StageSlot(pnt=True, frame_id=self.next_frame, entry_cycle=self.cycle)
            self.next_frame += 1
        for t, sl in enumerate(self.slots):
            if sl.pnt and t >= self.meta[sl.frame_id][0]:
                sl.vld = True
        if not self.filled:
            self.filled = self.draining or any(
                self.slots[t].pnt for t in range(cfg.t_fill, cfg.stages)
            )
        if not self.filled:
            return
        was = [(sl.pnt, sl.vld, sl.frame_id) for sl in self.slots]
        t_out = select_output(self.slots, cfg)
        if t_out is None:
            return
        _, _, frame = was[t_out]
        s_sel, ok = self.meta.pop(frame)
        if t_out >= s_sel:
            status = CORRECT if ok else WRONG_CODEWORD
        elif t_out == cfg.stages - 1:
            status = ABANDONED
        else:
            status = EVICTED_UNDECODED
        self.slots[t_out] = StageSlot()
        self.outputs.append((frame, t_out, status))

    def feed(self, s_sel: np.ndarray, correct: np.ndarray) -> None:
        for i in range(len(s_sel)):
            self.meta[self.next_frame] = (int(s_sel[i]), bool(correct[i]))
            self._step(inject=True)

    def finish(self) -> list[tuple[int, int, int]]:
        self.draining = True
        self.filled = True
        while any(sl.pnt for sl in self.slots):
            self._step(inject=False)
        return sorted(self.outputs)


# ---------------------------------------------------------------------------
# Fast functional engine


@dataclass
class RunStats:
    """Aggregated outcome of one pipeline run (injection through drain)."""

    frames: int = 0
    cycles: int = 0
    correct: int = 0
    wrong_codeword: int = 0
    evicted_undecoded: int = 0
    abandoned: int = 0
    additional_failures: int = 0  # evictions the reference decoder would have gotten right
    sorter_active: int = 0
    stage_hist: np.ndarray = field(default_factory=lambda: np.zeros(32, dtype=np.int64))
    active_stage_cycles: np.ndarray = field(default_factory=lambda: np.zeros(32, dtype=np.int64))

    @property
    def errors(self) -> int:
        return self.wrong_codeword + self.evicted_undecoded + self.abandoned

    @property
    def bler(self) -> float:
        return self.errors / self.frames if self.frames else 0.0

    @property
    def abandon_rate(self) -> float:
        return self.abandoned / self.frames if self.frames else 0.0

    @property
    def eviction_rate(self) -> float:
        return self.evicted_undecoded / self.frames if self.frames else 0.0

    @property
    def additional_failure_rate(self) -> float:
        return self.additional_failures / self.frames if self.frames else 0.0

    @property
    def avg_output_stage(self) -> float:
        if not self.frames:
            return 0.0
        stages = np.arange(self.stage_hist.size)
        return float((self.stage_hist * stages).sum() / self.frames)

    @property
    def avg_latency_cycles(self) -> float:
        # full-load injection and stall-free advance make latency == stage
        return self.avg_output_stage

    @property
    def p99_latency_cycles(self) -> int:
        if not self.frames:
            return 0
        cum = np.cumsum(self.stage_hist)
        return int(np.searchsorted(cum, 0.99 * self.frames))

    @property
    def sorter_gated_fraction(self) -> float:
        return 1.0 - self.sorter_active / self.frames if self.frames else 0.0


@dataclass
class ActivityStats:
    """Clock-gating view of a run: how often each pipe section did real work."""

    frames: int
    sorter_active: int
    sorter_gated_fraction: float
    active_stage_cycles: list[int]  # query stages 1..T-2


def activity_counters(stats: RunStats, cfg: PipelineConfig) -> ActivityStats:
    return ActivityStats(
        frames=stats.frames,
        sorter_active=stats.sorter_active,
        sorter_gated_fraction=stats.sorter_gated_fraction,
        active_stage_cycles=stats.active_stage_cycles[1 : cfg.stages - 1].tolist(),
    )


class FastPipeline:
    """Age-set pipeline engine, bit-exact with SlotPipeline.

    Present frames are (age, frame, s_sel, correct, qs) entries; ages advance
    uniformly, so the canonical steady state (ages exactly {0..t_fill-1}, all
    entries selectable by stage 3) lets long runs of early-deciding frames be
    accounted in bulk without stepping cycles.
    """

    def __init__(self, cfg: PipelineConfig, record: bool = False):
        self.cfg = cfg
        self.t_fill = cfg.t_fill
        self.t_last = cfg.stages - 1
        self.q_cap = cfg.stages - 2  # highest query stage
        self.present: list[list] = []  # [age, frame, s_sel, correct, qs]
        self.filled = False
        self.draining = False
        self.canonical = False
        self.next_frame = 0
        self.stats = RunStats()
        self.records: list[tuple[int, int, int]] | None = [] if record else None
        self._done = False

    # -- bookkeeping ---------------------------------------------------

    def _pop(self, frame: int, stage: int, s_sel: int, ok: bool, qs: int, line3: bool) -> None:
        st = self.stats
        if stage >= s_sel:
            status = CORRECT if ok else WRONG_CODEWORD
            if ok:
                st.correct += 1
            else:
                st.wrong_codeword += 1
        elif line3:
            status = ABANDONED
            st.abandoned += 1
        else:
            status = EVICTED_UNDECODED
            st.evicted_undecoded += 1
            if ok and s_sel < _NEVER:
                st.additional_failures += 1
        st.frames += 1
        st.stage_hist[stage] += 1
        hi = min(qs, stage, self.q_cap)
        st.active_stage_cycles[1 : hi + 1] += 1
        if qs >= 1:
            st.sorter_active += 1
        if self.records is not None:
            self.records.append((frame, stage, status))

    # -- explicit cycle ------------------------------------------------

    def _step(self, meta: tuple[int, bool, int] | None) -> None:
        # meta = (s_sel, correct, qs) of the injected frame, or None while draining
        present = self.present
        for e in present:
            e[0] += 1
        if meta is not None:
            present.append([0, self.next_frame, meta[0], meta[1], meta[2]])
            self.next_frame += 1
        self.stats.cycles += 1
        if not self.filled:
            self.filled = self.draining or any(e[0] >= self.t_fill for e in present)
        chosen = None
        line3 = False
        if self.filled:
            oldest_valid = None
            oldest_present = None
            for e in present:
                age = e[0]
                if age == self.t_last:
                    chosen = e
                    line3 = True
                    break
                if age >= 3:
                    if oldest_present is None or age > oldest_present[0]:
                        oldest_present = e
                    if age >= e[2] and (oldest_valid is None or age > oldest_valid[0]):
                        oldest_valid = e
            if chosen is None:
                chosen = oldest_valid if oldest_valid is not None else oldest_present
        if chosen is not None:
            present.remove(chosen)
            self._pop(chosen[1], chosen[0], chosen[2], chosen[3], chosen[4], line3)
        self.canonical = (
            self.filled
            and not self.draining
            and len(present) == self.t_fill
            and all(e[2] <= 3 for e in present)
            and max((e[0] for e in present), default=-1) == self.t_fill - 1
        )

    # -- bulk fast-forward over a run of early-deciding frames ----------

    def _bulk(self, s_sel: np.ndarray, ok: np.ndarray, qs: np.ndarray, i: int, j: int) -> None:
        run = j - i
        t_fill = self.t_fill
        st = self.stats
        first = min(run, t_fill)
        # outputs come oldest-first from the canonical pipe contents
        by_age = sorted(self.present, key=lambda e: -e[0])
        for e in by_age[:first]:
            self._pop(e[1], t_fill, e[2], e[3], e[4], line3=(t_fill == self.t_last))
        if run > t_fill:
            sl = slice(i, i + run - t_fill)
            n_out = run - t_fill
            n_ok = int(ok[sl].sum())
            st.frames += n_out
            st.correct += n_ok
            st.wrong_codeword += n_out - n_ok
            st.stage_hist[t_fill] += n_out
            q = qs[sl]
            n1 = int((q >= 1).sum())
            st.sorter_active += n1
            st.active_stage_cycles[1] += n1
            st.active_stage_cycles[2] += int((q == 2).sum())
            if self.records is not None:
                base = self.next_frame
                for off in range(n_out):
                    self.records.append(
                        (base + off, t_fill, CORRECT if ok[i + off] else WRONG_CODEWORD)
                    )
        st.cycles += run
        # rebuild the canonical window: the last t_fill injected frames
        old = {e[1]: e for e in self.present}
        start = self.next_frame
        self.present = []
        for age in range(t_fill):
            f = start + run - 1 - age
            if f >= start:
                p = i + (f - start)
                self.present.append([age, f, int(s_sel[p]), bool(ok[p]), int(qs[p])])
            else:
                e = old[f]
                self.present.append([age, f, e[2], e[3], e[4]])
        self.next_frame += run

    # -- public API ------------------------------------------------------

    def feed(self, qs: np.ndarray, correct: np.ndarray) -> None:
        """Inject frames described by their query stage (255 = abandons) and
        whether the reference estimate matches the transmitted codeword."""
        if self._done:
            raise RuntimeError("pipeline already finished")
        s_sel = np.maximum(qs.astype(np.int64) + 1, 3)
        s_sel[qs == 255] = _NEVER
        hard_at = np.nonzero(qs > 2)[0]
        hp = 0
        i = 0
        nf = len(qs)
        while i < nf:
            if self.canonical:
                while hp < hard_at.size and hard_at[hp] < i:
                    hp += 1
                j = int(hard_at[hp]) if hp < hard_at.size else nf
                if j > i:
                    self._bulk(s_sel, correct, qs, i, j)
                    i = j
                    continue
            self._step((int(s_sel[i]), bool(correct[i]), int(qs[i])))
            i += 1

    def finish(self) -> RunStats:
        if not self._done:
            self.draining = True
            self.filled = True
            self.canonical = False
            while self.present:
                self._step(None)
            self._done = True
            if self.stats.frames != self.next_frame:
                raise AssertionError("conservation violated: outputs != injections")
            if self.records is not None:
                self.records.sort()
        return self.stats


def simulate(code: Code, cfg: PipelineConfig, chan: ChannelConfig, s: Schedule,
             frames: int, record: bool = False, engine: str = "fast"):
    """Run `frames` Monte Carlo frames through the pipelined decoder.

    Returns (RunStats, records) where records is a per-frame list of
    (frame, output stage, status) when record=True, else None.  The reference
    decode of each frame is precomputed (bit-identical outcome, far cheaper
    than emulating every query) and only selection dynamics are stepped.
    """
    if frames < 1:
        raise ValueError("need at least one frame")
    compiled = CompiledSchedule(s, code.n)
    fast = FastPipeline(cfg, record=record) if engine == "fast" else None
    slow = SlotPipeline(cfg) if engine == "slots" else None
    if fast is None and slow is None:
        raise ValueError(f"unknown engine {engine!r}")
    done = 0
    block = 0
    while done < frames:
        out: BlockOutcome = run_channel_block(code, chan, compiled, block, frames - done)
        qs = query_stages(out.ranks, cfg)
        if fast is not None:
            fast.feed(qs, out.correct)
        else:
            s_sel = np.maximum(qs.astype(np.int64) + 1, 3)
            s_sel[qs == 255] = _NEVER
            slow.feed(s_sel, out.correct)
        done += out.frames
        block += 1
    if fast is not None:
        stats = fast.finish()
        return stats, fast.records
    outputs = slow.finish()
    stats = RunStats()
    for _, stage, status in outputs:
        stats.frames += 1
        stats.stage_hist[stage] += 1
        if status == CORRECT:
            stats.correct += 1
        elif status == WRONG_CODEWORD:
            stats.wrong_codeword += 1
        elif status == EVICTED_UNDECODED:
            stats.evicted_undecoded += 1
        else:
            stats.abandoned += 1
    stats.cycles = slow.cycle
    return stats, outputs
