"""Guessing-based decoding: test error patterns in schedule order until a codeword.

Two implementations of the same decoder live here.  ``decode`` is the
per-frame reference: sort reliabilities, then walk the schedule applying
patterns to the hard decision until the syndrome clears or the query budget
runs out.  ``decode_batch`` is the production path for Monte Carlo runs; it
exploits the fact that the syndrome of HD(y) xor e is the syndrome of HD(y)
xored with the per-column syndromes of e's flips, so each query is a handful
of integer xors, evaluated vectorized over frames with chunked early exit.
Both must agree query-for-query; tests enforce it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import BLOCK_FRAMES, ChannelConfig, block_draws, hard_decision
from .linear_code import Code, encode_block, syndrome_ints_block
from .schedule import Pattern, Schedule

__all__ = [
    "SUCCESS",
    "ABANDONED",
    "SortResult",
    "DecodeResult",
    "sort_reliability",
    "apply_pattern",
    "decode",
    "CompiledSchedule",
    "BatchResult",
    "decode_batch",
    "BlockOutcome",
    "run_channel_block",
]

SUCCESS = "success"
ABANDONED = "abandoned"

# Wavefront splits of the schedule rank axis: most frames that decode at all
# decode within the first few queries, so later (larger) chunks only ever see
# the stragglers.
CHUNK_BOUNDS = (16, 128, 512, 2048)

_NO_RANK = np.int32(2**31 - 1)


@dataclass
class SortResult:
    """Reliability permutation: order[j] = original index of j-th least reliable bit."""

    order: np.ndarray
    magnitudes: np.ndarray


def sort_reliability(llr: np.ndarray) -> SortResult:
    mags = np.abs(np.asarray(llr))
    order = np.argsort(mags, kind="stable")  # ties keep original index order
    return SortResult(order, mags[order])


def apply_pattern(hd: np.ndarray, order: np.ndarray, v: Pattern) -> np.ndarray:
    """Flip the hard decision at the original positions of sorted-domain indices v."""
    if v and (v[0] < 0 or v[-1] >= order.shape[0]):
        raise ValueError(f"pattern {v} outside the sorted domain of length {order.shape[0]}")
    est = np.array(hd, dtype=np.uint8, copy=True)
    for j in v:
        est[order[j]] ^= 1
    return est


@dataclass
class DecodeResult:
    outcome: str  # SUCCESS or ABANDONED
    estimate: np.ndarray  # codeword on success, HD(y) on abandonment
    queries_used: int  # syndrome checks performed, including the HD(y) check
    success_query_index: int | None  # 0 = HD(y); i >= 1 = i-th schedule pattern


def _masked_patterns(s: Schedule, n: int) -> list[Pattern]:
    return [v for v in s.query_patterns() if not v or v[-1] < n]


def decode(code: Code, llr: np.ndarray, s: Schedule, q_max: int | None = None) -> DecodeResult:
    """Reference decoder for one frame.

    Query 0 is the hard-decision membership test; it counts toward
    queries_used but not against q_max.  Patterns invalid for this code
    length are skipped without consuming budget.
    """
    llr = np.asarray(llr)
    if llr.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got shape {llr.shape}")
    hd = hard_decision(llr)
    weights = np.int64(1) << np.arange(code.n - code.k, dtype=np.int64)
    target = int(((code.parity.astype(np.int64) @ hd.astype(np.int64)) & 1) @ weights)
    if target == 0:
        return DecodeResult(SUCCESS, hd, 1, 0)
    sr = sort_reliability(llr)
    syn_sorted = code.column_syndromes[sr.order].tolist()
    pats = _masked_patterns(s, code.n)
    budget = len(pats) if q_max is None else min(q_max, len(pats))
    for r in range(budget):
        acc = 0
        for j in pats[r]:
            acc ^= syn_sorted[j]
        if acc == target:
            return DecodeResult(SUCCESS, apply_pattern(hd, sr.order, pats[r]), r + 2, r + 1)
    return DecodeResult(ABANDONED, hd, budget + 1, None)


class CompiledSchedule:
    """Schedule preprocessed for one code length: masked, chunked, grouped by hw.

    Each chunk holds, per Hamming weight, an (count, hw) index matrix and the
    matching global ranks, so a chunk evaluates as a few gather-xor passes.
    """

    def __init__(self, s: Schedule, n: int, chunk_bounds=CHUNK_BOUNDS):
        pats = _masked_patterns(s, n)
        self.n = n
        self.patterns = pats
        self.n_queries = len(pats)
        flips = np.zeros((len(pats), n), dtype=np.uint8)
        for r, v in enumerate(pats):
            flips[r, list(v)] = 1
        self.packed = np.packbits(flips, axis=1)  # sorted-domain bitmap per rank
        edges = [0] + [b for b in chunk_bounds if b < len(pats)] + [len(pats)]
        self.chunks = []
        for a, b in zip(edges, edges[1:]):
            groups: dict[int, list[tuple[int, Pattern]]] = {}
            for r in range(a, b):
                groups.setdefault(len(pats[r]), []).append((r, pats[r]))
            glist = []
            for h, items in sorted(groups.items()):
                ranks = np.array([r for r, _ in items], dtype=np.int32)
                idx = np.array([v for _, v in items], dtype=np.intp).reshape(len(items), h)
                glist.append((h, idx, ranks))
            self.chunks.append(glist)


@dataclass
class BatchResult:
    """Per-frame outcomes: rank >= 0 = successful pattern rank, -1 = HD(y) valid,
    -2 = abandoned.  ``correct`` (estimate == transmitted codeword) is filled
    when the transmitted block is supplied."""

    ranks: np.ndarray
    correct: np.ndarray | None


def decode_batch(code: Code, compiled: CompiledSchedule, llr_block: np.ndarray,
                 x_block: np.ndarray | None = None) -> BatchResult:
    """Vectorized equivalent of ``decode`` over a block of frames."""
    llr = np.ascontiguousarray(llr_block, dtype=np.float32)
    nf = llr.shape[0]
    hd = llr < 0
    synd = syndrome_ints_block(code, hd.view(np.uint8))
    ranks = np.full(nf, -2, dtype=np.int32)
    easy = synd == 0
    ranks[easy] = -1
    correct = None
    err = None
    if x_block is not None:
        err = hd != x_block.astype(bool)
        correct = np.zeros(nf, dtype=bool)
        correct[easy] = ~err[easy].any(axis=1)
    hard = np.nonzero(~easy)[0]
    if hard.size == 0:
        return BatchResult(ranks, correct)

    dt = np.int32 if (code.n - code.k) <= 31 else np.int64
    order = np.argsort(np.abs(llr[hard]), axis=1, kind="stable")
    syn_sorted = code.column_syndromes.astype(dt)[order]
    target = synd[hard].astype(dt)

    found = np.full(hard.size, -2, dtype=np.int32)
    alive = np.arange(hard.size)
    for chunk in compiled.chunks:
        if alive.size == 0 or not chunk:
            continue
        widest = max(g[2].size for g in chunk)
        slab = max(1, 4_000_000 // widest)
        survivors = []
        for s0 in range(0, alive.size, slab):
            rows = alive[s0 : s0 + slab]
            ss = syn_sorted[rows]
            tgt = target[rows][:, None]
            best = np.full(rows.size, _NO_RANK, dtype=np.int32)
            for h, idx, rks in chunk:
                acc = ss[:, idx[:, 0]].copy()
                for c in range(1, h):
                    acc ^= ss[:, idx[:, c]]
                m = acc == tgt
                hit_rows = np.nonzero(m.any(axis=1))[0]
                if hit_rows.size:
                    cand = np.where(m[hit_rows], rks[None, :], _NO_RANK).min(axis=1)
                    best[hit_rows] = np.minimum(best[hit_rows], cand.astype(np.int32))
            resolved = best < _NO_RANK
            found[rows[resolved]] = best[resolved]
            survivors.append(rows[~resolved])
        alive = np.concatenate(survivors) if survivors else np.array([], dtype=np.int64)

    ranks[hard] = found
    if x_block is not None:
        hits = np.nonzero(found >= 0)[0]
        if hits.size:
            err_sorted = np.take_along_axis(err[hard[hits]], order[hits], axis=1)
            got = np.packbits(err_sorted, axis=1)
            want = compiled.packed[found[hits]]
            correct[hard[hits]] = (want == got).all(axis=1)
    return BatchResult(ranks, correct)


@dataclass
class BlockOutcome:
    """Decode outcomes for one RNG block of Monte Carlo frames."""

    frames: int
    ranks: np.ndarray  # int32 per decode_batch convention
    correct: np.ndarray  # bool, estimate == transmitted codeword


def run_channel_block(code: Code, chan: ChannelConfig, compiled: CompiledSchedule,
                      block_index: int, frames: int = BLOCK_FRAMES) -> BlockOutcome:
    """Draw, encode, transmit and decode one block of random-data frames."""
    frames = min(frames, BLOCK_FRAMES)
    bits, noise = block_draws(chan.seed, block_index, code.n, code.k)
    x = encode_block(code, bits[:frames])
    inv_var = np.float32(2.0 / (chan.sigma * chan.sigma))
    # llr = ((1 - 2x) + sigma*noise) * inv_var, in place in the noise buffer
    llr = noise[:frames]
    llr *= np.float32(chan.sigma * inv_var)
    llr += inv_var
    mod = x.astype(np.float32)
    mod *= np.float32(2.0) * inv_var
    llr -= mod
    res = decode_batch(code, compiled, llr, x_block=x)
    return BlockOutcome(frames, res.ranks, res.correct)
