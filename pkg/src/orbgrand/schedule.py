"""Error-pattern schedules for ordered-reliability guessing decoders.

A pattern is a strictly ascending tuple of indices into the sorted-reliability
domain (position 0 = least reliable bit).  Schedules enumerate patterns in
ascending logistic weight (LW) or improved logistic weight (iLW), with ties
broken by Hamming weight and then lexicographic order; the zero pattern is
conceptually first in every schedule but is realized as the decoder's
hard-decision check rather than stored as a query pattern, so ``q_max``
budgets count nonzero patterns only.

Enumeration never sorts the 2^N pattern space.  Nonzero patterns of LW w are
partitions of w into distinct parts (each part = index + 1), and iLW classes
are the analogous coefficient-weighted partitions, so both orders are produced
weight class by weight class with a pruned depth-first search.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator

import numpy as np

from .channel import BLOCK_FRAMES, ChannelConfig, block_draws
from .linear_code import Code, encode_block

__all__ = [
    "Pattern",
    "lw",
    "ilw",
    "Schedule",
    "enumerate_lwo",
    "enumerate_ilwo",
    "validity_mask",
    "LutCalibration",
    "calibrate_lut",
    "compose_la_ilwo",
    "split_hardwired",
    "write_pattern_file",
    "read_pattern_file",
    "dump_schedule_csv",
]

Pattern = tuple[int, ...]


def lw(v: Pattern) -> int:
    """Logistic weight: sum of (index + 1) over the pattern."""
    return sum(i + 1 for i in v)


def ilw(v: Pattern) -> int:
    """Improved logistic weight: sum of (rank + 1) * (index + 1), ranks ascending."""
    return sum((r + 1) * (i + 1) for r, i in enumerate(v))


def _validate_pattern(v: Pattern) -> None:
    if any(b <= a for a, b in zip(v, v[1:])) or (v and v[0] < 0):
        raise ValueError(f"pattern indices must be strictly ascending and nonnegative: {v}")


def _lw_class(w: int, n: int) -> list[Pattern]:
    """All patterns with lw == w and indices < n, in (hw, lex) order."""
    out: list[Pattern] = []

    def rec(rem: int, part: int, acc: list[int]) -> None:
        if rem == 0:
            out.append(tuple(acc))
            return
        while part <= rem and part <= n:
            # after taking `part`, the leftover must fit a strictly larger part
            if rem - part == 0 or rem - part >= part + 1:
                acc.append(part - 1)
                rec(rem - part, part + 1, acc)
                acc.pop()
            part += 1

    rec(w, 1, [])
    out.sort(key=lambda v: (len(v), v))
    return out


def _ilw_class(w: int, n: int) -> list[Pattern]:
    """All patterns with ilw == w and indices < n, in (hw, lex) order."""
    out: list[Pattern] = []

    def min_tail(i: int, h: int, base: int) -> int:
        # cheapest completion: u_j = base + (j - i) for j = i..h
        return sum(j * (base + j - i) for j in range(i, h + 1))

    def rec(i: int, h: int, base: int, rem: int, acc: list[int]) -> None:
        if i > h:
            if rem == 0:
                out.append(tuple(u - 1 for u in acc))
            return
        u = base
        while u <= n and min_tail(i, h, u) <= rem:
            acc.append(u)
            rec(i + 1, h, u + 1, rem - i * u, acc)
            acc.pop()
            u += 1

    h = 1
    while h * (h + 1) * (2 * h + 1) // 6 <= w:  # min ilw of h parts is sum of squares
        rec(1, h, 1, w, [])
        h += 1
    out.sort(key=lambda v: (len(v), v))
    return out


def _iter_weight_order(n: int, classes) -> Iterator[Pattern]:
    max_w = n * (n + 1) * (2 * n + 1) // 6  # full pattern has the largest weight
    w = 1
    while w <= max_w:
        yield from classes(w, n)
        w += 1


@lru_cache(maxsize=16)
def _prefix(kind: str, capacity: int, q: int) -> tuple[Pattern, ...]:
    classes = _lw_class if kind == "lwo" else _ilw_class
    out: list[Pattern] = []
    for v in _iter_weight_order(capacity, classes):
        if len(out) == q:
            break
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class Schedule:
    """An ordered list of nonzero query patterns plus the implicit zero pattern.

    ``patterns[i]`` is query index i; the hard-decision check (zero pattern)
    precedes it as query index -1 in stage terms and is not stored.
    ``programmable`` tags patterns sourced from an empirical LUT that fall
    outside the plain iLWO prefix (they would occupy programmable hardware
    slots); everything else is considered hardwired.  ``masked_n`` records a
    code-length mask: patterns touching an index >= masked_n are invalid and
    are skipped by decoders without consuming query budget.
    """

    kind: str
    capacity: int
    q_max: int
    patterns: tuple[Pattern, ...]
    programmable: frozenset = frozenset()
    masked_n: int | None = None

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        if len(self.patterns) > self.q_max:
            raise ValueError("schedule longer than its q_max budget")

    def valid_flags(self) -> np.ndarray:
        if self.masked_n is None:
            return np.ones(len(self.patterns), dtype=bool)
        m = self.masked_n
        return np.array([not v or v[-1] < m for v in self.patterns], dtype=bool)

    def invalid_count(self) -> int:
        return int((~self.valid_flags()).sum())

    def query_patterns(self) -> list[Pattern]:
        """Valid nonzero patterns in schedule order (what a decoder queries)."""
        if self.masked_n is None:
            return list(self.patterns)
        m = self.masked_n
        return [v for v in self.patterns if not v or v[-1] < m]

    def full_sequence(self) -> list[Pattern]:
        """The conceptual schedule including the leading zero pattern."""
        return [()] + list(self.patterns)


def enumerate_lwo(capacity: int, q_max: int) -> Schedule:
    """First q_max nonzero patterns in logistic-weight order."""
    if q_max < 0:
        raise ValueError("q_max must be nonnegative")
    return Schedule("lwo", capacity, q_max, _prefix("lwo", capacity, q_max))


def enumerate_ilwo(capacity: int, q_max: int) -> Schedule:
    """First q_max nonzero patterns in improved-logistic-weight order."""
    if q_max < 0:
        raise ValueError("q_max must be nonnegative")
    return Schedule("ilwo", capacity, q_max, _prefix("ilwo", capacity, q_max))


def validity_mask(s: Schedule, n: int) -> tuple[Schedule, int]:
    """Mark patterns touching an index >= n invalid; returns (masked, count)."""
    if n < 1:
        raise ValueError("mask length must be positive")
    masked = replace(s, masked_n=n)
    return masked, masked.invalid_count()


# ---------------------------------------------------------------------------
# Empirical pattern LUT


@dataclass
class LutCalibration:
    """Frequency table of true sorted-domain error patterns at one channel point."""

    code_n: int
    ebn0_db: float
    seed: int
    frames: int
    counts: Counter  # insertion order = first-seen order, used for tie-breaks

    def ranked(self, q: int) -> list[Pattern]:
        """Top q patterns by descending frequency, first-seen order on ties."""
        first_seen = {v: i for i, v in enumerate(self.counts)}
        ordered = sorted(self.counts, key=lambda v: (-self.counts[v], first_seen[v]))
        return ordered[:q]


def calibrate_lut(code: Code, cfg: ChannelConfig, q_lut: int, frames: int) -> LutCalibration:
    """Observe `frames` transmissions and tally nonzero sorted-domain error patterns.

    The pattern of a frame is the set of sorted-domain positions where the
    hard decision differs from the transmitted codeword; the zero pattern
    (error-free frames) is excluded.
    """
    if q_lut < 0:
        raise ValueError("q_lut must be nonnegative")
    if frames < 1:
        raise ValueError("calibration needs at least one frame")
    counts: Counter = Counter()
    inv_var = 2.0 / (cfg.sigma * cfg.sigma)
    done = 0
    block = 0
    while done < frames:
        bits, noise = block_draws(cfg.seed, block, code.n, code.k)
        take = min(BLOCK_FRAMES, frames - done)
        x = encode_block(code, bits[:take])
        llr = ((1.0 - 2.0 * x.astype(np.float32)) + np.float32(cfg.sigma) * noise[:take]) * np.float32(inv_var)
        hd = llr < 0
        err = hd != x.astype(bool)
        rows = np.nonzero(err.any(axis=1))[0]
        if rows.size:
            order = np.argsort(np.abs(llr[rows]), axis=1, kind="stable")
            err_sorted = np.take_along_axis(err[rows], order, axis=1)
            for row in err_sorted:
                counts[tuple(np.nonzero(row)[0].tolist())] += 1
        done += take
        block += 1
    if len(counts) < q_lut:
        warnings.warn(
            f"calibration saw only {len(counts)} distinct patterns for a {q_lut}-entry LUT",
            stacklevel=2,
        )
    return LutCalibration(code.n, cfg.ebn0_db, cfg.seed, frames, counts)


def compose_la_ilwo(calib: LutCalibration, q_lut: int, capacity: int, q_max: int) -> Schedule:
    """LUT-aided iLWO: top-q_lut observed patterns first, then iLWO minus duplicates."""
    top = calib.ranked(q_lut)
    for v in top:
        _validate_pattern(v)
        if v and v[-1] >= capacity:
            raise ValueError(f"calibrated pattern {v} exceeds capacity {capacity}")
    ilwo_prefix = _prefix("ilwo", capacity, q_max)
    prefix_set = set(ilwo_prefix)
    top_set = set(top)
    out = list(top)
    for v in ilwo_prefix:
        if len(out) == q_max:
            break
        if v not in top_set:
            out.append(v)
    programmable = frozenset(v for v in top if v not in prefix_set)
    return Schedule("la-ilwo", capacity, q_max, tuple(out), programmable=programmable)


def split_hardwired(s: Schedule, programmable_slots: int = 32) -> Schedule:
    """Enforce the hardware split: at most `programmable_slots` non-iLWO patterns.

    Patterns already inside the first-q_max iLWO sequence are hardwired and
    always kept; excess programmable patterns are dropped (lowest LUT rank
    first, i.e. latest in schedule order) with a warning.
    """
    if programmable_slots < 0:
        raise ValueError("programmable_slots must be nonnegative")
    extras = [v for v in s.patterns if v in s.programmable]
    if len(extras) <= programmable_slots:
        return s
    dropped = extras[programmable_slots:]
    warnings.warn(
        f"dropping {len(dropped)} calibrated patterns beyond {programmable_slots} programmable slots",
        stacklevel=2,
    )
    drop_set = set(dropped)
    kept = tuple(v for v in s.patterns if v not in drop_set)
    return replace(s, patterns=kept, programmable=frozenset(set(extras[:programmable_slots])))


# ---------------------------------------------------------------------------
# Plain-text pattern files and CSV schedule dumps


def write_pattern_file(path: str, patterns: list[Pattern], capacity: int, meta: dict | None = None) -> None:
    """One pattern per line as comma-separated indices; empty line = zero pattern."""
    with open(path, "w") as f:
        for key, val in (meta or {}).items():
            f.write(f"# {key}={val}\n")
        f.write(f"N={capacity} count={len(patterns)}\n")
        for v in patterns:
            f.write(",".join(str(i) for i in v) + "\n")


def read_pattern_file(path: str) -> tuple[int, list[Pattern]]:
    with open(path) as f:
        lines = f.read().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body:
        raise ValueError(f"{path}: missing header line")
    head = body[0].split()
    try:
        capacity = int(head[0].removeprefix("N="))
        count = int(head[1].removeprefix("count="))
    except (IndexError, ValueError) as e:
        raise ValueError(f"{path}: header must be 'N=<int> count=<int>'") from e
    if len(body) - 1 < count:
        raise ValueError(f"{path}: expected {count} patterns, found {len(body) - 1}")
    out: list[Pattern] = []
    for ln in body[1 : 1 + count]:
        v = tuple(int(t) for t in ln.split(",")) if ln.strip() else ()
        _validate_pattern(v)
        if v and v[-1] >= capacity:
            raise ValueError(f"{path}: pattern {v} exceeds N={capacity}")
        out.append(v)
    return capacity, out


def dump_schedule_csv(s: Schedule, fileobj) -> None:
    """Rows (rank, hw, lw, ilw, hardwired, valid, indices); rank 0 is the zero pattern."""
    flags = s.valid_flags()
    fileobj.write("rank,hw,lw,ilw,hardwired,valid,indices\n")
    fileobj.write("0,0,0,0,1,1,\n")
    for i, v in enumerate(s.patterns):
        hard = 0 if v in s.programmable else 1
        fileobj.write(
            f"{i + 1},{len(v)},{lw(v)},{ilw(v)},{hard},{int(flags[i])},{' '.join(map(str, v))}\n"
        )
