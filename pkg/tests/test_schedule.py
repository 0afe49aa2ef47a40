import io
import itertools

import numpy as np
import pytest

from orbgrand.channel import ChannelConfig
from orbgrand.linear_code import get_code
from orbgrand.schedule import (
    LutCalibration,
    Schedule,
    calibrate_lut,
    compose_la_ilwo,
    dump_schedule_csv,
    enumerate_ilwo,
    enumerate_lwo,
    ilw,
    lw,
    read_pattern_file,
    split_hardwired,
    validity_mask,
    write_pattern_file,
)


def brute_order(n, weight):
    """All nonzero index subsets of range(n) sorted by (weight, hamming weight, lex)."""
    subsets = []
    for r in range(1, n + 1):
        subsets.extend(itertools.combinations(range(n), r))
    return sorted(subsets, key=lambda v: (weight(v), len(v), v))


def test_weight_values():
    assert lw(()) == 0 and ilw(()) == 0
    assert lw((0,)) == 1 and ilw((0,)) == 1
    assert lw((4,)) == 5 and ilw((4,)) == 5
    assert lw((0, 1)) == 3 and ilw((0, 1)) == 5
    assert lw((2, 5, 6)) == 16 and ilw((2, 5, 6)) == 3 + 12 + 21


def test_ilw_dominates_lw():
    """ilw >= lw always, equal exactly for the empty and single-index patterns."""
    rng = np.random.default_rng(2)
    for _ in range(500):
        h = int(rng.integers(0, 6))
        v = tuple(sorted(rng.choice(64, size=h, replace=False).tolist()))
        assert ilw(v) >= lw(v)
        assert (ilw(v) == lw(v)) == (len(v) <= 1)


@pytest.mark.parametrize("n", [4, 6, 9, 12])
def test_lwo_matches_brute_force(n):
    want = brute_order(n, lw)
    got = enumerate_lwo(n, len(want)).patterns
    assert list(got) == want


@pytest.mark.parametrize("n", [4, 6, 9, 12])
def test_ilwo_matches_brute_force(n):
    want = brute_order(n, ilw)
    got = enumerate_ilwo(n, len(want)).patterns
    assert list(got) == want


def test_frozen_prefixes():
    assert enumerate_lwo(4, 5).patterns == ((0,), (1,), (2,), (0, 1), (3,))
    assert enumerate_ilwo(8, 6).patterns == ((0,), (1,), (2,), (3,), (4,), (0, 1))


def test_lwo_n16_weight_boundary():
    s = enumerate_lwo(16, 88)
    assert lw(s.patterns[86]) == 13
    assert lw(s.patterns[87]) == 14
    # 88 patterns of lw <= 13 counting the implicit zero pattern
    assert sum(1 for v in s.patterns if lw(v) <= 13) == 87


def test_enumerate_edge_cases():
    assert enumerate_lwo(6, 0).patterns == ()
    full = enumerate_ilwo(4, 10_000)
    assert len(full.patterns) == 15  # every nonzero subset of 4 indices
    with pytest.raises(ValueError):
        enumerate_lwo(6, -1)
    with pytest.raises(ValueError):
        enumerate_lwo(0, 4)


def test_prefix_stability():
    # a longer budget extends, never reorders
    a = enumerate_ilwo(32, 100).patterns
    b = enumerate_ilwo(32, 400).patterns
    assert b[:100] == a


def test_validity_mask_counts():
    s = enumerate_ilwo(128, 8192)
    masked, count = validity_mask(s, 64)
    assert count == 64
    assert masked.invalid_count() == 64
    flags = masked.valid_flags()
    assert flags.sum() == 8192 - 64
    assert len(masked.query_patterns()) == 8192 - 64
    assert all(v[-1] < 64 for v in masked.query_patterns())
    # full-length mask invalidates nothing
    assert validity_mask(s, 128)[1] == 0
    # n=1 leaves only the single-index pattern (0,)
    tiny, bad = validity_mask(enumerate_ilwo(4, 15), 1)
    assert tiny.query_patterns() == [(0,)]
    assert bad == 14
    with pytest.raises(ValueError):
        validity_mask(s, 0)


def test_schedule_budget_guard():
    with pytest.raises(ValueError):
        Schedule("lwo", 8, 2, ((0,), (1,), (2,)))


def _fake_calib(patterns, n=127):
    from collections import Counter

    counts = Counter({v: len(patterns) - i for i, v in enumerate(patterns)})
    return LutCalibration(n, 5.0, 1, 0, counts)


def test_compose_with_empty_lut_is_ilwo():
    calib = _fake_calib([])
    s = compose_la_ilwo(calib, 0, 127, 256)
    assert s.patterns == enumerate_ilwo(127, 256).patterns
    assert not s.programmable


def test_compose_with_ilwo_prefix_is_identity():
    prefix = list(enumerate_ilwo(127, 512).patterns)
    s = compose_la_ilwo(_fake_calib(prefix), 512, 127, 4096)
    assert s.patterns == enumerate_ilwo(127, 4096).patterns
    assert not s.programmable


def test_compose_puts_lut_first_and_dedups():
    lut = [(0, 2, 90), (0,), (5, 9, 33)]  # two exotic patterns, one iLWO-early
    s = compose_la_ilwo(_fake_calib(lut), 3, 127, 64)
    assert s.patterns[:3] == tuple(lut)
    assert len(s.patterns) == 64
    assert len(set(s.patterns)) == 64
    assert s.programmable == {(0, 2, 90), (5, 9, 33)}
    # everything after the LUT is the iLWO order minus duplicates
    rest = [v for v in enumerate_ilwo(127, 64).patterns if v not in set(lut)]
    assert list(s.patterns[3:]) == rest[: 64 - 3]
    with pytest.raises(ValueError):
        compose_la_ilwo(_fake_calib([(200,)]), 1, 127, 64)


def test_split_hardwired():
    exotic = [(i, i + 50, i + 70) for i in range(40)]
    s = compose_la_ilwo(_fake_calib(exotic), 40, 127, 512)
    assert len(s.programmable) == 40
    with pytest.warns(UserWarning):
        trimmed = split_hardwired(s, 32)
    assert len(trimmed.programmable) == 32
    assert len(trimmed.patterns) == len(s.patterns) - 8
    # the dropped ones are the lowest-ranked extras
    assert trimmed.patterns[:32] == tuple(exotic[:32])
    untouched = split_hardwired(s, 64)
    assert untouched is s


def test_calibrate_lut_deterministic():
    code = get_code("bch-127-113")
    cfg = ChannelConfig(5.0, code.rate, seed=3)
    a = calibrate_lut(code, cfg, 16, 3000)
    b = calibrate_lut(code, cfg, 16, 3000)
    assert a.counts == b.counts
    assert a.ranked(16) == b.ranked(16)
    assert () not in a.counts
    assert sum(a.counts.values()) <= 3000
    # ranked is sorted by descending count
    top = a.ranked(16)
    counts = [a.counts[v] for v in top]
    assert counts == sorted(counts, reverse=True)


def test_calibrate_lut_warns_when_sparse():
    code = get_code("hamming-7-4")
    cfg = ChannelConfig(9.0, code.rate, seed=3)
    with pytest.warns(UserWarning):
        calibrate_lut(code, cfg, 5000, 2000)


def test_pattern_file_roundtrip(tmp_path):
    pats = [(0,), (1, 5), (0, 2, 90), ()]
    p = tmp_path / "pats.txt"
    write_pattern_file(str(p), pats, 127, meta={"note": "x"})
    cap, back = read_pattern_file(str(p))
    assert cap == 127 and back == pats
    text = p.read_text()
    assert text.startswith("# note=x\nN=127 count=4\n")


def test_pattern_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("")
    with pytest.raises(ValueError):
        read_pattern_file(str(p))
    p.write_text("N=127\n")
    with pytest.raises(ValueError):
        read_pattern_file(str(p))
    p.write_text("N=127 count=2\n0,1\n")
    with pytest.raises(ValueError):
        read_pattern_file(str(p))
    p.write_text("N=8 count=1\n3,9\n")
    with pytest.raises(ValueError):
        read_pattern_file(str(p))
    p.write_text("N=8 count=1\n5,3\n")  # not ascending
    with pytest.raises(ValueError):
        read_pattern_file(str(p))


def test_dump_schedule_csv():
    s, _ = validity_mask(enumerate_lwo(16, 88), 16)
    buf = io.StringIO()
    dump_schedule_csv(s, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "rank,hw,lw,ilw,hardwired,valid,indices"
    assert lines[1] == "0,0,0,0,1,1,"
    assert len(lines) == 90  # header + zero row + 88 patterns
    last = lines[-1].split(",")
    assert last[0] == "88" and last[2] == "14"
    # masked dump flags exactly the out-of-range patterns
    m, count = validity_mask(enumerate_ilwo(128, 8192), 64)
    buf = io.StringIO()
    dump_schedule_csv(m, buf)
    rows = buf.getvalue().splitlines()[1:]
    invalid_rows = [r for r in rows if r.split(",")[5] == "0"]
    assert len(invalid_rows) == count == 64
