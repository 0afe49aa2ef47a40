import math

import numpy as np
import pytest
from scipy.stats import norm

from orbgrand.channel import (
    BLOCK_FRAMES,
    ChannelConfig,
    block_draws,
    block_rng,
    frame_draws,
    hard_decision,
    transmit,
)

RATE = 113 / 127


def test_sigma_values():
    assert ChannelConfig(0.0, 0.5).sigma == pytest.approx(1.0, abs=0)
    assert ChannelConfig(6.0, RATE).sigma == pytest.approx(0.3757055762172816, rel=1e-14)
    assert ChannelConfig(5.0, RATE).sigma == pytest.approx(0.42154858989994276, rel=1e-14)


def test_rate_validation():
    with pytest.raises(ValueError):
        ChannelConfig(6.0, 0.0)
    with pytest.raises(ValueError):
        ChannelConfig(6.0, 1.5)


def test_flip_probability_against_q_function():
    # independent route: Gaussian tail from scipy
    for db in (0.0, 5.0, 6.0, 7.5):
        cfg = ChannelConfig(db, RATE)
        assert cfg.flip_probability == pytest.approx(norm.sf(1.0 / cfg.sigma), rel=1e-12)


def test_block_draws_reproducible_and_independent():
    b0 = block_draws(9, 0, 127, 113)
    b0_again = block_draws(9, 0, 127, 113)
    assert np.array_equal(b0[0], b0_again[0]) and np.array_equal(b0[1], b0_again[1])
    b1 = block_draws(9, 1, 127, 113)
    assert not np.array_equal(b0[1], b1[1])
    other_seed = block_draws(10, 0, 127, 113)
    assert not np.array_equal(b0[1], other_seed[1])
    assert b0[0].shape == (BLOCK_FRAMES, 113) and b0[1].shape == (BLOCK_FRAMES, 127)
    assert set(np.unique(b0[0])) <= {0, 1}


def test_frame_draws_is_block_slice():
    f = BLOCK_FRAMES + 17
    bits, noise = frame_draws(4, f, 127, 113)
    blk_bits, blk_noise = block_draws(4, 1, 127, 113)
    assert np.array_equal(bits, blk_bits[17])
    assert np.array_equal(noise, blk_noise[17])


def test_transmit_llr_formula():
    cfg = ChannelConfig(6.0, RATE, seed=2)
    x = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    z = block_rng(2, 0).standard_normal(5)
    llr = transmit(cfg, x, block_rng(2, 0))
    want = 2.0 * ((1.0 - 2.0 * x) + cfg.sigma * z) / cfg.sigma**2
    assert np.allclose(llr, want, rtol=0, atol=0)


def test_empirical_flip_rate():
    """Hard-decision error rate over >=10^7 bits matches Q(1/sigma) within 4 sigma."""
    n = 127
    blocks = 10  # 10 * 8192 * 127 > 1e7 bits
    for db in (5.0, 6.0):
        cfg = ChannelConfig(db, RATE, seed=6)
        flips = 0
        total = 0
        for b in range(blocks):
            _, noise = block_draws(cfg.seed, b, n, 113)
            # all-zero codeword: symbol +1, flip when 1 + sigma*z < 0
            llr = (1.0 + np.float32(cfg.sigma) * noise) * np.float32(2.0 / cfg.sigma**2)
            flips += int((llr < 0).sum())
            total += llr.size
        p = cfg.flip_probability
        tol = 4.0 * math.sqrt(p * (1 - p) / total)
        assert abs(flips / total - p) < tol, (db, flips / total, p)


def test_hard_decision_convention():
    llr = np.array([-1.5, 0.0, 2.0, -0.1])
    assert np.array_equal(hard_decision(llr), [1, 0, 0, 1])
