"""BPSK over AWGN with exact LLRs and reproducible counter-based noise.

Monte Carlo draws are organized in fixed-size frame blocks.  Block b of a run
uses an independent Philox stream keyed by (seed, b), and every frame consumes
a fixed slice of the block's draws, so the noise hitting frame f is a pure
function of (seed, f) no matter how frames are batched or farmed out to
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BLOCK_FRAMES",
    "ChannelConfig",
    "block_rng",
    "block_draws",
    "frame_draws",
    "transmit",
    "hard_decision",
]

# Frames per RNG block.  Fixed: changing it would change which draws land on
# which frame and silently break reproducibility of published runs.
BLOCK_FRAMES = 8192


@dataclass(frozen=True)
class ChannelConfig:
    """AWGN channel operating point for a rate-R BPSK transmission."""

    ebn0_db: float
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.rate <= 1.0):
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def sigma(self) -> float:
        """Noise standard deviation: sigma^2 = 1 / (2 * R * 10^(EbN0_dB/10))."""
        return math.sqrt(1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0)))

    @property
    def flip_probability(self) -> float:
        """Raw BPSK hard-decision error rate Q(1/sigma)."""
        return 0.5 * math.erfc(1.0 / (self.sigma * math.sqrt(2.0)))


def block_rng(seed: int, block_index: int) -> np.random.Generator:
    """Counter-based stream for one frame block."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), block_index]))


def block_draws(seed: int, block_index: int, n: int, k: int):
    """Information bits and unit-variance noise for one full block of frames.

    Returns (bits (BLOCK_FRAMES, k) uint8, noise (BLOCK_FRAMES, n) float32).
    Bits are drawn first so that the noise layout does not depend on whether a
    caller consumes the bits.
    """
    rng = block_rng(seed, block_index)
    # bits come from packed bytes: one Philox call for the whole block
    nbytes = (k + 7) // 8
    raw = rng.integers(0, 256, size=(BLOCK_FRAMES, nbytes), dtype=np.uint8)
    bits = np.unpackbits(raw, axis=1)[:, :k]
    noise = rng.standard_normal(size=(BLOCK_FRAMES, n), dtype=np.float32)
    return bits, noise


def frame_draws(seed: int, frame_index: int, n: int, k: int):
    """Draws for a single frame, identical to its slice of the enclosing block."""
    bits, noise = block_draws(seed, frame_index // BLOCK_FRAMES, n, k)
    off = frame_index % BLOCK_FRAMES
    return bits[off], noise[off]


def transmit(cfg: ChannelConfig, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Send codeword bits through the channel; returns per-bit LLRs.

    Bit b maps to symbol s = 1 - 2b, the receiver sees r = s + sigma * z, and
    the exact LLR is 2 r / sigma^2 (positive favors bit 0).
    """
    x = np.asarray(x, dtype=np.uint8)
    z = rng.standard_normal(x.shape[0])
    r = (1.0 - 2.0 * x.astype(np.float64)) + cfg.sigma * z
    return 2.0 * r / (cfg.sigma * cfg.sigma)


def hard_decision(llr: np.ndarray) -> np.ndarray:
    """Sign slicer: llr < 0 -> 1, llr >= 0 -> 0 (an exact zero resolves to 0)."""
    return (np.asarray(llr) < 0).astype(np.uint8)
