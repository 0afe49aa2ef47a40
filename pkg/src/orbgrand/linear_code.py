"""Binary linear block codes for guessing-based decoding.

Codes are kept in systematic-style matrix form over GF(2): a generator
matrix ``G`` (k x n) and a parity-check matrix ``H`` ((n-k) x n) with
``G @ H.T == 0 (mod 2)``.  Cyclic codes (BCH, Hamming) are built from their
generator polynomial via polynomial long division; arbitrary codes can be
loaded from a plain-text parity-check file.  Bit vectors are numpy uint8
arrays; polynomials are packed into Python ints (bit i = coefficient of x^i).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Gf2Poly",
    "Code",
    "bch_construct",
    "encode",
    "syndrome",
    "is_codeword",
    "load_code",
    "get_code",
    "BUILTIN_CODES",
    "MIN_DISTANCE_LB",
]


@dataclass(frozen=True)
class Gf2Poly:
    """Polynomial over GF(2), coefficients packed into an int.

    Bit i of ``value`` is the coefficient of x^i, so the hex literal 0x7761
    has its most significant bit on the highest-degree term.
    """

    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("GF(2) polynomial cannot have negative bits")

    @classmethod
    def from_hex(cls, text: str) -> "Gf2Poly":
        return cls(int(text, 16))

    @property
    def degree(self) -> int:
        # zero polynomial reported as degree -1
        return self.value.bit_length() - 1

    def __bool__(self) -> bool:
        return self.value != 0

    def mul(self, other: "Gf2Poly") -> "Gf2Poly":
        a, b, acc = self.value, other.value, 0
        while b:
            if b & 1:
                acc ^= a
            a <<= 1
            b >>= 1
        return Gf2Poly(acc)

    def mod(self, modulus: "Gf2Poly") -> "Gf2Poly":
        if not modulus:
            raise ZeroDivisionError("polynomial modulus is zero")
        a, dm = self.value, modulus.degree
        while a.bit_length() - 1 >= dm and a:
            a ^= modulus.value << (a.bit_length() - 1 - dm)
        return Gf2Poly(a)

    def divides(self, other: "Gf2Poly") -> bool:
        return not other.mod(self).value


@dataclass
class Code:
    """Immutable-by-convention container for one binary linear code."""

    name: str
    n: int
    k: int
    generator: np.ndarray  # (k, n) uint8
    parity: np.ndarray  # (n-k, n) uint8
    info_positions: np.ndarray  # (k,) column indices carrying information bits

    def __post_init__(self):
        self.generator = np.ascontiguousarray(self.generator, dtype=np.uint8)
        self.parity = np.ascontiguousarray(self.parity, dtype=np.uint8)
        self.info_positions = np.asarray(self.info_positions, dtype=np.int64)
        if self.generator.shape != (self.k, self.n):
            raise ValueError("generator shape does not match (k, n)")
        if self.parity.shape != (self.n - self.k, self.n):
            raise ValueError("parity shape does not match (n-k, n)")
        if ((self.generator @ self.parity.T) & 1).any():
            raise ValueError("G @ H.T != 0: matrices are inconsistent")
        for a in (self.generator, self.parity):
            a.flags.writeable = False

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def column_syndromes(self) -> np.ndarray:
        """Syndrome of each single-bit flip, packed into int64 (needs n-k <= 63)."""
        m = self.n - self.k
        if m > 63:
            raise ValueError("packed syndromes support at most 63 parity bits")
        weights = (np.int64(1) << np.arange(m, dtype=np.int64))
        return (self.parity.astype(np.int64).T @ weights).astype(np.int64)

    @cached_property
    def parity_checksum(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.n} {self.k}\n".encode())
        h.update(np.packbits(self.parity, axis=None).tobytes())
        return h.hexdigest()

    # float32 copies feed BLAS matmuls on frame blocks; bit sums stay < 2^24
    # so float32 accumulation is exact.
    @cached_property
    def generator_f32(self) -> np.ndarray:
        return self.generator.astype(np.float32)

    @cached_property
    def parity_t_f32(self) -> np.ndarray:
        return np.ascontiguousarray(self.parity.T.astype(np.float32))

    @cached_property
    def systematic(self) -> bool:
        """True when G = [I_k | P], letting encoders copy the message through."""
        return bool((self.generator[:, : self.k] == np.eye(self.k, dtype=np.uint8)).all())

    @cached_property
    def p_cols_f32(self) -> np.ndarray:
        return np.ascontiguousarray(self.generator[:, self.k :].astype(np.float32))


def bch_construct(n: int, gen_poly: Gf2Poly, field_poly: Gf2Poly, name: str = "") -> Code:
    """Build a systematic cyclic code from its generator polynomial.

    ``field_poly`` fixes the field size: n must equal 2^deg(field_poly) - 1.
    ``gen_poly`` must divide x^n + 1.  Information bits occupy the first k
    positions (coefficients x^{n-1}..x^{n-k}); parity occupies the rest, i.e.
    G = [I_k | P] and H = [P^T | I_{n-k}].
    """
    m = field_poly.degree
    if m < 2 or n != (1 << m) - 1:
        raise ValueError(f"n={n} does not match 2^{m} - 1 for the given field polynomial")
    r = gen_poly.degree
    if r < 1 or r >= n:
        raise ValueError("generator polynomial degree out of range")
    xn1 = Gf2Poly((1 << n) | 1)
    if not gen_poly.divides(xn1):
        raise ValueError(f"generator polynomial {gen_poly.value:#x} does not divide x^{n} + 1")
    k = n - r
    p = np.zeros((k, r), dtype=np.uint8)
    for i in range(k):
        # systematic row i: x^{n-1-i} + (x^{n-1-i} mod g); remainder -> parity bits
        rem = Gf2Poly(1 << (n - 1 - i)).mod(gen_poly).value
        for j in range(r):
            p[i, j] = (rem >> (r - 1 - j)) & 1
    g_mat = np.concatenate([np.eye(k, dtype=np.uint8), p], axis=1)
    h_mat = np.concatenate([p.T, np.eye(r, dtype=np.uint8)], axis=1)
    return Code(
        name=name or f"cyclic-{n}-{k}",
        n=n,
        k=k,
        generator=g_mat,
        parity=h_mat,
        info_positions=np.arange(k),
    )


def encode(code: Code, u: np.ndarray) -> np.ndarray:
    """Map k information bits to the n-bit codeword u @ G mod 2."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (code.k,):
        raise ValueError(f"expected {code.k} information bits, got shape {u.shape}")
    return ((u.astype(np.int64) @ code.generator.astype(np.int64)) & 1).astype(np.uint8)


def syndrome(code: Code, v: np.ndarray) -> np.ndarray:
    """H @ v mod 2; the all-zero syndrome marks a codeword."""
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (code.n,):
        raise ValueError(f"expected {code.n} bits, got shape {v.shape}")
    return ((code.parity.astype(np.int64) @ v.astype(np.int64)) & 1).astype(np.uint8)


def is_codeword(code: Code, v: np.ndarray) -> bool:
    return not syndrome(code, v).any()


def encode_block(code: Code, u_block: np.ndarray) -> np.ndarray:
    """Encode a (frames, k) block of information bits in one matmul.

    Systematic codes skip the identity part of G: the message is copied and
    only the n-k parity columns are multiplied out.
    """
    if code.systematic:
        par = (u_block.astype(np.float32) @ code.p_cols_f32).astype(np.int32)
        out = np.empty((u_block.shape[0], code.n), dtype=np.uint8)
        out[:, : code.k] = u_block
        out[:, code.k :] = par & 1
        return out
    x = u_block.astype(np.float32) @ code.generator_f32
    return (x.astype(np.int32) & 1).astype(np.uint8)


def syndrome_ints_block(code: Code, v_block: np.ndarray) -> np.ndarray:
    """Per-frame syndromes of a (frames, n) bit block, packed into int64.

    Bit j of the result is parity row j's check; zero means codeword.
    """
    m = code.n - code.k
    if m > 63:
        raise ValueError("packed syndromes support at most 63 parity bits")
    bits = (v_block.astype(np.float32) @ code.parity_t_f32).astype(np.int64) & 1
    weights = np.int64(1) << np.arange(m, dtype=np.int64)
    return bits @ weights


def _rref_gf2(h: np.ndarray):
    """Reduced row echelon form over GF(2); returns (rref, pivot columns)."""
    h = h.copy()
    rows, cols = h.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(h[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            h[[r, p]] = h[[p, r]]
        for q in np.nonzero(h[:, c])[0]:
            if q != r:
                h[q] ^= h[r]
        pivots.append(c)
        r += 1
    return h, pivots


def load_code(path: str, name: str = "") -> Code:
    """Load a code from a parity-check file: first line "n k", then n-k rows of 0/1.

    G is derived from H by GF(2) elimination.  If the parity positions are not
    the trailing columns the information positions are recorded in
    ``info_positions`` (the column permutation implied by the pivots).
    """
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty parity-check file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'n k'")
    n, k = int(head[0]), int(head[1])
    if not (0 < k < n):
        raise ValueError(f"{path}: need 0 < k < n, got n={n} k={k}")
    if len(lines) - 1 != n - k:
        raise ValueError(f"{path}: expected {n - k} parity rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        bits = ln.split()
        if len(bits) != n or any(b not in ("0", "1") for b in bits):
            raise ValueError(f"{path}: each row needs {n} entries of 0/1")
        rows.append([int(b) for b in bits])
    h = np.array(rows, dtype=np.uint8)
    rref, pivots = _rref_gf2(h)
    if len(pivots) != n - k:
        raise ValueError(f"{path}: parity rows are linearly dependent (rank {len(pivots)})")
    free = np.setdiff1d(np.arange(n), pivots)
    g = np.zeros((k, n), dtype=np.uint8)
    for i, fcol in enumerate(free):
        g[i, fcol] = 1
        for r, pcol in enumerate(pivots):
            g[i, pcol] = rref[r, fcol]
    return Code(
        name=name or f"file-{n}-{k}",
        n=n,
        k=k,
        generator=g,
        parity=h,
        info_positions=free,
    )


# Built-in constructions: (n, generator polynomial, field polynomial).
BUILTIN_CODES = {
    "bch-127-113": (127, Gf2Poly(0x7761), Gf2Poly(0x91)),
    "hamming-7-4": (7, Gf2Poly(0xB), Gf2Poly(0xB)),
}

# Designed-distance lower bounds (2t+1 for the BCH construction).
MIN_DISTANCE_LB = {
    "bch-127-113": 5,
    "hamming-7-4": 3,
}


def get_code(spec: str) -> Code:
    """Resolve a code name from the registry, or treat it as an H-matrix path."""
    if spec in BUILTIN_CODES:
        n, g, f = BUILTIN_CODES[spec]
        return bch_construct(n, g, f, name=spec)
    return load_code(spec)
