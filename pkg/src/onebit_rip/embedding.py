"""Sign-linear embeddings into the Hamming cube and packed bit codes.

A sensing matrix A with Gaussian rows g_1..g_m maps a signal x to the m-bit
sign pattern of A x (with or without an additive noise realization), and the
normalized Hamming distance between two codes counts disagreeing bits over m.
Codes are packed 64 bits per little-endian word with zeroed tail padding so
that distance is XOR plus population count; the counting kernels live in
``_kernels`` and have interchangeable numba/numpy backends.

The quantizer maps zero to -1.  That convention is load-bearing: it makes
embedding a total deterministic function even on adversarial matrices, and
the shattering machinery in :mod:`onebit_rip.vctool` relies on reproducing
it exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import UnitVector
from .stochastics import RngStream, gaussian_vector

_WORD_BITS = 64


@dataclass(frozen=True)
class SensingMatrix:
    """m measurement directions as rows of an (m, n) matrix."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError("rows must be a nonempty 2-d array")
        if not np.all(np.isfinite(rows)):
            raise ValueError("matrix entries must be finite")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def gaussian(cls, stream: RngStream, m: int, n: int) -> "SensingMatrix":
        """iid standard normal entries drawn from ``stream``."""
        if m < 1 or n < 1:
            raise ValueError("m and n must be >= 1")
        return cls(gaussian_vector(stream, m * n).reshape(m, n))


@dataclass(frozen=True)
class NoiseVector:
    """One realized noise draw, shared by every signal embedded under it."""

    values: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("noise entries must be finite")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    @classmethod
    def gaussian(cls, stream: RngStream, m: int, sigma: float) -> "NoiseVector":
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        return cls(gaussian_vector(stream, m) * sigma, sigma=sigma)


class BitCode:
    """A packed m-bit sign pattern (bit 1 means +1, bit 0 means -1).

    Bit k lives at position k % 64 of little-endian word k // 64; pad bits
    past the logical length are zero.  Serialized form is an unsigned 64-bit
    little-endian length prefix followed by the words.
    """

    __slots__ = ("_words", "_length")

    def __init__(self, words: np.ndarray, length: int):
        words = np.asarray(words, dtype=np.uint64)
        if words.ndim != 1:
            raise ValueError("words must be 1-d")
        length = int(length)
        if length < 0 or words.size != _n_words(length):
            raise ValueError(f"word count {words.size} does not match length {length}")
        tail = length % _WORD_BITS
        if tail and words.size and int(words[-1]) >> tail:
            raise ValueError("tail pad bits must be zero")
        words = words.copy()
        words.flags.writeable = False
        self._words = words
        self._length = length

    @property
    def words(self) -> np.ndarray:
        return self._words

    @property
    def length(self) -> int:
        return self._length

    def bit(self, k: int) -> int:
        """Sign at position k: +1 or -1."""
        if not 0 <= k < self._length:
            raise IndexError(k)
        return 1 if (int(self._words[k // _WORD_BITS]) >> (k % _WORD_BITS)) & 1 else -1

    def complement(self) -> "BitCode":
        words = np.bitwise_not(self._words)
        tail = self._length % _WORD_BITS
        if tail and words.size:
            words[-1] &= np.uint64((1 << tail) - 1)
        return BitCode(words, self._length)

    def to_bytes(self) -> bytes:
        return struct.pack("<Q", self._length) + self._words.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitCode":
        if len(data) < 8:
            raise ValueError("truncated code: missing length prefix")
        (length,) = struct.unpack_from("<Q", data)
        nw = _n_words(length)
        if len(data) != 8 + 8 * nw:
            raise ValueError(f"expected {8 + 8 * nw} bytes for length {length}, got {len(data)}")
        words = np.frombuffer(data, dtype="<u8", offset=8).astype(np.uint64)
        return cls(words, length)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitCode):
            return NotImplemented
        return self._length == other._length and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self._length, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BitCode(length={self._length})"


def _n_words(length: int) -> int:
    return (length + _WORD_BITS - 1) // _WORD_BITS


def pack_sign_bits(positive: np.ndarray) -> np.ndarray:
    """Pack boolean sign bits (last axis) into little-endian uint64 words.

    Accepts a (m,) or (batch, m) boolean array; returns the matching
    (n_words,) or (batch, n_words) uint64 array with zero tail padding.
    """
    positive = np.asarray(positive, dtype=bool)
    squeeze = positive.ndim == 1
    if squeeze:
        positive = positive[np.newaxis, :]
    if positive.ndim != 2:
        raise ValueError("expected a 1-d or 2-d boolean array")
    m = positive.shape[1]
    packed = np.packbits(positive, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, [(0, 0), (0, pad)])
    words = np.ascontiguousarray(packed).view("<u8").astype(np.uint64)
    if words.shape[1] != _n_words(m):
        raise AssertionError("packing produced an unexpected word count")
    return words[0] if squeeze else words


def sign_quantize(v: float) -> int:
    """+1 for strictly positive values, -1 otherwise (zero maps to -1)."""
    v = float(v)
    if not np.isfinite(v):
        raise ValueError(f"cannot quantize non-finite value {v}")
    return 1 if v > 0.0 else -1


def _check_signal(A: SensingMatrix, x: UnitVector) -> None:
    if x.dim != A.n:
        raise ValueError(f"signal dimension {x.dim} does not match matrix n={A.n}")


def embed(A: SensingMatrix, x: UnitVector) -> BitCode:
    """Code whose bit k is the sign of <g_k, x>."""
    _check_signal(A, x)
    return BitCode(pack_sign_bits(A.rows @ x.coords > 0.0), A.m)


def embed_noisy(A: SensingMatrix, eta: NoiseVector, x: UnitVector) -> BitCode:
    """Code whose bit k is the sign of <g_k, x> + eta_k."""
    _check_signal(A, x)
    if eta.m != A.m:
        raise ValueError(f"noise length {eta.m} does not match matrix m={A.m}")
    return BitCode(pack_sign_bits(A.rows @ x.coords + eta.values > 0.0), A.m)


def embed_batch(A: SensingMatrix, signals: np.ndarray, eta: NoiseVector | None = None) -> np.ndarray:
    """Embed many signals (rows of ``signals``) against one shared matrix.

    Returns the (batch, n_words) packed-code array.  Each signal is one
    matrix-vector sign pattern, identical to what :func:`embed` /
    :func:`embed_noisy` would produce for it individually.
    """
    signals = np.asarray(signals, dtype=np.float64)
    if signals.ndim != 2 or signals.shape[1] != A.n:
        raise ValueError(f"signals must be (batch, {A.n})")
    vals = signals @ A.rows.T
    if eta is not None:
        if eta.m != A.m:
            raise ValueError(f"noise length {eta.m} does not match matrix m={A.m}")
        vals += eta.values[np.newaxis, :]
    return pack_sign_bits(vals > 0.0)


def augment_matrix(A: SensingMatrix, eta: NoiseVector, sigma: float) -> SensingMatrix:
    """Fold a noise realization into one extra matrix column, eta / sigma.

    Row k becomes (g_k, eta_k / sigma): against noise-lifted signals it
    reproduces the noisy measurements up to the positive factor
    1/sqrt(1 + sigma^2), so sign patterns match embed_noisy bit for bit.
    When A and eta are Gaussian draws the result is again an iid standard
    Gaussian matrix, one column wider.
    """
    if not sigma > 0:
        raise ValueError("sigma must be strictly positive; without noise use embed directly")
    if eta.m != A.m:
        raise ValueError(f"noise length {eta.m} does not match matrix m={A.m}")
    return SensingMatrix(np.hstack([A.rows, (eta.values / sigma)[:, np.newaxis]]))


def hamming(a: BitCode, b: BitCode) -> float:
    """Fraction of disagreeing bits, in {0, 1/m, ..., 1}."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return _kernels.hamming_words(a.words, b.words) / a.length


def hamming_pair_counts(codes: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Raw disagreeing-bit counts for index pairs into a packed-code array."""
    left = np.ascontiguousarray(left, dtype=np.int64)
    right = np.ascontiguousarray(right, dtype=np.int64)
    return _kernels.hamming_pairs(np.ascontiguousarray(codes), left, right)
