"""Bit-counting kernels behind the packed-code operations.

Two interchangeable backends compute exactly the same integers:

* a numba ``@njit`` backend (default when numba imports cleanly), and
* a pure-numpy fallback.

Set ``ONEBIT_RIP_DISABLE_NUMBA=1`` to force the numpy path.  Because every
kernel here works on integers (XOR + population count), the two backends are
bit-identical; switching them never changes any result, only throughput.
Floating-point work (matrix products, arccos) intentionally stays out of this
module so that backend choice cannot perturb sign patterns.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "ONEBIT_RIP_DISABLE_NUMBA"

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1, _S2, _S4, _S56 = np.uint64(1), np.uint64(2), np.uint64(4), np.uint64(56)


def _env_disabled() -> bool:
    return os.environ.get(_ENV_FLAG, "").strip() not in ("", "0")


# ---------------------------------------------------------------------------
# pure-numpy backend
# ---------------------------------------------------------------------------

def hamming_words_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing bits between two equal-length uint64 word arrays."""
    return int(np.bitwise_count(np.bitwise_xor(a, b)).sum())


def hamming_pairs_numpy(codes: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Differing-bit counts for each (left[i], right[i]) row pair of ``codes``."""
    xor = np.bitwise_xor(codes[left], codes[right])
    return np.bitwise_count(xor).sum(axis=1, dtype=np.int64)


def hamming_one_vs_many_numpy(codes: np.ndarray, rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Differing-bit counts between ``query`` and each listed row of ``codes``."""
    xor = np.bitwise_xor(codes[rows], query[np.newaxis, :])
    return np.bitwise_count(xor).sum(axis=1, dtype=np.int64)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

try:  # pragma: no cover - exercised indirectly via backend dispatch
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover
    njit = None
    _HAS_NUMBA = False


if _HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _popcount_word(v):
        v = v - ((v >> _S1) & _M1)
        v = (v & _M2) + ((v >> _S2) & _M2)
        v = (v + (v >> _S4)) & _M4
        return (v * _H01) >> _S56

    @njit(cache=True, nogil=True)
    def _hamming_words_nb(a, b):
        total = np.uint64(0)
        for i in range(a.shape[0]):
            total += _popcount_word(a[i] ^ b[i])
        return int(total)

    @njit(cache=True, nogil=True)
    def _hamming_pairs_nb(codes, left, right):
        out = np.empty(left.shape[0], dtype=np.int64)
        words = codes.shape[1]
        for k in range(left.shape[0]):
            i = left[k]
            j = right[k]
            total = np.uint64(0)
            for w in range(words):
                total += _popcount_word(codes[i, w] ^ codes[j, w])
            out[k] = total
        return out

    @njit(cache=True, nogil=True)
    def _hamming_one_vs_many_nb(codes, rows, query):
        out = np.empty(rows.shape[0], dtype=np.int64)
        words = codes.shape[1]
        for k in range(rows.shape[0]):
            i = rows[k]
            total = np.uint64(0)
            for w in range(words):
                total += _popcount_word(codes[i, w] ^ query[w])
            out[k] = total
        return out

    def hamming_words_numba(a: np.ndarray, b: np.ndarray) -> int:
        return _hamming_words_nb(a, b)

    def hamming_pairs_numba(codes: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return _hamming_pairs_nb(codes, left, right)

    def hamming_one_vs_many_numba(codes: np.ndarray, rows: np.ndarray, query: np.ndarray) -> np.ndarray:
        return _hamming_one_vs_many_nb(codes, rows, query)


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------

NUMBA_ENABLED = _HAS_NUMBA and not _env_disabled()

if NUMBA_ENABLED:
    hamming_words = hamming_words_numba
    hamming_pairs = hamming_pairs_numba
    hamming_one_vs_many = hamming_one_vs_many_numba
else:
    hamming_words = hamming_words_numpy
    hamming_pairs = hamming_pairs_numpy
    hamming_one_vs_many = hamming_one_vs_many_numpy


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return "numba" if NUMBA_ENABLED else "numpy"
