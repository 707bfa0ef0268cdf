"""Counter-based, splittable random numbers (Philox4x32-10).

Every draw is a pure function of ``(key, counter)``, so a stream can be
evaluated in any order, in parallel, or partially, and always yields the
same values. Streams are split by deriving child keys with :func:`derive_key`.

Layout used throughout the package:

* A 64-bit seed ``s`` is the key ``(s & 0xFFFFFFFF, s >> 32)``.
* ``derive_key(key, i)`` encrypts the counter ``(i_lo, i_hi, 0, SPLIT_TAG)``
  under ``key`` and keeps the first two output words as the child key.
* Word ``j`` of a stream is word ``j % 4`` of the block at counter
  ``(b_lo, b_hi, 0, 0)`` with ``b = j // 4``.
* Uniform double ``j`` takes words ``2j`` (high half) and ``2j + 1`` (low half)
  as a 64-bit integer and maps its top 53 bits to ``[0, 1)``.
"""
from __future__ import annotations

import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_ROUNDS = 10
_LO = np.uint64(MASK32)
_SHIFT = np.uint64(32)

# Marks key-derivation counters so they never collide with data counters.
SPLIT_TAG = 0x53504C54


def philox4x32(counters, key):
    """Encrypt an ``(n, 4)`` array of 32-bit counters under a 2-word key.

    Returns an ``(n, 4)`` uint32 array.
    """
    ctr = np.asarray(counters, dtype=np.uint64).reshape(-1, 4) & _LO
    c0, c1, c2, c3 = (ctr[:, i].copy() for i in range(4))
    k0, k1 = int(key[0]) & MASK32, int(key[1]) & MASK32
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & MASK32
            k1 = (k1 + _W1) & MASK32
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0, lo0 = p0 >> _SHIFT, p0 & _LO
        hi1, lo1 = p1 >> _SHIFT, p1 & _LO
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def seed_key(seed: int) -> tuple[int, int]:
    """Key for a 64-bit unsigned seed."""
    if not 0 <= int(seed) <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    seed = int(seed)
    return seed & MASK32, seed >> 32


def derive_key(key: tuple[int, int], index: int) -> tuple[int, int]:
    """Child key number ``index`` of ``key``; children are independent streams."""
    index = int(index)
    if not 0 <= index <= MASK64:
        raise ValueError(f"index must be a 64-bit unsigned integer, got {index}")
    block = philox4x32([[index & MASK32, index >> 32, 0, SPLIT_TAG]], key)[0]
    return int(block[0]), int(block[1])


def random_words(key: tuple[int, int], n: int, offset: int = 0) -> np.ndarray:
    """Words ``offset .. offset + n - 1`` of the stream as uint32."""
    if n <= 0:
        return np.zeros(0, dtype=np.uint32)
    first = offset // 4
    last = (offset + n - 1) // 4
    blocks = np.arange(first, last + 1, dtype=np.uint64)
    counters = np.zeros((blocks.size, 4), dtype=np.uint64)
    counters[:, 0] = blocks & _LO
    counters[:, 1] = blocks >> _SHIFT
    words = philox4x32(counters, key).reshape(-1)
    start = offset - 4 * first
    return words[start:start + n]


def uniform(key: tuple[int, int], n: int) -> np.ndarray:
    """``n`` doubles in ``[0, 1)`` with 53 random bits each."""
    w = random_words(key, 2 * n).astype(np.uint64)
    bits = (w[0::2] << _SHIFT) | w[1::2]
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def integers(key: tuple[int, int], n: int, high: int) -> np.ndarray:
    """``n`` integers in ``[0, high)`` as ``floor(u * high)`` of :func:`uniform`."""
    if high < 1:
        raise ValueError("high must be >= 1")
    idx = np.floor(uniform(key, n) * high).astype(np.int64)
    # u < 1 guarantees idx < high except for rounding at huge `high`.
    return np.minimum(idx, high - 1)


def standard_normal(key: tuple[int, int], n: int) -> np.ndarray:
    """``n`` standard normal variates by the Box-Muller transform.

    Pair ``j`` consumes uniforms ``2j`` and ``2j + 1``; the cosine branch gives
    variate ``2j`` and the sine branch variate ``2j + 1``.
    """
    pairs = (n + 1) // 2
    u = uniform(key, 2 * pairs)
    u1 = 1.0 - u[0::2]  # in (0, 1], keeps log finite
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return out[:n]
