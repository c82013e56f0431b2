"""Counter-based random numbers, vectorized across independent streams.

Philox4x64-10 evaluated on whole arrays of (key, counter) pairs, so every
trajectory of an ensemble owns a stream keyed by its seed while all
trajectories advance together.  Block ``n`` of a stream with key ``k`` is
identical to the ``n``-th block produced by ``numpy.random.Philox(key=k)``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["philox_blocks", "uniforms", "derive_seed"]

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a0, a1 = a & _LO32, a >> _S32
    b0, b1 = b & _LO32, b >> _S32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _LO32) + (p10 & _LO32)
    hi = p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)
    return hi, a * b


def philox_blocks(key0, key1, counter0, counter1=0) -> np.ndarray:
    """Philox4x64-10 output for counters (counter0 + 1, counter1, 0, 0).

    All arguments broadcast; returns an array of shape (..., 4) of uint64.
    The +1 offset matches numpy, which increments before encrypting.
    """
    shape = np.broadcast_shapes(np.shape(key0), np.shape(key1), np.shape(counter0), np.shape(counter1))
    if math.prod(shape) == 1:
        one = _philox_scalar(*(int(np.ravel(a)[0]) for a in (key0, key1, counter0, counter1)))
        return np.array(one, dtype=np.uint64).reshape(shape + (4,))
    with np.errstate(over="ignore"):
        k0, k1, c0, c1 = np.broadcast_arrays(
            np.asarray(key0, dtype=np.uint64),
            np.asarray(key1, dtype=np.uint64),
            np.asarray(counter0, dtype=np.uint64),
            np.asarray(counter1, dtype=np.uint64),
        )
        k0 = k0.copy()
        k1 = k1.copy()
        x0 = c0 + np.uint64(1)
        # carry of the 256-bit counter increment
        x1 = c1 + (x0 == 0).astype(np.uint64)
        x2 = np.zeros_like(x0)
        x3 = np.zeros_like(x0)
        for r in range(10):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, x0)
            hi1, lo1 = _mulhilo(_M1, x2)
            x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
    return np.stack([x0, x1, x2, x3], axis=-1)


_MASK = 2**64 - 1


def _philox_scalar(k0, k1, c0, c1):
    # plain-integer path; much cheaper than array ops for a single block
    x0 = (c0 + 1) & _MASK
    x1 = (c1 + (x0 == 0)) & _MASK
    x2 = x3 = 0
    m0, m1 = int(_M0), int(_M1)
    for r in range(10):
        if r:
            k0 = (k0 + 0x9E3779B97F4A7C15) & _MASK
            k1 = (k1 + 0xBB67AE8584CAA73B) & _MASK
        p0 = m0 * x0
        p1 = m1 * x2
        x0, x1, x2, x3 = (p1 >> 64) ^ x1 ^ k0, p1 & _MASK, (p0 >> 64) ^ x3 ^ k1, p0 & _MASK
    return [x0, x1, x2, x3]


def uniforms(key0, key1, counter0, counter1=0) -> np.ndarray:
    """Four doubles in the open interval (0, 1) per (key, counter)."""
    raw = philox_blocks(key0, key1, counter0, counter1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_seed(master_seed: int, index) -> np.ndarray | int:
    """Seed of the ``index``-th stream of an ensemble (a deterministic hash)."""
    out = philox_blocks(np.uint64(master_seed), np.asarray(index, dtype=np.uint64), np.uint64(2**64 - 2), 2**63)
    seeds = out[..., 0]
    return int(seeds) if np.ndim(index) == 0 else seeds
