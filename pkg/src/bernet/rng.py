"""Counter-based random numbers.

Every random quantity in the package is a pure function of a 64-bit key and
a (column, index) counter pair, so any node of any lattice can be drawn
independently of all others.  The mixing function is the SplitMix64
finalizer; the compiled kernels implement the identical arithmetic, which is
what makes the two backends bit-for-bit interchangeable.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / 9007199254740992.0

# Tags used when deriving sub-keys, so that streams for different purposes
# never collide even when their numeric arguments do.
TAG_REPLICATE = 1
TAG_BATCH = 2
TAG_STAGE = 3
TAG_RESAMPLE = 4
TAG_SCENE = 5
TAG_NOISE = 6
TAG_CURVE = 7


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *path: int) -> int:
    """Derive a sub-key from ``seed`` and a path of nonnegative integers."""
    k = mix64((seed & MASK64) + GAMMA)
    for x in path:
        k = mix64(k ^ mix64(((x & MASK64) + 1) * GAMMA & MASK64))
    return k


def replicate_seeds(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Seeds ``hash(seed, i)`` for replicates ``start .. start+count-1``.

    Vectorized form of ``derive_key(seed, TAG_REPLICATE, i)``.
    """
    with np.errstate(over="ignore"):
        k = np.uint64(derive_key(seed, TAG_REPLICATE))
        i = np.arange(start, start + count, dtype=np.uint64) + np.uint64(1)
        return _mix64_array(k ^ _mix64_array(i * np.uint64(GAMMA)))


def net_key(seed) -> np.ndarray:
    """Stream key of the net generated from ``seed`` (scalar or array)."""
    with np.errstate(over="ignore"):
        return _mix64_array(np.asarray(seed, dtype=np.uint64) + np.uint64(GAMMA))


def replicate_keys(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Net keys of replicates ``start .. start+count-1``."""
    return net_key(replicate_seeds(seed, count, start))


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def column_key(key, col):
    """Per-column key; accepts scalars or broadcastable uint64 arrays."""
    with np.errstate(over="ignore"):
        k = np.asarray(key, dtype=np.uint64)
        c = np.asarray(col, dtype=np.uint64) + np.uint64(1)
        return _mix64_array(k + c * np.uint64(GAMMA))


def uniforms(key, col, idx) -> np.ndarray:
    """Uniform [0, 1) variates for node ``idx`` of column ``col`` under ``key``.

    All three arguments broadcast against each other.
    """
    with np.errstate(over="ignore"):
        ck = column_key(key, col)
        i = np.asarray(idx, dtype=np.uint64) + np.uint64(1)
        z = _mix64_array(ck + i * np.uint64(GAMMA))
    return (z >> np.uint64(11)).astype(np.float64) * INV_2_53


def uniform_scalar(key: int, col: int, idx: int) -> float:
    ck = mix64((key + (col + 1) * GAMMA) & MASK64)
    z = mix64((ck + (idx + 1) * GAMMA) & MASK64)
    return (z >> 11) * INV_2_53


def normals(key, col, idx) -> np.ndarray:
    """Standard normal variates by inversion of two independent uniform streams.

    Box-Muller on the pair (2*idx, 2*idx+1) keeps the counter contract.
    """
    i = np.asarray(idx, dtype=np.uint64)
    u1 = uniforms(key, col, i * np.uint64(2))
    u2 = uniforms(key, col, i * np.uint64(2) + np.uint64(1))
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
