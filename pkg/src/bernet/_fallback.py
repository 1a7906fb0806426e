"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` function for function and produce identical
outputs (same counter-based draws, same tie-breaking).  They are vectorized
across replicates where that is cheap, but no attempt is made to match the
compiled speed.
"""
from __future__ import annotations

import math

import numpy as np

from .rng import GAMMA, column_key, uniforms, _mix64_array

BACKEND = "python"

RESAMPLE_SALT = 0xD1B54A32D192ED03


# ---------------------------------------------------------------------------
# Bernoulli nets


def net_states(key: int, n: int, shape, p: float) -> np.ndarray:
    m = int(np.prod(shape))
    cols = np.arange(n, dtype=np.uint64)[:, None]
    idx = np.arange(m, dtype=np.uint64)[None, :]
    return (uniforms(np.uint64(key), cols, idx) < p).astype(np.uint8)


def _box_max(a: np.ndarray, Cs, axis0: int = 0) -> np.ndarray:
    """Max over a box of half-widths ``Cs`` along trailing axes, clipped at edges."""
    out = a
    for ax, c in enumerate(Cs, start=axis0):
        if c == 0:
            continue
        size = out.shape[ax]
        lo_pad = [(0, 0)] * out.ndim
        lo_pad[ax] = (c, c)
        fill = np.iinfo(out.dtype).min if out.dtype.kind in "iu" else False
        padded = np.pad(out, lo_pad, constant_values=fill)
        res = None
        for s in range(2 * c + 1):
            sl = [slice(None)] * out.ndim
            sl[ax] = slice(s, s + size)
            piece = padded[tuple(sl)]
            res = piece.copy() if res is None else np.maximum(res, piece)
        out = res
    return out


def dp_table(states: np.ndarray, shape, Cs) -> np.ndarray:
    """Full table of run lengths ending at each node, shape (n, M)."""
    n = states.shape[0]
    shape = tuple(int(s) for s in shape)
    Y = np.zeros(states.shape, dtype=np.int32)
    Y[0] = states[0]
    for c in range(1, n):
        prev = Y[c - 1].reshape(shape)
        best = _box_max(prev, Cs).reshape(-1)
        Y[c] = np.where(states[c] != 0, best + 1, 0)
    return Y


def longest_run_batch(keys, n: int, shape, Cs, p: float) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    shape = tuple(int(s) for s in shape)
    m = int(np.prod(shape))
    r = keys.size
    out = np.zeros(r, dtype=np.int64)
    chunk = max(1, 2_000_000 // max(m, 1))
    idx = np.arange(m, dtype=np.uint64)[None, :]
    for start in range(0, r, chunk):
        kk = keys[start:start + chunk][:, None]
        Y = None
        best = np.zeros(kk.shape[0], dtype=np.int64)
        for c in range(n):
            st = uniforms(kk, np.uint64(c), idx) < p
            if Y is None:
                Y = st.astype(np.int32)
            else:
                nb = _box_max(Y.reshape((-1,) + shape), Cs, axis0=1).reshape(Y.shape)
                Y = np.where(st, nb + 1, 0).astype(np.int32)
            np.maximum(best, Y.max(axis=1), out=best)
        out[start:start + chunk] = best
    return out


def across_depth_batch(keys, n: int, shape, Cs, p: float) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    shape = tuple(int(s) for s in shape)
    m = int(np.prod(shape))
    r = keys.size
    out = np.zeros(r, dtype=np.int64)
    chunk = max(1, 2_000_000 // max(m, 1))
    idx = np.arange(m, dtype=np.uint64)[None, :]
    for start in range(0, r, chunk):
        kk = keys[start:start + chunk][:, None]
        depth = np.zeros(kk.shape[0], dtype=np.int64)
        reach = None
        for c in range(n):
            st = uniforms(kk, np.uint64(c), idx) < p
            if reach is None:
                reach = st
            else:
                nb = _box_max(reach.reshape((-1,) + shape), Cs, axis0=1).reshape(reach.shape)
                reach = nb & st
            alive = reach.any(axis=1)
            depth += alive
            if not alive.any():
                break
        out[start:start + chunk] = depth
    return out


# ---------------------------------------------------------------------------
# Pseudo-tree frontiers (sparse, vectorized across particles)


def _col_dims(c: int, Cs) -> tuple:
    return tuple(2 * c * ck + 1 for ck in Cs)


def _offsets(Cs) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(2 * ck + 1) for ck in Cs], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def _advance(owner, idx, c, Cs, offs, pkeys, p):
    """Advance sparse frontiers from column ``c`` to ``c+1``.

    ``owner`` gives the particle of each frontier node, ``idx`` its flattened
    index in column ``c``; ``pkeys[owner]`` keys the draws.  Returns the new
    (owner, idx) arrays sorted by owner then index.
    """
    if owner.size == 0:
        return owner, idx
    limit = 4_000_000
    if owner.size * offs.shape[0] > limit and owner[0] != owner[-1]:
        # split at particle boundaries so deduplication stays per particle
        cut = np.searchsorted(owner, owner[owner.size // 2], side="left")
        if cut == 0:
            cut = np.searchsorted(owner, owner[0], side="right")
        a = _advance(owner[:cut], idx[:cut], c, Cs, offs, pkeys, p)
        b = _advance(owner[cut:], idx[cut:], c, Cs, offs, pkeys, p)
        return np.concatenate([a[0], b[0]]), np.concatenate([a[1], b[1]])
    d_old = _col_dims(c, Cs)
    d_new = _col_dims(c + 1, Cs)
    coords = np.stack(np.unravel_index(idx, d_old), axis=1)
    cand = coords[:, None, :] + offs[None, :, :]
    flat = np.ravel_multi_index(tuple(cand.reshape(-1, len(Cs)).T), d_new)
    own = np.repeat(owner, offs.shape[0])
    box = int(np.prod(d_new))
    combo = np.unique(own.astype(np.int64) * box + flat)
    own = combo // box
    flat = combo % box
    u = uniforms(pkeys[own], np.uint64(c + 1), flat.astype(np.uint64))
    keep = u < p
    return own[keep], flat[keep]


def tree_depth_batch(keys, K: int, Cs, p: float) -> np.ndarray:
    """Depth reached from the origin (0 if the origin is closed), capped at K."""
    keys = np.asarray(keys, dtype=np.uint64)
    Cs = tuple(int(c) for c in Cs)
    offs = _offsets(Cs)
    out = np.zeros(keys.size, dtype=np.int64)
    chunk = 1 << 16
    for start in range(0, keys.size, chunk):
        kk = keys[start:start + chunk]
        u0 = uniforms(kk, np.uint64(0), np.uint64(0))
        owner = np.nonzero(u0 < p)[0].astype(np.int64)
        idx = np.zeros(owner.size, dtype=np.int64)
        depth = np.zeros(kk.size, dtype=np.int64)
        depth[owner] = 1
        for c in range(0, K - 1):
            owner, idx = _advance(owner, idx, c, Cs, offs, kk, p)
            if owner.size == 0:
                break
            depth[np.unique(owner)] = c + 2
        out[start:start + chunk] = depth
    return out


def stage_key(batch_key: int, c: int) -> np.uint64:
    with np.errstate(over="ignore"):
        inner = _mix64_array(np.uint64(c + 1) * np.uint64(GAMMA))
        return _mix64_array(np.uint64(batch_key) ^ inner)


def tree_splitting(batch_key: int, K: int, Cs, p: float, R: int) -> np.ndarray:
    """Fixed-effort splitting estimate of theta_1..theta_K for one batch.

    Every particle starts from an open origin; at each column the surviving
    fraction multiplies the running estimate and survivors are resampled
    back to ``R`` particles.
    """
    Cs = tuple(int(c) for c in Cs)
    offs = _offsets(Cs)
    theta = np.zeros(K, dtype=np.float64)
    if p <= 0.0:
        return theta
    theta[0] = p
    owner = np.arange(R, dtype=np.int64)
    idx = np.zeros(R, dtype=np.int64)
    for c in range(0, K - 1):
        sk = stage_key(batch_key, c)
        pkeys = column_key(sk, np.arange(R, dtype=np.uint64))
        owner, idx = _advance(owner, idx, c, Cs, offs, pkeys, p)
        survivors = np.unique(owner)
        ns = survivors.size
        theta[c + 1] = theta[c] * ns / R
        if ns == 0:
            break
        # resample R parents uniformly among survivors
        with np.errstate(over="ignore"):
            rk = _mix64_array(sk ^ np.uint64(RESAMPLE_SALT))
        u = uniforms(rk, np.uint64(0), np.arange(R, dtype=np.uint64))
        pick = np.minimum((u * ns).astype(np.int64), ns - 1)
        parents = survivors[pick]
        starts = np.searchsorted(owner, parents, side="left")
        ends = np.searchsorted(owner, parents, side="right")
        lens = ends - starts
        new_owner = np.repeat(np.arange(R, dtype=np.int64), lens)
        base = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
        gather = np.arange(new_owner.size, dtype=np.int64) + base
        owner, idx = new_owner, idx[gather]
    return theta


# ---------------------------------------------------------------------------
# Multiscale parallelogram counting


def scale_geometry(j: int, J: int, S: int):
    omega = 2.0 ** (-j)
    t = 2.0 ** (-(J - j) + 1)
    d1 = t / 4.0
    d2 = t / (4.0 * omega)
    nk = 1 << j
    nl1 = 1 << (J - j + 1)
    l2h = int(math.floor(S * 2.0 ** (J - 2 * j + 1)))
    return omega, t, d1, d2, nk, nl1, l2h


def region_counts(xs, ys, j: int, J: int, S: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    omega, t, d1, d2, nk, nl1, l2h = scale_geometry(j, J, S)
    counts = np.zeros((nk, nl1, 2 * l2h + 1), dtype=np.int32)
    half_w = omega / 2.0
    half_t = t / 2.0
    l2 = np.arange(-l2h, l2h + 1)
    s = l2 * d2
    for x, y in zip(xs, ys):
        k0 = min(max(int(math.floor(x / omega)), 0), nk - 1)
        for k in (k0 - 1, k0, k0 + 1):
            if k < 0 or k >= nk:
                continue
            cx = (k + 0.5) * omega
            if not abs(x - cx) <= half_w:
                continue
            dx = x - cx
            centre = (y - s * dx) / d1
            lo = np.maximum(np.ceil(centre - 2.0).astype(np.int64) - 1, 0)
            hi = np.minimum(np.floor(centre + 2.0).astype(np.int64) + 1, nl1 - 1)
            for off in range(0, 7):
                l1 = lo + off
                ok = l1 <= hi
                cy = l1 * d1
                inside = ok & (np.abs((y - cy) - s * (x - cx)) <= half_t)
                rows = l1[inside]
                cols = np.nonzero(inside)[0]
                counts[k, rows, cols] += 1
    return counts


def longest_path_labels(labels: np.ndarray, reach: int = 4) -> int:
    """Longest significant path in a (K, L1, L2) label array.

    Edges run (k, a, b) -> (k+1, a + (b - h) + u, b + v) with |u|, |v| <= reach,
    where h is the slope-index offset (L2 = 2h + 1).
    """
    labels = np.asarray(labels, dtype=np.uint8)
    nk, nl1, nl2 = labels.shape
    h = (nl2 - 1) // 2
    Y = labels[0].astype(np.int32)
    best = int(Y.max()) if Y.size else 0
    slopes = np.arange(nl2) - h
    for k in range(1, nk):
        # sheared[a + slope] = Y[a]; indexes a' in [-reach, nl1 + reach)
        span = nl1 + 2 * reach
        sheared = np.zeros((span, nl2), dtype=np.int32)
        for b in range(nl2):
            shift = slopes[b]
            lo = max(0, -reach - shift)
            hi = min(nl1, nl1 + reach - shift)
            if lo < hi:
                sheared[lo + shift + reach:hi + shift + reach, b] = Y[lo:hi, b]
        mx = _box_max(sheared, (reach, reach))
        mx = mx[reach:reach + nl1]
        Y = np.where(labels[k] != 0, mx + 1, 0).astype(np.int32)
        best = max(best, int(Y.max()))
    return best
