# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Same signatures and outputs as ``bernet._fallback``.  All loops run without
the GIL so callers can fan replicate chunks out over a thread pool.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t, uint16_t
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset, memcpy
from libc.math cimport floor, ceil, fabs

cnp.import_array()

BACKEND = "cython"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t bn_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline uint64_t bn_colkey(uint64_t key, uint64_t col) {
        return bn_mix64(key + (col + 1ULL) * 0x9E3779B97F4A7C15ULL);
    }
    static inline double bn_unif(uint64_t ck, uint64_t idx) {
        return (double)(bn_mix64(ck + (idx + 1ULL) * 0x9E3779B97F4A7C15ULL) >> 11)
               * (1.0 / 9007199254740992.0);
    }
    static inline uint64_t bn_stagekey(uint64_t batch, uint64_t c) {
        return bn_mix64(batch ^ bn_mix64((c + 1ULL) * 0x9E3779B97F4A7C15ULL));
    }
    static const uint64_t BN_RESAMPLE_SALT = 0xD1B54A32D192ED03ULL;
    """
    uint64_t bn_mix64(uint64_t z) nogil
    uint64_t bn_colkey(uint64_t key, uint64_t col) nogil
    double bn_unif(uint64_t ck, uint64_t idx) nogil
    uint64_t bn_stagekey(uint64_t batch, uint64_t c) nogil
    uint64_t BN_RESAMPLE_SALT


# ---------------------------------------------------------------------------
# Bernoulli nets

cdef void box_max_i32(int32_t* a, int32_t* tmp, int64_t* dims, int64_t* Cs,
                      int nd, int64_t m) noexcept nogil:
    """In-place max over a clipped box; separable passes, one per axis."""
    cdef int ax
    cdef int64_t stride, size, outer, o, i, s, base, lo, hi, c
    cdef int32_t best
    stride = m
    for ax in range(nd):
        size = dims[ax]
        stride = stride // size
        c = Cs[ax]
        if c == 0 or size == 1:
            continue
        memcpy(tmp, a, m * sizeof(int32_t))
        outer = m // (size * stride)
        for o in range(outer):
            for s in range(stride):
                base = o * size * stride + s
                for i in range(size):
                    lo = i - c
                    if lo < 0:
                        lo = 0
                    hi = i + c
                    if hi > size - 1:
                        hi = size - 1
                    best = tmp[base + lo * stride]
                    lo += 1
                    while lo <= hi:
                        if tmp[base + lo * stride] > best:
                            best = tmp[base + lo * stride]
                        lo += 1
                    a[base + i * stride] = best


def net_states(uint64_t key, int64_t n, shape, double p):
    cdef int64_t m = int(np.prod(shape))
    out = np.empty((n, m), dtype=np.uint8)
    cdef uint8_t[:, ::1] o = out
    cdef int64_t c, i
    cdef uint64_t ck
    with nogil:
        for c in range(n):
            ck = bn_colkey(key, <uint64_t>c)
            for i in range(m):
                o[c, i] = 1 if bn_unif(ck, <uint64_t>i) < p else 0
    return out


def dp_table(states, shape, Cs):
    cdef uint8_t[:, ::1] st = np.ascontiguousarray(states, dtype=np.uint8)
    cdef int64_t n = st.shape[0]
    cdef int64_t m = st.shape[1]
    cdef int nd = len(shape)
    cdef int64_t[::1] dims = np.asarray(shape, dtype=np.int64)
    cdef int64_t[::1] cs = np.asarray(Cs, dtype=np.int64)
    Y = np.zeros((n, m), dtype=np.int32)
    cdef int32_t[:, ::1] y = Y
    cdef int32_t[::1] buf = np.zeros(m, dtype=np.int32)
    cdef int32_t[::1] tmp = np.zeros(m, dtype=np.int32)
    cdef int64_t c, i
    with nogil:
        for i in range(m):
            y[0, i] = st[0, i]
        for c in range(1, n):
            memcpy(&buf[0], &y[c - 1, 0], m * sizeof(int32_t))
            box_max_i32(&buf[0], &tmp[0], &dims[0], &cs[0], nd, m)
            for i in range(m):
                y[c, i] = buf[i] + 1 if st[c, i] else 0
    return Y


def longest_run_batch(keys, int64_t n, shape, Cs, double p):
    cdef uint64_t[::1] kk = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef int64_t r = kk.shape[0]
    cdef int64_t m = int(np.prod(shape))
    cdef int nd = len(shape)
    cdef int64_t[::1] dims = np.asarray(shape, dtype=np.int64)
    cdef int64_t[::1] cs = np.asarray(Cs, dtype=np.int64)
    out = np.zeros(r, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int32_t[::1] y = np.zeros(m, dtype=np.int32)
    cdef int32_t[::1] tmp = np.zeros(m, dtype=np.int32)
    cdef int64_t q, c, i
    cdef int32_t best
    cdef uint64_t ck
    with nogil:
        for q in range(r):
            best = 0
            ck = bn_colkey(kk[q], 0)
            for i in range(m):
                y[i] = 1 if bn_unif(ck, <uint64_t>i) < p else 0
                if y[i] > best:
                    best = y[i]
            for c in range(1, n):
                box_max_i32(&y[0], &tmp[0], &dims[0], &cs[0], nd, m)
                ck = bn_colkey(kk[q], <uint64_t>c)
                for i in range(m):
                    if bn_unif(ck, <uint64_t>i) < p:
                        y[i] = y[i] + 1
                        if y[i] > best:
                            best = y[i]
                    else:
                        y[i] = 0
            o[q] = best
    return out


def across_depth_batch(keys, int64_t n, shape, Cs, double p):
    cdef uint64_t[::1] kk = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef int64_t r = kk.shape[0]
    cdef int64_t m = int(np.prod(shape))
    cdef int nd = len(shape)
    cdef int64_t[::1] dims = np.asarray(shape, dtype=np.int64)
    cdef int64_t[::1] cs = np.asarray(Cs, dtype=np.int64)
    out = np.zeros(r, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int32_t[::1] y = np.zeros(m, dtype=np.int32)
    cdef int32_t[::1] tmp = np.zeros(m, dtype=np.int32)
    cdef int64_t q, c, i, depth
    cdef int alive
    cdef uint64_t ck
    with nogil:
        for q in range(r):
            depth = 0
            for c in range(n):
                ck = bn_colkey(kk[q], <uint64_t>c)
                if c > 0:
                    box_max_i32(&y[0], &tmp[0], &dims[0], &cs[0], nd, m)
                alive = 0
                for i in range(m):
                    if (c == 0 or y[i] != 0) and bn_unif(ck, <uint64_t>i) < p:
                        y[i] = 1
                        alive = 1
                    else:
                        y[i] = 0
                if not alive:
                    break
                depth += 1
            o[q] = depth
    return out


# ---------------------------------------------------------------------------
# Pseudo-tree frontiers

cdef struct IBuf:
    int64_t* data
    int64_t size
    int64_t cap

cdef int ibuf_push(IBuf* b, int64_t v) noexcept nogil:
    cdef int64_t* nd
    if b.size == b.cap:
        b.cap = b.cap * 2 if b.cap > 0 else 64
        nd = <int64_t*> realloc(b.data, b.cap * sizeof(int64_t))
        if nd == NULL:
            return -1
        b.data = nd
    b.data[b.size] = v
    b.size += 1
    return 0

cdef struct TreeScratch:
    int nd
    int64_t Cs[8]
    int64_t noffs
    int64_t* offs        # noffs * nd, each entry in [0, 2C]
    int64_t* stamp       # indexed by flat index in the next column
    int64_t stamp_cap
    int64_t gen
    int64_t* cand        # candidate list
    int64_t cand_cap


cdef int scratch_init(TreeScratch* s, Cs, int64_t K) except -1:
    cdef int nd = len(Cs)
    cdef int64_t i, a, rem, box
    if nd > 8:
        raise ValueError("at most 8 transverse axes supported")
    s.nd = nd
    s.noffs = 1
    box = 1
    for a in range(nd):
        s.Cs[a] = Cs[a]
        s.noffs *= 2 * Cs[a] + 1
        box *= 2 * K * Cs[a] + 1
    s.offs = <int64_t*> malloc(s.noffs * nd * sizeof(int64_t))
    for i in range(s.noffs):
        rem = i
        for a in range(nd - 1, -1, -1):
            s.offs[i * nd + a] = rem % (2 * s.Cs[a] + 1)
            rem //= 2 * s.Cs[a] + 1
    s.stamp_cap = box
    s.stamp = <int64_t*> malloc(box * sizeof(int64_t))
    memset(s.stamp, 0, box * sizeof(int64_t))
    s.gen = 0
    s.cand_cap = 1024
    s.cand = <int64_t*> malloc(s.cand_cap * sizeof(int64_t))
    if s.offs == NULL or s.stamp == NULL or s.cand == NULL:
        raise MemoryError()
    return 0


cdef void scratch_free(TreeScratch* s) noexcept nogil:
    free(s.offs)
    free(s.stamp)
    free(s.cand)


cdef int advance_one(TreeScratch* s, int64_t* front, int64_t nf, int64_t c,
                     uint64_t pkey, double p, IBuf* out) noexcept nogil:
    """Open nodes of column c+1 reachable from ``front`` (column c)."""
    cdef int64_t coords[8]
    cdef int64_t dold[8]
    cdef int64_t dnew[8]
    cdef int nd = s.nd
    cdef int a
    cdef int64_t f, o, rem, flat, ncand = 0
    cdef uint64_t ck = bn_colkey(pkey, <uint64_t>(c + 1))
    cdef int64_t* grown
    for a in range(nd):
        dold[a] = 2 * c * s.Cs[a] + 1
        dnew[a] = dold[a] + 2 * s.Cs[a]
    s.gen += 1
    for f in range(nf):
        rem = front[f]
        for a in range(nd - 1, -1, -1):
            coords[a] = rem % dold[a]
            rem //= dold[a]
        for o in range(s.noffs):
            flat = 0
            for a in range(nd):
                flat = flat * dnew[a] + coords[a] + s.offs[o * nd + a]
            if s.stamp[flat] != s.gen:
                s.stamp[flat] = s.gen
                if ncand == s.cand_cap:
                    s.cand_cap *= 2
                    grown = <int64_t*> realloc(s.cand, s.cand_cap * sizeof(int64_t))
                    if grown == NULL:
                        return -1
                    s.cand = grown
                s.cand[ncand] = flat
                ncand += 1
    for f in range(ncand):
        if bn_unif(ck, <uint64_t>s.cand[f]) < p:
            if ibuf_push(out, s.cand[f]) != 0:
                return -1
    return 0


def tree_depth_batch(keys, int64_t K, Cs, double p):
    cdef uint64_t[::1] kk = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef int64_t r = kk.shape[0]
    out = np.zeros(r, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef TreeScratch s
    scratch_init(&s, [int(c) for c in Cs], K)
    cdef IBuf a, b, t
    a.data = NULL; a.size = 0; a.cap = 0
    b.data = NULL; b.size = 0; b.cap = 0
    cdef int64_t q, c, depth
    cdef int err = 0
    with nogil:
        for q in range(r):
            if not (bn_unif(bn_colkey(kk[q], 0), 0) < p):
                o[q] = 0
                continue
            a.size = 0
            ibuf_push(&a, 0)
            depth = 1
            for c in range(K - 1):
                b.size = 0
                if advance_one(&s, a.data, a.size, c, kk[q], p, &b) != 0:
                    err = 1
                    break
                if b.size == 0:
                    break
                depth += 1
                t = a; a = b; b = t
            o[q] = depth
            if err:
                break
    free(a.data); free(b.data)
    scratch_free(&s)
    if err:
        raise MemoryError()
    return out


def tree_splitting(uint64_t batch_key, int64_t K, Cs, double p, int64_t R):
    theta = np.zeros(K, dtype=np.float64)
    cdef double[::1] th = theta
    if p <= 0.0:
        return theta
    cdef TreeScratch s
    scratch_init(&s, [int(c) for c in Cs], K)
    # CSR frontiers: cur (particles' nodes) and nxt
    cdef IBuf cur, nxt, tmpb
    cur.data = NULL; cur.size = 0; cur.cap = 0
    nxt.data = NULL; nxt.size = 0; nxt.cap = 0
    cdef int64_t* cstart = <int64_t*> malloc((R + 1) * sizeof(int64_t))
    cdef int64_t* nstart = <int64_t*> malloc((R + 1) * sizeof(int64_t))
    cdef int64_t* surv = <int64_t*> malloc(R * sizeof(int64_t))
    cdef int64_t* swap
    cdef int64_t i, c, ns, pick, par, j2, before
    cdef uint64_t sk, rk, pk
    cdef int err = 0
    th[0] = p
    with nogil:
        for i in range(R):
            cstart[i] = i
            ibuf_push(&cur, 0)
        cstart[R] = R
        for c in range(K - 1):
            sk = bn_stagekey(batch_key, <uint64_t>c)
            nxt.size = 0
            ns = 0
            for i in range(R):
                nstart[i] = nxt.size
                pk = bn_colkey(sk, <uint64_t>i)
                before = nxt.size
                if advance_one(&s, cur.data + cstart[i], cstart[i + 1] - cstart[i],
                               c, pk, p, &nxt) != 0:
                    err = 1
                    break
                if nxt.size > before:
                    surv[ns] = i
                    ns += 1
            if err:
                break
            nstart[R] = nxt.size
            th[c + 1] = th[c] * (<double>ns) / (<double>R)
            if ns == 0:
                break
            rk = bn_mix64(sk ^ BN_RESAMPLE_SALT)
            rk = bn_colkey(rk, 0)
            cur.size = 0
            for i in range(R):
                pick = <int64_t>(bn_unif(rk, <uint64_t>i) * ns)
                if pick > ns - 1:
                    pick = ns - 1
                par = surv[pick]
                cstart[i] = cur.size
                for j2 in range(nstart[par], nstart[par + 1]):
                    if ibuf_push(&cur, nxt.data[j2]) != 0:
                        err = 1
                        break
                if err:
                    break
            if err:
                break
            cstart[R] = cur.size
    free(cur.data); free(nxt.data)
    free(cstart); free(nstart); free(surv)
    scratch_free(&s)
    if err:
        raise MemoryError()
    return theta


# ---------------------------------------------------------------------------
# Multiscale parallelogram counting

def region_counts(xs, ys, int j, int J, int S):
    from ._fallback import scale_geometry
    omega, t, d1, d2, nk, nl1, l2h = scale_geometry(j, J, S)
    cdef double om = omega, tt = t, dd1 = d1, dd2 = d2
    cdef int64_t NK = nk, NL1 = nl1, L2H = l2h, NL2 = 2 * l2h + 1
    cdef double[::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] Yp = np.ascontiguousarray(ys, dtype=np.float64)
    counts = np.zeros((nk, nl1, 2 * l2h + 1), dtype=np.int32)
    cdef int32_t[:, :, ::1] cnt = counts
    cdef int64_t npts = X.shape[0]
    cdef int64_t q, k, k0, b, l1, lo, hi
    cdef double x, y, cx, s, centre, half_w = om / 2.0, half_t = tt / 2.0
    with nogil:
        for q in range(npts):
            x = X[q]
            y = Yp[q]
            k0 = <int64_t>floor(x / om)
            if k0 < 0:
                k0 = 0
            if k0 > NK - 1:
                k0 = NK - 1
            for k in range(k0 - 1, k0 + 2):
                if k < 0 or k >= NK:
                    continue
                cx = (k + 0.5) * om
                if not (fabs(x - cx) <= half_w):
                    continue
                for b in range(NL2):
                    s = (b - L2H) * dd2
                    centre = (y - s * (x - cx)) / dd1
                    lo = <int64_t>ceil(centre - 2.0) - 1
                    hi = <int64_t>floor(centre + 2.0) + 1
                    if lo < 0:
                        lo = 0
                    if hi > NL1 - 1:
                        hi = NL1 - 1
                    for l1 in range(lo, hi + 1):
                        if fabs((y - l1 * dd1) - s * (x - cx)) <= half_t:
                            cnt[k, l1, b] += 1
    return counts


def longest_path_labels(labels, int reach=4):
    cdef uint8_t[:, :, ::1] lab = np.ascontiguousarray(labels, dtype=np.uint8)
    cdef int64_t nk = lab.shape[0], nl1 = lab.shape[1], nl2 = lab.shape[2]
    cdef int64_t h = (nl2 - 1) // 2
    cdef int64_t span = nl1 + 2 * reach
    cdef int32_t[:, ::1] Y = np.zeros((nl1, nl2), dtype=np.int32)
    cdef int32_t[:, ::1] sh = np.zeros((span, nl2), dtype=np.int32)
    cdef int32_t[:, ::1] tmp = np.zeros((span, nl2), dtype=np.int32)
    cdef int64_t k, a, b, lo, hi, shift, i, best = 0
    cdef int64_t dims[2]
    cdef int64_t cs[2]
    dims[0] = span; dims[1] = nl2
    cs[0] = reach; cs[1] = reach
    if nk == 0:
        return 0
    with nogil:
        for a in range(nl1):
            for b in range(nl2):
                Y[a, b] = lab[0, a, b]
                if Y[a, b] > best:
                    best = Y[a, b]
        for k in range(1, nk):
            memset(&sh[0, 0], 0, span * nl2 * sizeof(int32_t))
            for b in range(nl2):
                shift = b - h
                lo = -reach - shift
                if lo < 0:
                    lo = 0
                hi = nl1 + reach - shift
                if hi > nl1:
                    hi = nl1
                for a in range(lo, hi):
                    sh[a + shift + reach, b] = Y[a, b]
            box_max_i32(&sh[0, 0], &tmp[0, 0], dims, cs, 2, span * nl2)
            for a in range(nl1):
                for b in range(nl2):
                    if lab[k, a, b]:
                        Y[a, b] = sh[a + reach, b] + 1
                        if Y[a, b] > best:
                            best = Y[a, b]
                    else:
                        Y[a, b] = 0
    return int(best)
