"""Counter-based normals and order-independent summation.

Every particle draws its noise from Philox4x32-10 keyed by the master seed,
with the counter built from (stream id, step index, block). The draw for a
particle therefore never depends on how many particles precede it or on how
the work is split across threads.

Sums over particles go through :func:`exact_sum`, a port of CPython's
``math.fsum``. The result is the correctly rounded sum, hence invariant
under any permutation of the summands.
"""

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S21 = np.uint64(21)
_S16 = np.uint64(16)

_TWO_PI = 2.0 * np.pi
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@nb.njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block. Words are uint64 holding 32-bit values."""
    for r in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _S32) ^ c1 ^ k0, p1 & _MASK32, (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK32
        if r < 9:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True, inline="always")
def _u01(hi, lo):
    # 53 bits from two words, offset off zero so log() is safe
    bits = ((hi << _S21) | (lo >> np.uint64(11))) & np.uint64(0x1FFFFFFFFFFFFF)
    return (np.float64(bits) + 0.5) * _INV53


@nb.njit(cache=True, nogil=True)
def fill_normals(seed, tag, stream, step, out):
    """Write len(out) standard normals for one (seed, tag, stream, step) key.

    Counter words: (stream, block | tag << 16, step lo, step hi); key: the
    two halves of the 64-bit seed. ``tag`` separates independent uses of the
    same seed (dynamics noise, initial sampling, ...).
    """
    s = np.uint64(seed)
    k0 = s & _MASK32
    k1 = s >> _S32
    st = np.uint64(step)
    c2 = st & _MASK32
    c3 = st >> _S32
    c0 = np.uint64(stream) & _MASK32
    n = out.shape[0]
    block = 0
    j = 0
    while j < n:
        c1 = np.uint64(block) | (np.uint64(tag) << _S16)
        w0, w1, w2, w3 = philox4x32(c0, c1, c2, c3, k0, k1)
        r = np.sqrt(-2.0 * np.log(_u01(w0, w1)))
        a = _TWO_PI * _u01(w2, w3)
        out[j] = r * np.cos(a)
        if j + 1 < n:
            out[j + 1] = r * np.sin(a)
        j += 2
        block += 1


@nb.njit(cache=True, nogil=True)
def normals_for(seed, tag, streams, step, d):
    out = np.empty((streams.shape[0], d))
    for i in range(streams.shape[0]):
        fill_normals(seed, tag, streams[i], step, out[i])
    return out


@nb.njit(cache=True, nogil=True)
def exact_sum(x):
    """Correctly rounded sum of a 1-d float array (Shewchuk / CPython fsum)."""
    p = np.empty(128)
    n = 0
    for idx in range(x.shape[0]):
        v = x[idx]
        i = 0
        for j in range(n):
            y = p[j]
            if abs(v) < abs(y):
                v, y = y, v
            hi = v + y
            lo = y - (hi - v)
            if lo != 0.0:
                p[i] = lo
                i += 1
            v = hi
        n = i
        if v != 0.0:
            p[n] = v
            n += 1
    hi = 0.0
    lo = 0.0
    if n > 0:
        n -= 1
        hi = p[n]
        while n > 0:
            v = hi
            n -= 1
            y = p[n]
            hi = v + y
            lo = y - (hi - v)
            if lo != 0.0:
                break
        # half-way case: make the rounding of hi+lo honour the tail
        if n > 0 and ((lo < 0.0 and p[n - 1] < 0.0) or (lo > 0.0 and p[n - 1] > 0.0)):
            y = lo * 2.0
            v = hi + y
            if y == v - hi:
                hi = v
    return hi


@nb.njit(cache=True, nogil=True)
def column_means(X):
    n, d = X.shape
    out = np.empty(d)
    col = np.empty(n)
    for j in range(d):
        for i in range(n):
            col[i] = X[i, j]
        out[j] = exact_sum(col) / n
    return out


@nb.njit(cache=True, nogil=True)
def centered_cov(X, m):
    n, d = X.shape
    out = np.empty((d, d))
    col = np.empty(n)
    for a in range(d):
        for b in range(a, d):
            for i in range(n):
                col[i] = (X[i, a] - m[a]) * (X[i, b] - m[b])
            out[a, b] = exact_sum(col) / n
            out[b, a] = out[a, b]
    return out
