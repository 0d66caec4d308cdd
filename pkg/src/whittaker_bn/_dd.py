"""Vectorized double-double (~31 significant digits) arithmetic.

Internal workhorse for the power-series layer.  The Weyl-symmetrized series
sums terms whose magnitudes exceed the result by factors of 1e13..1e21 inside
the documented operating region, so plain float64 accumulation would return
noise there.  Working in double-double keeps ~15 digits after the worst
observed cancellation.

Representation: a value is an unevaluated sum hi + lo of two float64 arrays
with |lo| <= ulp(hi)/2.  Algorithms are the classical error-free transforms
(Dekker/Knuth two_sum, split-based two_prod) plus the usual Newton/Taylor
schemes for exp, log, sin/cos and atan2.  Everything broadcasts like numpy.

Not a public API; precision claims hold for |values| < 1e290 (Dekker split
overflows beyond) and exp arguments within the float64 range.
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    # requires |a| >= |b| componentwise
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    lo = a - hi
    return hi, lo


def _two_prod(a, b):
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class DD:
    """Array of real double-double numbers."""

    __slots__ = ("hi", "lo")
    __array_priority__ = 100  # keep numpy from hijacking ndarray (op) DD

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=np.float64)
        self.lo = np.zeros_like(self.hi) if lo is None else np.asarray(lo, dtype=np.float64)

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_sum(hi, lo):
        s, e = _two_sum(np.asarray(hi, float), np.asarray(lo, float))
        return DD(s, e)

    @staticmethod
    def zeros(shape):
        return DD(np.zeros(shape), np.zeros(shape))

    @staticmethod
    def ones(shape):
        return DD(np.ones(shape), np.zeros(shape))

    # -- structure ------------------------------------------------------------

    @property
    def shape(self):
        return self.hi.shape

    def __getitem__(self, idx):
        return DD(self.hi[idx], self.lo[idx])

    def __setitem__(self, idx, value):
        value = to_dd(value)
        self.hi[idx] = value.hi
        self.lo[idx] = value.lo

    def copy(self):
        return DD(self.hi.copy(), self.lo.copy())

    def reshape(self, *shape):
        return DD(self.hi.reshape(*shape), self.lo.reshape(*shape))

    def to_float(self):
        return self.hi + self.lo

    def __repr__(self):
        return f"DD({self.hi!r}, {self.lo!r})"

    # -- arithmetic operators ---------------------------------------------

    def __add__(self, other):
        return dd_add(self, to_dd(other))

    __radd__ = __add__

    def __sub__(self, other):
        return dd_add(self, dd_neg(to_dd(other)))

    def __rsub__(self, other):
        return dd_add(to_dd(other), dd_neg(self))

    def __mul__(self, other):
        return dd_mul(self, to_dd(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return dd_div(self, to_dd(other))

    def __rtruediv__(self, other):
        return dd_div(to_dd(other), self)

    def __neg__(self):
        return dd_neg(self)


def to_dd(x):
    if isinstance(x, DD):
        return x
    return DD(np.asarray(x, dtype=np.float64))


def _append(a: DD, b: DD) -> DD:
    return DD(np.concatenate([a.hi, b.hi]), np.concatenate([a.lo, b.lo]))


def dd_neg(x: DD) -> DD:
    return DD(-x.hi, -x.lo)


def dd_add(x: DD, y: DD) -> DD:
    s1, s2 = _two_sum(x.hi, y.hi)
    t1, t2 = _two_sum(x.lo, y.lo)
    s2 = s2 + t1
    s1, s2 = _quick_two_sum(s1, s2)
    s2 = s2 + t2
    s1, s2 = _quick_two_sum(s1, s2)
    return DD(s1, s2)


def dd_mul(x: DD, y: DD) -> DD:
    p1, p2 = _two_prod(x.hi, y.hi)
    p2 = p2 + (x.hi * y.lo + x.lo * y.hi)
    p1, p2 = _quick_two_sum(p1, p2)
    return DD(p1, p2)


def dd_div(x: DD, y: DD) -> DD:
    q1 = x.hi / y.hi
    r = dd_add(x, dd_neg(dd_mul(DD(q1), y)))
    q2 = (r.hi + r.lo) / y.hi
    s, e = _quick_two_sum(q1, q2)
    return DD(s, e)


def dd_sum(x: DD, axis=0) -> DD:
    """Pairwise reduction along one axis (deterministic)."""
    hi = np.moveaxis(x.hi, axis, 0)
    lo = np.moveaxis(x.lo, axis, 0)
    cur = DD(hi, lo)
    while cur.hi.shape[0] > 1:
        m = cur.hi.shape[0] // 2
        nxt = dd_add(DD(cur.hi[0:2 * m:2], cur.lo[0:2 * m:2]),
                     DD(cur.hi[1:2 * m:2], cur.lo[1:2 * m:2]))
        if cur.hi.shape[0] % 2:
            nxt = DD(np.concatenate([nxt.hi, cur.hi[-1:]]),
                     np.concatenate([nxt.lo, cur.lo[-1:]]))
        cur = nxt
    return DD(cur.hi[0], cur.lo[0])


# -- constants (hi/lo split of 60-digit values) --------------------------------

_TWO_PI = DD(6.283185307179586, 2.4492935982947064e-16)
_PI = DD(3.141592653589793, 1.2246467991473532e-16)
_PI_2 = DD(1.5707963267948966, 6.123233995736766e-17)
_LN2 = DD(0.6931471805599453, 2.3190468138462996e-17)
_LOG_2PI_HALF = DD(0.9189385332046728, -3.8782941580672414e-17)

# 1/k! for the exp/sin/cos Taylor tails, built exactly in dd at import
_INV_FACT = []
_f = DD(1.0)
for _k in range(1, 33):
    _f = dd_mul(_f, DD(float(_k)))
    _INV_FACT.append(dd_div(DD(1.0), _f))


def dd_exp(x: DD) -> DD:
    """exp for |x.hi| <= ~690; no overflow guard beyond clipping."""
    m = np.round(x.hi / _LN2.hi)
    r = dd_add(x, dd_neg(dd_mul(DD(m), _LN2)))
    # scale r down by 2^9, Taylor, then square back up
    k = 512.0
    r = DD(r.hi / k, r.lo / k)
    p = dd_mul(r, r)
    s = dd_add(r, dd_mul(p, DD(0.5)))
    t = dd_mul(p, r)
    for j in range(2, 13):  # terms r^3/3! .. r^13/13!? loop adds r^(j+1)/(j+1)!
        s = dd_add(s, dd_mul(t, _INV_FACT[j]))
        t = dd_mul(t, r)
    for _ in range(9):  # undo scaling: (1+s)^2 = 1 + (2s + s^2)
        s = dd_add(dd_mul(s, DD(2.0)), dd_mul(s, s))
    s = dd_add(s, DD(1.0))
    scale = np.exp2(np.clip(m, -1022, 1023))
    return DD(s.hi * scale, s.lo * scale)


def dd_log(x: DD) -> DD:
    """log for positive x; two Newton corrections of the float64 seed."""
    y = DD(np.log(x.hi))
    for _ in range(2):
        e = dd_exp(dd_neg(y))
        y = dd_add(y, dd_add(dd_mul(x, e), DD(-1.0)))
    return y


def _sin_taylor(r: DD) -> DD:
    # |r| <= pi/4; odd series r * sum_j (-1)^j r^2j/(2j+1)!
    p = dd_mul(r, r)
    acc = DD(np.ones_like(r.hi))
    t = p
    sgn = -1.0
    for j in range(1, 15):
        acc = dd_add(acc, dd_mul(t, DD(sgn * _INV_FACT[2 * j].hi, sgn * _INV_FACT[2 * j].lo)))
        t = dd_mul(t, p)
        sgn = -sgn
    return dd_mul(r, acc)


def _cos_taylor(r: DD) -> DD:
    p = dd_mul(r, r)
    acc = DD(np.ones_like(r.hi))
    t = p
    sgn = -1.0
    for j in range(1, 15):
        acc = dd_add(acc, dd_mul(t, DD(sgn * _INV_FACT[2 * j - 1].hi, sgn * _INV_FACT[2 * j - 1].lo)))
        t = dd_mul(t, p)
        sgn = -sgn
    return acc


def dd_sincos(x: DD):
    """(sin x, cos x); argument reduction is accurate for |x| <= ~1e8."""
    q = np.round(x.hi / _PI_2.hi)
    r = dd_add(x, dd_neg(dd_mul(DD(q), _PI_2)))
    s0 = _sin_taylor(r)
    c0 = _cos_taylor(r)
    quad = np.mod(q, 4.0)
    sin = np.where(quad == 0, s0.hi, np.where(quad == 1, c0.hi, np.where(quad == 2, -s0.hi, -c0.hi)))
    sin_lo = np.where(quad == 0, s0.lo, np.where(quad == 1, c0.lo, np.where(quad == 2, -s0.lo, -c0.lo)))
    cos = np.where(quad == 0, c0.hi, np.where(quad == 1, -s0.hi, np.where(quad == 2, -c0.hi, s0.hi)))
    cos_lo = np.where(quad == 0, c0.lo, np.where(quad == 1, -s0.lo, np.where(quad == 2, -c0.lo, s0.lo)))
    return DD(sin, sin_lo), DD(cos, cos_lo)


def dd_atan2(y: DD, x: DD) -> DD:
    """One rotation by the float64 seed, then atan of the tiny residual."""
    th0 = np.arctan2(y.hi, x.hi)
    s, c = dd_sincos(DD(th0))
    u = dd_add(dd_mul(x, c), dd_mul(y, s))
    v = dd_add(dd_mul(y, c), dd_neg(dd_mul(x, s)))
    d = dd_div(v, u)  # |d| ~ 1e-16, atan(d) = d to dd accuracy
    return dd_add(DD(th0), d)


class CDD:
    """Array of complex double-double numbers (re, im are DD)."""

    __slots__ = ("re", "im")
    __array_priority__ = 100

    def __init__(self, re, im=None):
        self.re = to_dd(re)
        self.im = to_dd(im) if im is not None else DD(np.zeros_like(self.re.hi))

    @staticmethod
    def from_complex(z):
        z = np.asarray(z, dtype=complex)
        return CDD(DD(z.real.copy()), DD(z.imag.copy()))

    @staticmethod
    def zeros(shape):
        return CDD(DD.zeros(shape), DD.zeros(shape))

    @property
    def shape(self):
        return self.re.hi.shape

    def __getitem__(self, idx):
        return CDD(self.re[idx], self.im[idx])

    def __setitem__(self, idx, value):
        value = to_cdd(value)
        self.re[idx] = value.re
        self.im[idx] = value.im

    def copy(self):
        return CDD(self.re.copy(), self.im.copy())

    def reshape(self, *shape):
        return CDD(self.re.reshape(*shape), self.im.reshape(*shape))

    def to_complex(self):
        return (self.re.hi + self.re.lo) + 1j * (self.im.hi + self.im.lo)

    def abs2(self) -> DD:
        return dd_add(dd_mul(self.re, self.re), dd_mul(self.im, self.im))

    def __repr__(self):
        return f"CDD({self.re!r}, {self.im!r})"

    def __add__(self, other):
        other = to_cdd(other)
        return CDD(dd_add(self.re, other.re), dd_add(self.im, other.im))

    __radd__ = __add__

    def __neg__(self):
        return CDD(dd_neg(self.re), dd_neg(self.im))

    def __sub__(self, other):
        return self + (-to_cdd(other))

    def __rsub__(self, other):
        return to_cdd(other) + (-self)

    def __mul__(self, other):
        other = to_cdd(other)
        return cdd_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return cdd_div(self, to_cdd(other))

    def __rtruediv__(self, other):
        return cdd_div(to_cdd(other), self)


def to_cdd(x):
    if isinstance(x, CDD):
        return x
    if isinstance(x, DD):
        return CDD(x)
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        return CDD.from_complex(arr)
    return CDD(DD(arr.astype(np.float64)))


def cdd_mul(x: CDD, y: CDD) -> CDD:
    re = dd_add(dd_mul(x.re, y.re), dd_neg(dd_mul(x.im, y.im)))
    im = dd_add(dd_mul(x.re, y.im), dd_mul(x.im, y.re))
    return CDD(re, im)


def cdd_div(x: CDD, y: CDD) -> CDD:
    den = y.abs2()
    re = dd_div(dd_add(dd_mul(x.re, y.re), dd_mul(x.im, y.im)), den)
    im = dd_div(dd_add(dd_mul(x.im, y.re), dd_neg(dd_mul(x.re, y.im))), den)
    return CDD(re, im)


def cdd_exp(z: CDD) -> CDD:
    r = dd_exp(z.re)
    s, c = dd_sincos(z.im)
    return CDD(dd_mul(r, c), dd_mul(r, s))


def cdd_log(z: CDD) -> CDD:
    mod2 = z.abs2()
    return CDD(dd_mul(dd_log(mod2), DD(0.5)), dd_atan2(z.im, z.re))


def cdd_sum(z: CDD, axis=0) -> CDD:
    return CDD(dd_sum(z.re, axis), dd_sum(z.im, axis))


def cdd_matmul(a: CDD, b: CDD) -> CDD:
    """(N,K) @ (K,M) with a python loop over K; deterministic order."""
    n, k = a.shape
    k2, m = b.shape
    if k != k2:
        raise ValueError("shape mismatch in cdd_matmul")
    acc = CDD.zeros((n, m))
    for j in range(k):
        acc = acc + cdd_mul(a[:, j].reshape(n, 1), b[j, :].reshape(1, m))
    return acc


# -- complex log-gamma in dd ----------------------------------------------------

# B_{2k} / (2k (2k-1)), k = 1..16
_STIRLING = [DD(h, l) for h, l in [
    (0.08333333333333333, 4.625929269271485e-18),
    (-0.002777777777777778, 1.0601087908747154e-19),
    (0.0007936507936507937, 6.883823317368282e-22),
    (-0.0005952380952380953, 5.36938218754726e-20),
    (0.0008417508417508417, 3.6870174889237694e-20),
    (-0.0019175269175269176, 1.0675702776872475e-19),
    (0.00641025641025641, 2.2240044563805217e-19),
    (-0.029550653594771242, 4.861760957508855e-19),
    (0.17964437236883057, -6.401600482710946e-19),
    (-1.3924322169059011, 1.5837056989230303e-17),
    (13.402864044168393, -6.154114101993966e-16),
    (-156.84828462600203, 9.391823141715389e-15),
    (2193.1033333333335, -1.3339255626002948e-13),
    (-36108.77125372499, 5.897583353514365e-13),
    (691472.268851313, 2.5585296305158e-11),
    (-15238221.539407415, -8.76774522490625e-10),
]]

_STIRLING_SHIFT = 32.0


def _loggamma_stirling(z: CDD) -> CDD:
    # requires |z| >= _STIRLING_SHIFT and Re z > 0
    lz = cdd_log(z)
    out = cdd_mul(z - CDD(DD(0.5)), lz) - z + CDD(_LOG_2PI_HALF)
    zinv = cdd_div(CDD(DD(1.0)), z)
    zinv2 = cdd_mul(zinv, zinv)
    term = zinv
    acc = CDD.zeros(z.shape)
    for c in _STIRLING:
        acc = acc + cdd_mul(term, CDD(c))
        term = cdd_mul(term, zinv2)
    return out + acc


def cdd_loggamma(z: CDD) -> CDD:
    """log Gamma to ~1e-30 relative.  The phase carries whatever branch the
    reflection/shift bookkeeping produces; callers only exponentiate sums of
    these, so 2*pi*i offsets are immaterial."""
    shape = z.shape
    if shape == ():
        return cdd_loggamma(z.reshape(1))[0, ]
    re = z.re.hi
    out = CDD.zeros(shape)
    neg = re < 0.5
    if np.any(neg):
        zn = z[neg]
        # reflection: logGamma(z) = log pi - log sin(pi z) - logGamma(1 - z)
        pz = cdd_mul(CDD(_PI), zn)
        # sin(a+bi) = sin a cosh b + i cos a sinh b
        s, c = dd_sincos(pz.re)
        eb = dd_exp(pz.im)
        emb = dd_div(DD(1.0), eb)
        ch = dd_mul(dd_add(eb, emb), DD(0.5))
        sh = dd_mul(dd_add(eb, dd_neg(emb)), DD(0.5))
        sinpz = CDD(dd_mul(s, ch), dd_mul(c, sh))
        val = CDD(dd_log(_PI), DD(0.0)) - cdd_log(sinpz) - _loggamma_pos(CDD(DD(1.0)) - zn)
        out[neg] = val
    pos = ~neg
    if np.any(pos):
        out[pos] = _loggamma_pos(z[pos])
    return out


def _loggamma_pos(z: CDD) -> CDD:
    # Re z >= 0.5: shift into the Stirling region, subtract the logs back off
    mod = np.hypot(z.re.hi, z.im.hi)
    kmax = int(np.ceil(max(0.0, _STIRLING_SHIFT - mod.min())))
    acc = CDD.zeros(z.shape)
    zc = z.copy()
    for _ in range(kmax):
        need = np.hypot(zc.re.hi, zc.im.hi) < _STIRLING_SHIFT
        if not np.any(need):
            break
        zn = zc[need]
        acc[need] = acc[need] + cdd_log(zn)
        zc[need] = zn + CDD(DD(1.0))
    return _loggamma_stirling(zc) - acc
