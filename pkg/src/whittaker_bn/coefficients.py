"""Series-coefficient engine for the fundamental power series.

Two independent routes compute the same table c[m] over a rectangular box:

* ``coeffs_recurrence`` solves the defining three-term recurrence
      q(m, nu) c[m] = sum_{i<n} c[m - e_i] + (1/2) c[m - e_n],  c[0] = 1,
  where q is the quadratic-plus-linear form below.  Division by q amplifies
  noise, so any |q| below ``Q_TOL`` aborts with SingularCoefficient.

* ``coeffs_closed_form`` evaluates the rank-recursive nested-sum solution.
  It is organized through an intermediate table b[l] (built from the rank
  n-1 closed form) so the whole box costs O(box^{n+1}) instead of the
  O(box^{2n}) literal double sum; the literal transcription is kept as
  ``coeffs_closed_form_flat`` for cross-checks at tiny boxes.

The recurrence is carried out in double-double arithmetic internally: the
downstream Weyl-symmetrized series cancels catastrophically, and the table
must carry more correct digits than float64 can hold.  Public values are
rounded to complex128.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _dd, _ddfill
from ._dd import CDD, DD
from .errors import PoleError, SingularCoefficient
from .rootdata import as_nu
from .specfun import POLE_TOL, _loggamma_vec

#: |q| below this aborts the recurrence (division guard)
Q_TOL = 1e-8


def q_form(m: Sequence[int], nu: Sequence[complex]) -> complex:
    """The quadratic-plus-linear form driving the recurrence."""
    nu = as_nu(nu)
    m = tuple(int(v) for v in m)
    n = len(nu)
    if len(m) != n:
        raise ValueError("rank mismatch")
    out = 0.5 * m[-1] ** 2 + nu[-1] * m[-1]
    for i in range(n - 1):
        out += m[i] ** 2 + (nu[i] - nu[i + 1]) * m[i]
        out -= m[i] * m[i + 1]
    return complex(out)


def q_grid(nu: Sequence[complex], box: int) -> np.ndarray:
    """q on the whole box, shape (box+1,)*n."""
    nu = as_nu(nu)
    n = len(nu)
    idx = np.indices((box + 1,) * n).astype(float)
    out = 0.5 * idx[-1] ** 2 + nu[-1] * idx[-1]
    for i in range(n - 1):
        out = out + idx[i] ** 2 + (nu[i] - nu[i + 1]) * idx[i] - idx[i] * idx[i + 1]
    return out


def _q_grid_dd(nu: tuple, box: int) -> CDD:
    """Same form, flat, in double-double (inputs are exact float64)."""
    n = len(nu)
    idx = np.indices((box + 1,) * n).reshape(n, -1).astype(float)
    # integer part is exact in float64 for any practical box
    int_part = 0.5 * idx[-1] ** 2
    for i in range(n - 1):
        int_part = int_part + idx[i] ** 2 - idx[i] * idx[i + 1]
    acc = CDD(DD(int_part))
    for i in range(n - 1):
        diff = _dd.to_cdd(nu[i]) - _dd.to_cdd(nu[i + 1])
        acc = acc + diff * CDD(DD(idx[i]))
    acc = acc + _dd.to_cdd(nu[-1]) * CDD(DD(idx[-1]))
    return acc


@dataclass
class CoefficientTable:
    """Dense table of c[m] on the box 0 <= m_i <= box."""

    n: int
    nu: tuple
    box: int
    values: np.ndarray  # complex128, shape (box+1,)*n
    route: str  # "recurrence" | "closed_form"

    def __getitem__(self, m) -> complex:
        return complex(self.values[tuple(int(v) for v in m)])

    def as_dict(self) -> dict:
        entries = []
        for m in np.ndindex(self.values.shape):
            v = self.values[m]
            entries.append({"m": list(int(x) for x in m), "re": v.real, "im": v.imag})
        return {
            "n": self.n,
            "nu": [{"re": v.real, "im": v.imag} for v in self.nu],
            "box": self.box,
            "route": self.route,
            "entries": entries,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


@lru_cache(maxsize=16)
def _shell_plan(n: int, box: int):
    """Flat-index shells by total degree plus per-axis predecessor data."""
    shape = (box + 1,) * n
    idx = np.indices(shape).reshape(n, -1)
    deg = idx.sum(axis=0)
    strides = [int(np.prod(shape[i + 1:])) for i in range(n)]
    shells = []
    flat = np.arange(idx.shape[1])
    for d in range(1, n * box + 1):
        sel = flat[deg == d]
        preds = []
        for i in range(n):
            mi = idx[i, sel].astype(float)
            pred = sel - strides[i]
            preds.append((pred, mi))
        shells.append((sel, preds))
    return shells


def _check_singular(nu: tuple, box: int) -> None:
    q = np.abs(q_grid(nu, box))
    q[(0,) * len(nu)] = np.inf
    mn = float(q.min())
    if mn < Q_TOL:
        at = np.unravel_index(int(np.argmin(q)), q.shape)
        raise SingularCoefficient(
            f"|q({tuple(int(v) for v in at)}, nu)| = {mn:.3e} below {Q_TOL}")


@lru_cache(maxsize=3)
def _scaled_table_dd(n: int, nu: tuple, box: int) -> CDD:
    """Flat dd table of the factorial-scaled coefficients ct_m = c_m prod m_i!.

    ct is bounded on the whole box whenever the growth constant is O(1), so
    the series layer can form ct_m * prod(x^{m_i}/m_i!) without overflow at
    any truncation order.  The scaled recurrence reads

        q(m) ct_m = sum_{i<n} m_i ct_{m-e_i} + (1/2) m_n ct_{m-e_n}.
    """
    size = (box + 1) ** n
    vals = CDD.zeros(size)
    if _ddfill.HAS_NUMBA:
        lin = [_dd.to_cdd(nu[i]) - _dd.to_cdd(nu[i + 1]) for i in range(n - 1)]
        lin.append(_dd.to_cdd(nu[-1]))
        qmin = _ddfill.fill_scaled(
            vals.re.hi, vals.re.lo, vals.im.hi, vals.im.lo,
            np.array([v.re.hi for v in lin]), np.array([v.re.lo for v in lin]),
            np.array([v.im.hi for v in lin]), np.array([v.im.lo for v in lin]),
            n, box)
        if qmin < Q_TOL:
            raise SingularCoefficient(
                f"min |q| on the box is {qmin:.3e}, below {Q_TOL}")
        return vals
    _check_singular(nu, box)
    q = _q_grid_dd(nu, box)
    vals[0] = _dd.to_cdd(1.0)
    for sel, preds in _shell_plan(n, box):
        acc = CDD.zeros(len(sel))
        for i in range(n):
            pred, mi = preds[i]
            w = DD(mi * 0.5 if i == n - 1 else mi)  # mi = 0 also masks m_i = 0
            g = CDD(_dd.dd_mul(DD(vals.re.hi[pred], vals.re.lo[pred]), w),
                    _dd.dd_mul(DD(vals.im.hi[pred], vals.im.lo[pred]), w))
            acc = acc + g
        vals[sel] = _dd.cdd_div(acc, q[sel])
    return vals


@lru_cache(maxsize=3)
def _log_factorial_grid(n: int, box: int) -> np.ndarray:
    """sum_i log(m_i!) over the box, shape (box+1,)*n.

    Built as cumulative sums of log k so the m = 0 entry is exactly zero
    (the table's unit initial condition must survive unscaling bit-exactly).
    """
    lg = np.zeros(box + 1)
    if box > 0:
        lg[1:] = np.cumsum(np.log(np.arange(1, box + 1, dtype=float)))
    out = np.zeros((box + 1,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = box + 1
        out = out + lg.reshape(shape)
    return out


def coeffs_recurrence(n: int, nu: Sequence[complex], box: int) -> CoefficientTable:
    """Fill the box by the defining recurrence (graded order, deterministic).

    Raises
    ------
    SingularCoefficient
        If any |q(m, nu)| on the box falls below ``Q_TOL``.
    """
    nu = as_nu(nu)
    if len(nu) != n:
        raise ValueError("rank mismatch")
    if box < 0:
        raise ValueError("box must be >= 0")
    scaled = _scaled_table_dd(n, nu, box).to_complex().reshape((box + 1,) * n)
    vals = scaled * np.exp(-_log_factorial_grid(n, box))
    return CoefficientTable(n=n, nu=nu, box=box, values=vals, route="recurrence")


# -- Pochhammer helper arrays ---------------------------------------------------


def _inv_factorials(box: int) -> np.ndarray:
    """1/d! for d in [-box, box] (zero for d < 0), index shifted by +box."""
    out = np.zeros(2 * box + 1)
    out[box] = 1.0
    for d in range(1, box + 1):
        out[box + d] = out[box + d - 1] / d
    return out


def _inv_poch(a: complex, box: int) -> np.ndarray:
    """1/(a)_d for d in [-box, box], index shifted by +box.

    For d >= 0 this is a genuine reciprocal and a vanishing (a)_d raises
    PoleError; for d < 0 the reflection turns it into the plain product
    (a-1)...(a+d), which may legitimately be zero.
    """
    out = np.zeros(2 * box + 1, dtype=complex)
    out[box] = 1.0
    prod = 1.0 + 0.0j
    for d in range(1, box + 1):
        f = a + (d - 1)
        if abs(f) < POLE_TOL:
            raise PoleError(f"({a})_{d} vanishes: factor {f} at a pole")
        prod *= f
        out[box + d] = 1.0 / prod
    prod = 1.0 + 0.0j
    for d in range(1, box + 1):
        prod *= a - d
        out[box - d] = prod
    return out


def _letters(k: int) -> str:
    return "abcdefghijkl"[:k]


def b_table(n: int, nu: Sequence[complex], box: int) -> np.ndarray:
    """Intermediate table b[l_1..l_n]; zero when l_{n-1} < l_n.

    Built by contracting the rank n-1 closed-form table against factorial and
    Pochhammer kernels, one inner index at a time.
    """
    nu = as_nu(nu)
    if len(nu) != n or n < 2:
        raise ValueError("b_table needs rank >= 2")
    cprev = closed_form_table(n - 1, nu[:-1], box)
    invf = _inv_factorials(box)
    ipb = [_inv_poch(nu[i] - nu[-1] + 1.0, box) for i in range(n - 1)]

    li = np.arange(box + 1)
    d = li[:, None] - li[None, :] + box  # index difference, shifted

    if n == 2:
        # b[l1, l2] = (-1)^{l2} c_prev[l2] / ((l1-l2)! (nu1-nu2+1)_{l1})
        core = invf[d] * ipb[0][box + li][:, None] * cprev[None, :]
    else:
        # walk the k-chain: attach l_1, then contract k_{i-1} against the
        # kernel that attaches l_i, and finish with the (l_{n-1}, l_n) end cap
        x = cprev  # axes (k_1, ..., k_{n-2}, l_n)
        j1 = invf[d] * ipb[0][box + li][:, None]  # [l_1, k_1]
        sub = _letters(x.ndim)
        x = np.einsum(f"{sub},Z{sub[0]}->{sub}Z", x, j1)
        for i in range(2, n - 1):
            ji = invf[d][:, None, :] * ipb[i - 1][d][:, :, None]  # [l_i, k_{i-1}, k_i]
            sub = _letters(x.ndim)
            x = np.einsum(f"{sub},Z{sub[0]}{sub[1]}->{sub[1:]}Z", x, ji)
        e = invf[d][:, None, :] * ipb[n - 2][d][:, :, None]  # [l_{n-1}, k_{n-2}, l_n]
        sub = _letters(x.ndim)  # (k_{n-2}, l_n, l_1, ...)
        x = np.einsum(f"{sub},Z{sub[0]}{sub[1]}->{sub[1:]}Z", x, e)
        core = np.moveaxis(x, 0, -1)  # (l_n, l_1..l_{n-1}) -> (l_1..l_n)
    sign = np.where(li % 2 == 0, 1.0, -1.0)
    return core * sign.reshape((1,) * (n - 1) + (box + 1,))


@lru_cache(maxsize=32)
def _closed_form_cached(n: int, nu: tuple, box: int) -> np.ndarray:
    if n == 1:
        invf = _inv_factorials(box)[box:]
        return invf * _inv_poch(2.0 * nu[0] + 1.0, box)[box:]
    b = b_table(n, nu, box)
    invf = _inv_factorials(box)
    ipa = [_inv_poch(nu[i] + nu[-1] + 1.0, box) for i in range(n)]
    li = np.arange(box + 1)
    d = li[:, None] - li[None, :] + box
    sign = np.where(li % 2 == 0, 1.0, -1.0)
    x = b * sign.reshape((1,) * (n - 1) + (box + 1,))  # (-1)^{l_n} b[l]
    for i in range(n, 1, -1):
        # K_i[m_i, l_{i-1}, l_i]: contract l_i
        ki = invf[d][:, None, :] * ipa[i - 1][d][:, :, None]
        sub = _letters(x.ndim)  # (l_1..l_i, m_{i+1}..m_n)
        out_sub = sub[:i - 1] + "Z" + sub[i:]
        x = np.einsum(f"{sub},Z{sub[i - 2]}{sub[i - 1]}->{out_sub}", x, ki)
    f1 = invf[d] * ipa[0][box + li][:, None]  # [m_1, l_1]
    sub = _letters(x.ndim)
    x = np.einsum(f"{sub},Z{sub[0]}->Z{sub[1:]}", x, f1)
    return x


def closed_form_table(n: int, nu: Sequence[complex], box: int) -> np.ndarray:
    """Whole-box closed-form table, shape (box+1,)*n."""
    nu = as_nu(nu)
    if len(nu) != n:
        raise ValueError("rank mismatch")
    return _closed_form_cached(n, nu, box)


def coeffs_closed_form(n: int, nu: Sequence[complex], m: Sequence[int]) -> complex:
    """Closed-form c[m] (rank recursion through the b table).

    Raises
    ------
    PoleError
        When a Pochhammer denominator (nu_i +- nu_n + 1)_k vanishes inside
        the needed index range.
    """
    m = tuple(int(v) for v in m)
    if len(m) != n or any(v < 0 for v in m):
        raise ValueError("m must be n nonnegative integers")
    box = max(m) if m else 0
    table = closed_form_table(n, nu, box)
    return complex(table[m])


def coeffs_closed_form_flat(n: int, nu: Sequence[complex], m: Sequence[int]) -> complex:
    """Literal transcription of the nested-sum solution (test oracle only;
    cost grows like box^{2n})."""
    import itertools

    from .specfun import pochhammer

    nu = as_nu(nu)
    m = tuple(int(v) for v in m)
    if n == 1:
        return complex(1.0 / (math.factorial(m[0]) * pochhammer(2 * nu[0] + 1.0, m[0])))
    total = 0.0 + 0.0j
    l_ranges = [range(mi + 1) for mi in m[:-1]]
    for ls in itertools.product(*l_ranges):
        k_ranges = [range(li + 1) for li in ls[:-1]] + [range(min(ls[-1], m[-1]) + 1)]
        for ks in itertools.product(*k_ranges):
            inner = coeffs_closed_form_flat(n - 1, nu[:-1], ks)
            den = 1.0 + 0.0j
            for i in range(n - 1):
                den *= math.factorial(m[i] - ls[i])
                den *= math.factorial(ls[i] - ks[i])
            den *= math.factorial(m[-1] - ks[-1])
            lfull = (0,) + ls  # l_0 = 0
            kfull = (0,) + ks  # k_0 = 0
            for i in range(1, n + 1):
                mi = m[i - 1]
                den *= pochhammer(nu[i - 1] + nu[-1] + 1.0, mi - lfull[i - 1])
            for i in range(1, n):
                den *= pochhammer(nu[i - 1] - nu[-1] + 1.0, lfull[i] - kfull[i - 1])
            total += inner / den
    return complex(total)


@dataclass
class BRecurrenceReport:
    n: int
    nu: tuple
    box: int
    max_residual: float
    max_abs_b: float

    @property
    def ok(self) -> bool:
        return self.max_residual <= 1e-10 * max(self.max_abs_b, 1e-300)


def b_recurrence_check(n: int, nu: Sequence[complex], box: int) -> BRecurrenceReport:
    """Residual of the b-table's own three-term recurrence over the box."""
    nu = as_nu(nu)
    b = b_table(n, nu, box)
    q = q_grid(nu, box)
    rhs = np.zeros_like(b)
    for i in range(n - 1):
        shifted = np.zeros_like(b)
        sl_to = [slice(None)] * n
        sl_from = [slice(None)] * n
        sl_to[i] = slice(1, None)
        sl_from[i] = slice(0, -1)
        shifted[tuple(sl_to)] = b[tuple(sl_from)]
        rhs += shifted
    shifted = np.zeros_like(b)
    shifted[..., 1:] = b[..., :-1]
    # the last-axis coefficient uses the *current* index: (-l_{n-1} + l_n - 1)/2
    lgrid = np.indices(b.shape)
    rhs = rhs + 0.5 * (-lgrid[n - 2] + lgrid[n - 1] - 1.0) * shifted
    res = np.abs(q * b - rhs)
    return BRecurrenceReport(n=n, nu=nu, box=box,
                             max_residual=float(res.max()),
                             max_abs_b=float(np.abs(b).max()))


def fit_growth_constant(values: np.ndarray) -> float:
    """Smallest C visible on the box with |c_m| <= C^{|m|} / |m|! (sup form).

    Used by the series tail bound; the factorial decay itself is guaranteed,
    only the constant is fitted empirically.
    """
    shape = values.shape
    deg = np.indices(shape).sum(axis=0).ravel().astype(float)
    mags = np.abs(values).ravel()
    mask = (deg > 0) & (mags > 0.0)
    if not np.any(mask):
        return 1.0
    logs = (np.log(mags[mask]) + _lgamma_real(deg[mask] + 1.0)) / deg[mask]
    return float(np.exp(logs.max()))


def _lgamma_real(x: np.ndarray) -> np.ndarray:
    return _loggamma_vec(x.astype(complex)).real
