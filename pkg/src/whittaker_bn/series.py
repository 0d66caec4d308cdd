"""Power-series evaluation layer.

``m_tilde`` sums the fundamental series

    M(nu; y) = sum_m c_m(nu) prod_i (pi y_i)^{2(m_i + nu_1 + ... + nu_i)}

over a rectangular box with a certified geometric/factorial tail bound, and
``w_tilde_series`` assembles the Weyl-symmetrized combination

    W(nu; y) = sum_{w} Gamma_n(w nu) M(w nu; y),

whose 2^n n! terms cancel catastrophically (observed ratios up to ~1e21 in
the documented operating region).  All term arithmetic therefore runs in
double-double precision internally; results are rounded to complex128 on the
way out and the cancellation ratio is always reported, with a warning beyond
12 lost digits.

The Gamma-product factors (Gamma_n, the c-function, the Whittaker-from-
integral normalization, and the functional-equation cocycle) live here too;
they are assembled in log space and exponentiated once.

Operating region for accuracy claims: |Re nu_i| <= 0.45, |Im nu_i| <= 2,
y_i in [0.1, 5].  Outside it everything still runs but degrades gracefully.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _dd
from ._dd import CDD, DD, cdd_exp, cdd_loggamma, cdd_matmul, dd_div, dd_log, dd_mul
from .coefficients import _log_factorial_grid, _scaled_table_dd
from .errors import CatastrophicCancellation, PoleError, TailNotConverged
from .rootdata import as_nu, as_y, rho_exponent, weyl_orbit
from .specfun import POLE_TOL, _loggamma_vec, pole_distance

_PI_DD = DD(3.141592653589793, 1.2246467991473532e-16)

#: cancellation ratio beyond which a warning is emitted
CANCELLATION_WARN_RATIO = 1e12

#: largest box the series loop will try before giving up
MAX_BOX = 520


@dataclass
class SeriesValue:
    """A partial sum with its certified absolute tail bound."""

    value: complex
    truncation_order: int
    tail_bound: float
    terms_summed: int
    cancellation_ratio: float | None = None


@dataclass
class GammaFactor:
    """Log-space product of Gamma factors; exponentiate once, at the end."""

    log_value: complex

    @property
    def value(self) -> complex:
        return cmath.exp(self.log_value)


# -- building blocks ------------------------------------------------------------


def _partial_sums_dd(nu: tuple) -> list:
    """Running sums nu_1 + ... + nu_i as CDD scalars (exact accumulation)."""
    out = []
    acc = _dd.to_cdd(0.0)
    for v in nu:
        acc = acc + _dd.to_cdd(v)
        out.append(acc)
    return out


def _power_matrix_dd(x: DD, box: int) -> DD:
    """Scaled powers x^m / m!, shape (N, box+1), by cumulative dd products.

    Pairs with the factorial-scaled coefficient table; entries stay below
    e^x, so no truncation order overflows."""
    n = x.hi.shape[0]
    hi = np.empty((n, box + 1))
    lo = np.empty((n, box + 1))
    cur = DD(np.ones(n), np.zeros(n))
    hi[:, 0], lo[:, 0] = cur.hi, cur.lo
    for m in range(1, box + 1):
        cur = dd_div(dd_mul(cur, x), DD(float(m)))
        hi[:, m], lo[:, m] = cur.hi, cur.lo
    return DD(hi, lo)


def _scaled_power_matrices(nu: tuple, y_axes: list, box: int) -> list:
    """Per-axis matrices pre_i(y) * x_i^m with the characteristic exponents
    of the given parameter folded in; x_i = (pi y_i)^2."""
    xmax = max(float(np.max((math.pi * np.asarray(ys, dtype=float)) ** 2)) for ys in y_axes)
    if xmax > 640.0:
        raise TailNotConverged(
            f"series argument (pi y)^2 = {xmax:.3g} exceeds the scaled-power range; "
            "the point is outside the series operating region")
    psums = _partial_sums_dd(nu)
    mats = []
    for i, ys in enumerate(y_axes):
        ydd = DD(np.asarray(ys, dtype=float))
        logpy = dd_log(dd_mul(_PI_DD, ydd))
        x = dd_mul(dd_mul(_PI_DD, ydd), dd_mul(_PI_DD, ydd))
        powers = _power_matrix_dd(x, box)  # (N, box+1) real dd
        expo = psums[i] * _dd.to_cdd(2.0)
        pre = cdd_exp(CDD(dd_mul(expo.re, logpy), dd_mul(expo.im, logpy)))  # (N,)
        n_pts = ydd.hi.shape[0]
        pm = CDD(powers, DD(np.zeros_like(powers.hi)))
        pre_col = CDD(DD(pre.re.hi[:, None] * np.ones((1, box + 1)),
                         pre.re.lo[:, None] * np.ones((1, box + 1))),
                      DD(pre.im.hi[:, None] * np.ones((1, box + 1)),
                         pre.im.lo[:, None] * np.ones((1, box + 1))))
        mats.append(_dd.cdd_mul(pre_col, pm))
    return mats


def _cdd_t(x: CDD) -> CDD:
    return CDD(DD(x.re.hi.T, x.re.lo.T), DD(x.im.hi.T, x.im.lo.T))


def _mtilde_grid_dd(nu: tuple, y_axes: list, box: int) -> CDD:
    """M-tilde on the tensor grid of the axis lists.

    Grids are supported at rank <= 2 (all internal consumers); higher ranks
    evaluate single points by contracting one axis at a time."""
    n = len(nu)
    if (box + 1) ** n > 40_000_000:
        raise TailNotConverged(
            f"required truncation table (box {box}, rank {n}) is too large")
    table = _scaled_table_dd(n, nu, box)
    b1 = box + 1
    mats = _scaled_power_matrices(nu, y_axes, box)
    if n == 1:
        c = table.reshape(b1, 1)
        return cdd_matmul(mats[0], c).reshape(len(y_axes[0]))
    if n == 2:
        c = table.reshape(b1, b1)
        a = cdd_matmul(mats[0], c)  # (N1, b1)
        return cdd_matmul(a, _cdd_t(mats[1]))  # (N1, N2)
    if any(len(ax) != 1 for ax in y_axes):
        raise ValueError("tensor-grid series evaluation supports rank <= 2")
    x = table
    for axis in range(n - 1, -1, -1):
        x = cdd_matmul(x.reshape(b1 ** axis, b1), _cdd_t(mats[axis]))
    return x.reshape((1,) * n)


@lru_cache(maxsize=3)
def _degree_grid(n: int, box: int) -> np.ndarray:
    deg = np.zeros((box + 1,) * n, dtype=np.float64)
    ar = np.arange(box + 1, dtype=np.float64)
    for i in range(n):
        shape = [1] * n
        shape[i] = box + 1
        deg = deg + ar.reshape(shape)
    return deg


@lru_cache(maxsize=3)
def _lgamma_of_deg(n: int, box: int) -> np.ndarray:
    lg = _lgamma(np.arange(n * box + 1, dtype=float) + 1.0)
    return lg[_degree_grid(n, box).astype(np.int64)]


def _tail_series(cu: float, r: float, box: int, n: int) -> float:
    """sum_{k > box} (#{|m| = k}) (cu r)^k / k!, evaluated in logs."""
    x = max(cu * r, 1e-300)
    lx = math.log(x)
    kmax = int(max(3 * (box + 1), 2 * x + 60))
    ks = np.arange(box + 1, kmax, dtype=float)
    logc = _lgamma(ks + n) - _lgamma(ks + 1.0) - _lgamma(float(n))
    logt = logc + ks * lx - _lgamma(ks + 1.0)
    m = logt.max()
    if m < -700.0:
        return 0.0
    return float(np.exp(m) * np.exp(logt - m).sum())


def _lgamma(x) -> np.ndarray:
    return np.real(_loggamma_vec(np.asarray(x, dtype=complex)))


@lru_cache(maxsize=8192)
def _mtilde_point_cached(nu: tuple, y: tuple, box: int) -> tuple:
    """(value re_hi, re_lo, im_hi, im_lo, max |term|, growth constant)."""
    n = len(nu)
    axes = [np.array([yi]) for yi in y]
    val = _mtilde_grid_dd(nu, axes, box)
    flat_idx = (0,) * val.re.hi.ndim
    v = (float(val.re.hi[flat_idx]), float(val.re.lo[flat_idx]),
         float(val.im.hi[flat_idx]), float(val.im.lo[flat_idx]))
    maxterm, cu = _table_diagnostics(nu, y, box)
    return (*v, maxterm, cu)


@lru_cache(maxsize=8192)
def _table_diagnostics(nu: tuple, y: tuple, box: int) -> tuple:
    """(max |series term| at y, fitted growth constant) from the scaled table.

    The growth constant is fitted over the outer degree shells (|m| >= box/2):
    the tail only involves large degrees, and the small-m transients would
    inflate the constant by orders of magnitude."""
    n = len(nu)
    scaled = _scaled_table_dd(n, nu, box)
    log_ct = np.log(np.maximum(
        np.hypot(scaled.re.hi, scaled.im.hi), 1e-320)).reshape((box + 1,) * n)
    log_c = log_ct - _log_factorial_grid(n, box)  # log |c_m|

    deg = _degree_grid(n, box)
    with np.errstate(divide="ignore", invalid="ignore"):
        fit = (log_c + _lgamma_of_deg(n, box)) / deg
    fit[deg < max(box / 2.0, 1.0)] = -np.inf
    cu = 2.0 * float(np.exp(fit.max()))  # safety factor 2

    psum = np.cumsum(np.asarray(nu))
    logmag = log_c.copy()
    pre_log = 0.0
    for i in range(n):
        lx = 2.0 * math.log(math.pi * y[i])
        m_i = np.arange(box + 1) * lx
        shape = [1] * n
        shape[i] = box + 1
        logmag = logmag + m_i.reshape(shape)
        pre_log += 2.0 * psum[i].real * math.log(math.pi * y[i])
    maxterm = math.exp(min(float(logmag.max()) + pre_log, 700.0))
    return maxterm, cu


def _initial_box(r: float, n: int) -> int:
    return min(MAX_BOX, int(math.ceil(r + 6.0 * math.sqrt(r) + 18)))


def _qd_parts(x) -> tuple:
    """Exact 4-float decomposition of an mpmath real."""
    import mpmath as mp

    out = []
    rem = x
    for _ in range(4):
        d = float(rem)
        out.append(d)
        rem = rem - mp.mpf(d)
    return tuple(out)


def _w3_orbit_term_qd(p: tuple, y: tuple, box: int) -> tuple:
    """One Weyl term of the rank-3 sum in quad-double + mpmath.

    Returns (term as mpmath mpc, max log|series term| incl. prefactor,
    growth-constant fit, qmin).  The table fill and power contraction run in
    the compiled quad-double kernel; the Gamma product and the final scalar
    multiplies run in mpmath (a few hundred scalar operations).
    """
    import mpmath as mp

    from . import _ddfill

    n = len(p)
    pm = [mp.mpc(v.real, v.imag) for v in p]
    lin = np.zeros((n, 4))
    lin_im = np.zeros((n, 4))
    for i in range(n):
        d = pm[i] - pm[i + 1] if i < n - 1 else pm[i]
        lin[i] = _qd_parts(d.real)
        lin_im[i] = _qd_parts(d.imag)
    px_re = np.zeros((n, box + 1, 4))
    px_im = np.zeros((n, box + 1, 4))
    for i in range(n):
        x = (mp.pi * mp.mpf(y[i])) ** 2
        psum = mp.fsum(pm[: i + 1])
        cur = mp.exp(2 * psum * mp.log(mp.pi * mp.mpf(y[i])))
        for m in range(box + 1):
            if m > 0:
                cur = cur * x / m
            px_re[i, m] = _qd_parts(cur.real)
            px_im[i, m] = _qd_parts(cur.imag)
    lf = np.zeros(box + 1)
    if box > 0:
        lf[1:] = np.cumsum(np.log(np.arange(1, box + 1, dtype=float)))
    lgam = _lgamma(np.arange(n * box + 1, dtype=float) + 1.0)
    lpx = np.log(np.hypot(px_re[:, :, 0], px_im[:, :, 0]) + 1e-320)
    n_simplex = (box + 1) * (box + 2) * (box + 3) // 6
    tab = np.zeros((n_simplex, 8))
    s_re, s_im, qmin, maxlog, fitlog = _ddfill.fill_contract_qd3(
        box, lin, lin_im, px_re, px_im, lpx, lf, lgam, tab)
    mval = mp.mpc(mp.fsum([mp.mpf(v) for v in s_re]),
                  mp.fsum([mp.mpf(v) for v in s_im]))
    # Gamma_n(p) in mpmath
    g = mp.mpc(1)
    for i in range(n):
        for j in range(i + 1, n):
            g *= mp.gamma(-pm[i] - pm[j]) * mp.gamma(-pm[i] + pm[j])
    for i in range(n):
        g *= mp.gamma(-2 * pm[i])
    term = g * mval
    return term, maxlog + float(mp.log(abs(g))), 2.0 * math.exp(fitlog), qmin


def m_tilde(n: int, nu: Sequence[complex], y: Sequence[float], tol: float = 1e-12,
            box: int | None = None, max_box: int = MAX_BOX) -> SeriesValue:
    """Fundamental series at one radial point, with tail certification.

    ``tol`` is relative to the returned value.  Raises TailNotConverged when
    the bound stays above tolerance at ``max_box``.
    """
    nu = as_nu(nu)
    y = as_y(y)
    if len(nu) != n or len(y) != n:
        raise ValueError("rank mismatch")
    r = max((math.pi * yi) ** 2 for yi in y)
    b = box if box is not None else _initial_box(r, n)
    while True:
        re_hi, re_lo, im_hi, im_lo, maxterm, cu = _mtilde_point_cached(nu, y, b)
        value = complex(re_hi + re_lo, im_hi + im_lo)
        pre_mod = 1.0
        psum = np.cumsum(np.asarray(nu))
        for i in range(n):
            pre_mod *= (math.pi * y[i]) ** (2.0 * psum[i].real)
        tail = _tail_series(cu, r, b, n) * pre_mod
        if tail <= tol * max(abs(value), 1e-300) or box is not None:
            return SeriesValue(value=value, truncation_order=b, tail_bound=tail,
                               terms_summed=(b + 1) ** n)
        if b >= max_box:
            raise TailNotConverged(
                f"series tail bound {tail:.3e} above tol at box {b}")
        b = min(max_box, max(b + 8, _solve_box(cu, r, n, tol * max(abs(value), 1e-300) / pre_mod)))


def _solve_box(cu: float, r: float, n: int, target: float) -> int:
    b = 8
    while b < MAX_BOX and _tail_series(cu, r, b, n) > target:
        b += 8
    return b


_GAMMA_N_ARGS_DOC = "pairs (-nu_i - nu_j), (-nu_i + nu_j) for i<j and (-2 nu_i)"


def _gamma_n_args(nu: tuple) -> tuple[np.ndarray, list]:
    n = len(nu)
    args, names = [], []
    for i in range(n):
        for j in range(i + 1, n):
            args.append(-nu[i] - nu[j])
            names.append(f"Gamma(-nu_{i + 1} - nu_{j + 1})")
            args.append(-nu[i] + nu[j])
            names.append(f"Gamma(-nu_{i + 1} + nu_{j + 1})")
    for i in range(n):
        args.append(-2.0 * nu[i])
        names.append(f"Gamma(-2 nu_{i + 1})")
    return np.array(args, dtype=complex), names


def gamma_n(nu: Sequence[complex]) -> GammaFactor:
    """Log-space product of the n^2 Gamma factors weighting the Weyl terms."""
    nu = as_nu(nu)
    args, names = _gamma_n_args(nu)
    d = pole_distance(args)
    if np.any(d < POLE_TOL):
        raise PoleError(f"{names[int(np.argmin(d))]} is at a pole")
    return GammaFactor(complex(np.sum(_loggamma_vec(args))))


@lru_cache(maxsize=8192)
def _gamma_n_dd_cached(nu: tuple) -> tuple:
    args, names = _gamma_n_args(nu)
    d = pole_distance(args)
    if np.any(d < POLE_TOL):
        raise PoleError(f"{names[int(np.argmin(d))]} is at a pole")
    # the arguments are sums of exact doubles; form them error-free in dd
    # (pre-rounded complex128 sums would cap every Weyl term at 1e-16)
    scalars = []
    n = len(nu)
    for i in range(n):
        for j in range(i + 1, n):
            scalars.append(_dd.to_cdd(-nu[i]) + _dd.to_cdd(-nu[j]))
            scalars.append(_dd.to_cdd(-nu[i]) + _dd.to_cdd(nu[j]))
    for i in range(n):
        scalars.append(_dd.to_cdd(-2.0 * nu[i]))
    args_dd = CDD(DD(np.array([s.re.hi for s in scalars]),
                     np.array([s.re.lo for s in scalars])),
                  DD(np.array([s.im.hi for s in scalars]),
                     np.array([s.im.lo for s in scalars])))
    lg = cdd_loggamma(args_dd)
    total = _dd.cdd_sum(lg.reshape(-1))
    v = cdd_exp(CDD(DD(np.array(total.re.hi), np.array(total.re.lo)),
                    DD(np.array(total.im.hi), np.array(total.im.lo))))
    return (float(v.re.hi), float(v.re.lo), float(v.im.hi), float(v.im.lo))


def _weyl_sum_dd(orbit: list, gammas: list, y: tuple, b: int, r: float):
    """One double-double pass over the orbit at truncation order b."""
    n = len(y)
    total = _dd.to_cdd(0.0)
    maxterm = 0.0
    tail_total = 0.0
    cu_max = 1.0
    for p, g4 in zip(orbit, gammas):
        re_hi, re_lo, im_hi, im_lo, mt, cu = _mtilde_point_cached(p, y, b)
        mval = CDD(DD(np.array(re_hi), np.array(re_lo)),
                   DD(np.array(im_hi), np.array(im_lo)))
        gval = CDD(DD(np.array(g4[0]), np.array(g4[1])),
                   DD(np.array(g4[2]), np.array(g4[3])))
        gmod = abs(complex(g4[0], g4[2]))
        total = total + _dd.cdd_mul(gval, mval)
        maxterm = max(maxterm, gmod * mt)
        tail_total += gmod * _pre_mod(p, y) * _tail_series(cu, r, b, n)
        cu_max = max(cu_max, cu)
    value = complex(float(total.re.hi) + float(total.re.lo),
                    float(total.im.hi) + float(total.im.lo))
    return value, maxterm, tail_total, cu_max


def _weyl_sum_qd3(orbit: list, y: tuple, b: int, r: float):
    """Quad-double + mpmath pass for rank 3 (see _w3_orbit_term_qd)."""
    import mpmath as mp

    n = 3
    with mp.workdps(60):
        terms = []
        maxterm = 0.0
        tail_total = 0.0
        cu_max = 1.0
        for p in orbit:
            term, logterm, cu, _qmin = _w3_orbit_term_qd(p, y, b)
            terms.append(term)
            maxterm = max(maxterm, math.exp(min(logterm, 700.0)))
            g4 = _gamma_n_dd_cached(p)
            tail_total += abs(complex(g4[0], g4[2])) * _pre_mod(p, y) * _tail_series(cu, r, b, n)
            cu_max = max(cu_max, cu)
        total = mp.fsum([t.real for t in terms]) + 1j * mp.fsum([t.imag for t in terms])
        value = complex(total)
    return value, maxterm, tail_total, cu_max


def _pre_mod(p: tuple, y: tuple) -> float:
    psum = np.cumsum(np.asarray(p))
    out = 1.0
    for i in range(len(y)):
        out *= (math.pi * y[i]) ** (2.0 * psum[i].real)
    return out


def w_tilde_series(n: int, nu: Sequence[complex], y: Sequence[float],
                   tol: float = 1e-11, max_box: int = MAX_BOX,
                   box: int | None = None) -> SeriesValue:
    """Weyl-symmetrized series; the orbit is enumerated canonically so the
    result is independent (bitwise) of which orbit representative is passed.

    Internal precision: double-double (~31 digits) at rank <= 2, quad-double
    plus an mpmath factor layer (~60 digits) at rank 3, where the sum cancels
    through ~37 digits at unit radius.  Emits CatastrophicCancellation when
    max|term| / |result| exceeds 1e12, i.e. whenever more than 12 digits
    cancel; the internal headroom is reported in the message.

    An explicit ``box`` skips the certified-tail loop and evaluates at that
    fixed truncation order.
    """
    nu = as_nu(nu)
    y = as_y(y)
    if len(nu) != n or len(y) != n:
        raise ValueError("rank mismatch")
    orbit = weyl_orbit(nu)
    gammas = [_gamma_n_dd_cached(p) for p in orbit]
    r = max((math.pi * yi) ** 2 for yi in y)
    use_qd = (n == 3) and _HAVE_QD
    evaluate = (lambda b: _weyl_sum_qd3(orbit, y, b, r)) if use_qd else \
        (lambda b: _weyl_sum_dd(orbit, gammas, y, b, r))

    if box is not None:
        value, maxterm, tail_total, _cu = evaluate(box)
        return _finish_series(value, box, tail_total, maxterm, len(orbit), n)

    # size the truncation with cheap double-double rounds first
    b = _initial_box(r, n)
    converged = False
    for _round in range(10):
        value, maxterm, tail_total, cu_max = _weyl_sum_dd(orbit, gammas, y, b, r)
        # at rank 3 the dd value can sit at the noise floor; demand extra
        # decades of tail headroom so the qd pass below lands in one shot
        floor = tol * max(abs(value), 1e-300) * (1e-11 if use_qd else 1.0)
        if tail_total <= floor:
            converged = True
            break
        if b >= max_box:
            break
        scale = tail_total / max(_tail_series(cu_max, r, b, n), 1e-300)
        want = _solve_box(cu_max, r, n, 0.3 * floor / max(scale, 1e-300))
        # never more than double per round: the growth-constant fit tightens
        # as the box grows, so early rounds systematically overshoot
        b = min(max_box, max(b + 8, min(want, 2 * b + 16)))
    if not converged:
        raise TailNotConverged(
            f"Weyl-sum tail bound {tail_total:.3e} above tol at box {b}")
    if use_qd:
        for _pass in range(3):
            value, maxterm, tail_total, cu_max = _weyl_sum_qd3(orbit, y, b, r)
            if tail_total <= tol * max(abs(value), 1e-300):
                break
            if b >= max_box:
                raise TailNotConverged(
                    f"Weyl-sum tail bound {tail_total:.3e} above tol at box {b}")
            scale = tail_total / max(_tail_series(cu_max, r, b, n), 1e-300)
            b = min(max_box, _solve_box(
                cu_max, r, n,
                0.3 * tol * max(abs(value), 1e-300) / max(scale, 1e-300)))
    return _finish_series(value, b, tail_total, maxterm, len(orbit), n)


def _finish_series(value: complex, b: int, tail_total: float, maxterm: float,
                   orbit_size: int, n: int) -> SeriesValue:
    ratio = maxterm / max(abs(value), 1e-300)
    digits = 60.0 if n == 3 and _HAVE_QD else 31.0
    if ratio > CANCELLATION_WARN_RATIO:
        warnings.warn(
            f"Weyl sum cancellation ratio {ratio:.2e} (> {CANCELLATION_WARN_RATIO:.0e}); "
            f"~{max(0.0, digits - math.log10(ratio)):.0f} digits remain of the internal "
            "extended-precision accumulation",
            CatastrophicCancellation, stacklevel=3)
    return SeriesValue(value=value, truncation_order=b, tail_bound=tail_total,
                       terms_summed=orbit_size * (b + 1) ** n,
                       cancellation_ratio=ratio)


def _have_qd() -> bool:
    from . import _ddfill

    if not _ddfill.HAS_NUMBA:
        return False
    try:
        import mpmath  # noqa: F401
    except Exception:  # pragma: no cover
        return False
    return True


_HAVE_QD = _have_qd()


def w_full(n: int, nu: Sequence[complex], y: Sequence[float], tol: float = 1e-11) -> complex:
    """rho-shifted value: prod_i y_i^{i(n - i/2)} times the flat series."""
    y = as_y(y)
    sv = w_tilde_series(n, nu, y, tol)
    shift = 1.0
    for i in range(1, n + 1):
        shift *= y[i - 1] ** rho_exponent(n, i)
    return shift * sv.value


def _grid_box(nu: tuple, r: float, floor_log: float = -62.0) -> int:
    """Truncation order for grid evaluation: grow until the boundary shell
    of the scaled table is ``floor_log`` (in e-folds) below the peak term at
    the largest argument.  Empirical (per-table) rather than the sup-form
    bound, which would be far too pessimistic for absolute-accuracy use."""
    n = len(nu)
    lx = math.log(max(r, 1e-10))
    b = int(2.8 * math.sqrt(r) + 40)
    while True:
        scaled = _scaled_table_dd(n, nu, b)
        log_ct = np.log(np.maximum(
            np.hypot(scaled.re.hi, scaled.im.hi), 1e-320)).reshape((b + 1,) * n)
        logterm = log_ct - _log_factorial_grid(n, b) + _degree_grid(n, b) * lx
        peak = float(logterm.max())
        boundary = np.zeros((b + 1,) * n, dtype=bool)
        for i in range(n):
            sl = [slice(None)] * n
            sl[i] = b
            boundary[tuple(sl)] = True
        bmax = float(logterm[boundary].max())
        if bmax <= peak + floor_log or b >= MAX_BOX + 300:
            return b
        b = int(b * 1.3) + 8


def w_tilde_grid(nu: Sequence[complex], y_axes: list, box: int | None = None) -> np.ndarray:
    """Weyl-symmetrized series on a tensor grid (rank 1 or 2); complex128.

    Used as the inner factor of the recursive quadratures and the direct
    Mellin transform.  Accuracy is absolute, limited by the double-double
    core: abs error ~ max-term * 1e-31 per point.
    """
    nu = as_nu(nu)
    n = len(nu)
    axes = [np.asarray(ax, dtype=float) for ax in y_axes]
    if len(axes) != n:
        raise ValueError("rank mismatch")
    r = max(float(np.max((math.pi * ax) ** 2)) for ax in axes)
    orbit = weyl_orbit(nu)
    if box is None:
        box = max(_grid_box(p, r) for p in orbit)
    total = None
    for p in orbit:
        g4 = _gamma_n_dd_cached(p)
        gval = CDD(DD(np.array(g4[0]), np.array(g4[1])),
                   DD(np.array(g4[2]), np.array(g4[3])))
        mt = _mtilde_grid_dd(p, axes, box)
        term = _dd.cdd_mul(gval, mt)
        total = term if total is None else total + term
    return total.to_complex()


# -- Gamma-product normalizations -----------------------------------------------


def hc_c_function(nu: Sequence[complex]) -> GammaFactor:
    """The Gamma-quotient weight attached to each Weyl chamber direction in
    the moderate-growth expansion, including its explicit constant."""
    nu = as_nu(nu)
    n = len(nu)
    args_num, args_den = [], []
    for i in range(n):
        for j in range(i + 1, n):
            args_num += [nu[i] - nu[j], nu[i] + nu[j]]
            args_den += [nu[i] - nu[j] + 0.5, nu[i] + nu[j] + 0.5]
    for i in range(n):
        args_num.append(2.0 * nu[i])
        args_den.append(2.0 * nu[i] + 0.5)
    allargs = np.array(args_num + args_den, dtype=complex)
    d = pole_distance(allargs)
    if np.any(d < POLE_TOL):
        raise PoleError(f"c-function Gamma argument {allargs[int(np.argmin(d))]} at a pole")
    log = (n / 2.0) * math.log(2.0) + (n * (n + 1) / 4.0) * math.log((4 * n - 2) * math.pi)
    log = log + complex(np.sum(_loggamma_vec(np.array(args_num, dtype=complex))))
    log = log - complex(np.sum(_loggamma_vec(np.array(args_den, dtype=complex))))
    return GammaFactor(log)


def w_from_j_prefactor(n: int, nu: Sequence[complex]) -> GammaFactor:
    """Normalization converting the moderate-growth integral solution into
    the Gamma-free symmetrized series (log space)."""
    nu = as_nu(nu)
    if len(nu) != n:
        raise ValueError("rank mismatch")
    args = []
    for i in range(n):
        for j in range(i + 1, n):
            args += [nu[i] - nu[j] + 0.5, nu[i] + nu[j] + 0.5]
    for i in range(n):
        args.append(2.0 * nu[i] + 0.5)
    arr = np.array(args, dtype=complex)
    d = pole_distance(arr)
    if np.any(d < POLE_TOL):
        raise PoleError(f"prefactor Gamma argument {arr[int(np.argmin(d))]} at a pole")
    log = -(n / 2.0) * math.log(2.0) - (n * (n + 1) / 4.0) * math.log((4 * n - 2) * math.pi)
    psum = np.cumsum(np.asarray(nu))
    log = log - 2.0 * complex(np.sum(psum)) * math.log(math.pi)
    log = log + complex(np.sum(_loggamma_vec(arr)))
    return GammaFactor(log)


def default_eta(n: int) -> tuple:
    """Character scales fixed throughout: 1 except 1/sqrt(2) in the last slot."""
    return (1.0,) * (n - 1) + (2.0 ** -0.5,)


def _log_gamma_simple_reflection(i: int, nu: tuple, eta: tuple) -> complex:
    # swap generator: the Gamma quotient depends on the root pairing
    # nu_i - nu_{i+1}; consistency forces this (see the functional-equation
    # ratio test in the suite), and it makes all reduced words agree
    n = len(nu)
    if i < n:
        a = -nu[i - 1] + nu[i] + 0.5
        b = nu[i - 1] - nu[i] + 0.5
        base = math.pi * eta[i - 1]
        expo = 2.0 * (nu[i - 1] - nu[i])
    else:
        a = -2.0 * nu[-1] + 0.5
        b = 2.0 * nu[-1] + 0.5
        base = math.sqrt(2.0) * math.pi * eta[-1]
        expo = 4.0 * nu[-1]
    d = pole_distance(np.array([a, b]))
    if np.any(d < POLE_TOL):
        raise PoleError(f"cocycle Gamma argument at a pole (generator {i})")
    if base <= 0.0:
        raise ValueError("character scales must be positive")
    lg = _loggamma_vec(np.array([a, b], dtype=complex))
    return expo * math.log(base) + complex(lg[0] - lg[1])


def jacquet_gamma(word: Sequence[int], nu: Sequence[complex],
                  eta: Sequence[float] | None = None) -> GammaFactor:
    """Functional-equation factor along a reduced word [i_1, ..., i_k].

    Built right-to-left by the cocycle rule: processing generator i against
    the current translate multiplies in its simple-reflection value, then
    applies the reflection to the parameter.  Any reduced word of the same
    element gives the same value (cocycle consistency).
    """
    from .rootdata import simple_reflection, weyl_act

    nu = as_nu(nu)
    n = len(nu)
    eta = tuple(float(e) for e in (eta if eta is not None else default_eta(n)))
    if len(eta) != n:
        raise ValueError("eta must have length n")
    log = 0.0 + 0.0j
    current = nu
    for idx in reversed([int(i) for i in word]):
        log += _log_gamma_simple_reflection(idx, current, eta)
        current = weyl_act(simple_reflection(n, idx), current)
    return GammaFactor(log)
