"""Scalar special-function kernels on the complex plane.

Everything downstream is assembled from four primitives: log-Gamma, the
Pochhammer symbol, the modified Bessel function K of complex order, and the
Gauss hypergeometric sum at unit argument.  All of them work in IEEE double
precision; log-Gamma is a Lanczos approximation (g = 7, 9 terms) with the
reflection formula below Re z = 1/2, and K is the cosh-kernel Laplace integral

    K_s(z) = int_0^inf exp(-z cosh t) cosh(s t) dt,   Re z > 0,

evaluated by the trapezoid rule in t (the integrand decays doubly
exponentially, so uniform nodes converge geometrically).

All functions are pure; there is no global mutable state.
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np

from .errors import DivergentSeries, NonConvergence, PoleError

#: distance to a non-positive integer below which PoleError fires
POLE_TOL = 1e-10

# Lanczos coefficients, g = 7, 9 terms
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_HALF_LOG_2PI = 0.9189385332046727


class LogGammaValue(NamedTuple):
    """Gamma(z) stored as log modulus and phase so products never overflow.

    ``exp(log_modulus) * exp(1j*phase)`` reconstructs Gamma(z) whenever the
    modulus is representable.  The phase is the imaginary part of the
    analytically continued log-Gamma for Re z >= 1/2 and inherits the
    reflection formula's branch otherwise; code that multiplies Gamma factors
    only ever exponentiates sums of these, which is branch-insensitive.
    """

    log_modulus: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.exp(complex(self.log_modulus, self.phase))

    def as_complex(self) -> complex:
        return complex(self.log_modulus, self.phase)


def pole_distance(z) -> np.ndarray:
    """Distance from z (arraylike) to the set of non-positive integers."""
    z = np.asarray(z, dtype=complex)
    nearest = np.minimum(np.round(z.real), 0.0)
    return np.abs(z - nearest)


def _check_poles(z) -> None:
    d = pole_distance(z)
    if np.any(d < POLE_TOL):
        bad = np.asarray(z, dtype=complex).ravel()[np.argmin(np.atleast_1d(d))]
        raise PoleError(f"Gamma argument {bad} within {POLE_TOL} of a non-positive integer")


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log(sin(pi z)), safe for large |Im z| where sin overflows."""
    z = np.asarray(z, dtype=complex)
    w = np.pi * z
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(w.imag) < 20.0
    out[small] = np.log(np.sin(w[small]))
    big = ~small
    if np.any(big):
        wb = w[big]
        # sin w = (e^{iw} - e^{-iw}) / 2i; factor out the dominant exponential
        up = wb.imag > 0
        lead = np.where(up, -1j * wb, 1j * wb)
        rest = np.log1p(-np.exp(np.where(up, 2j * wb, -2j * wb)))
        sign = np.where(up, 1j * np.pi / 2, -1j * np.pi / 2)  # log(-1/2i) vs log(1/2i)
        out[big] = lead + rest - math.log(2.0) + sign
    return out


def _loggamma_vec(z) -> np.ndarray:
    """Vectorized complex log-Gamma (analytic continuation flavour)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.shape == ()
    z = np.atleast_1d(z)
    _check_poles(z)
    out = np.empty(z.shape, dtype=complex)
    refl = z.real < 0.5
    work = np.where(refl, 1.0 - z, z)

    acc = np.full(work.shape, _LANCZOS[0], dtype=complex)
    for k, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (work + (k - 1))
    t = work + _LANCZOS_G - 0.5
    lg = _HALF_LOG_2PI + (work - 0.5) * np.log(t) - t + np.log(acc)

    out[~refl] = lg[~refl]
    if np.any(refl):
        zr = z[refl]
        out[refl] = math.log(math.pi) - _log_sin_pi(zr) - lg[refl]
    return out[0] if scalar else out


def log_gamma(z: complex) -> LogGammaValue:
    """Overflow-safe log of Gamma(z).

    Raises
    ------
    PoleError
        If z is within ``POLE_TOL`` of a non-positive integer.
    """
    v = _loggamma_vec(complex(z))
    return LogGammaValue(float(v.real), float(v.imag))


def gamma(z: complex) -> complex:
    """Gamma(z); convenience wrapper around :func:`log_gamma`."""
    return log_gamma(z).value


def pochhammer(a: complex, k: int) -> complex:
    """Rising factorial (a)_k = Gamma(a+k)/Gamma(a) for integer k.

    Direct products up to |k| = 64, log-Gamma differences beyond.  Negative k
    goes through (a)_{-k} = (-1)^k / (1-a)_k, which raises PoleError when the
    reflected product vanishes.
    """
    a = complex(a)
    k = int(k)
    if k == 0:
        return 1.0 + 0.0j
    if k > 0:
        if k <= 64:
            out = 1.0 + 0.0j
            for j in range(k):
                out *= a + j
            return out
        return cmath.exp(_loggamma_vec(a + k) - _loggamma_vec(a))
    # k < 0: (a)_{-kk} = 1 / ((a-1)(a-2)...(a-kk))
    kk = -k
    if kk <= 64:
        den = 1.0 + 0.0j
        for j in range(1, kk + 1):
            den *= a - j
        if abs(den) < POLE_TOL:
            raise PoleError(f"pochhammer({a}, {k}) hits a pole of the reflection product")
        return 1.0 / den
    return cmath.exp(_loggamma_vec(a + k) - _loggamma_vec(a))


def _bessel_k_window(order: complex, re_arg: float) -> float:
    """Truncation point T with exp(-Re(z) cosh T + |Im s| T) below 1e-18 peak."""
    mu = abs(order.imag)
    t = 1.0
    for _ in range(64):
        t_new = math.acosh(1.0 + (46.0 + mu * t) / re_arg)
        if abs(t_new - t) < 1e-3:
            break
        t = t_new
    return t_new + 0.5


def bessel_k_many(order: complex, args: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """K_order at a batch of arguments with Re > 0 (shared refinement).

    Entries whose value underflows relative to the batch maximum are held to
    an absolute criterion; otherwise denormal tails would block convergence.
    """
    order = complex(order)
    args = np.asarray(args, dtype=complex)
    re_min = float(args.real.min())
    if re_min <= 0.0:
        raise ValueError("bessel_k requires Re(arg) > 0")
    T = _bessel_k_window(order, re_min)
    flat = args.ravel()
    prev = None
    h = 0.5
    for _ in range(8):
        m = int(math.ceil(T / h))
        t = np.arange(m + 1) * h
        w = np.full(m + 1, h)
        w[0] = 0.5 * h
        ct = np.cosh(t)
        cs = np.cosh(order * t) * w
        val = np.empty(flat.shape, dtype=complex)
        block = max(1, 4_000_000 // (m + 1))
        for lo in range(0, flat.size, block):
            z = flat[lo:lo + block]
            val[lo:lo + block] = np.exp(-np.multiply.outer(z, ct)) @ cs
        if prev is not None:
            scale = np.maximum(np.abs(val), 1e-25 * float(np.abs(val).max()) + 1e-300)
            if float(np.max(np.abs(val - prev) / scale)) < rtol:
                return val.reshape(args.shape)
        prev = val
        h *= 0.5
    raise NonConvergence("bessel_k refinement did not stabilize")


def bessel_k(order: complex, arg: complex) -> complex:
    """Modified Bessel K of complex order, Re(arg) > 0.

    Symmetric in the order by construction (the kernel is cosh(order*t)).

    Raises
    ------
    NonConvergence
        If successive trapezoid refinements disagree beyond tolerance.
    """
    return complex(bessel_k_many(order, np.array([arg]))[0])


def gauss_2f1_unit(a: complex, b: complex, c: complex) -> complex:
    """2F1(a, b; c; 1) via the Gamma-ratio closed form."""
    a, b, c = complex(a), complex(b), complex(c)
    lg = _loggamma_vec(np.array([c - a - b, c, c - a, c - b]))
    return cmath.exp(lg[0] + lg[1] - lg[2] - lg[3])


def gauss_2f1_unit_series(a: complex, b: complex, c: complex,
                          max_terms: int = 600_000, tol: float = 0.0) -> complex:
    """Partial sums of the defining series; diagnostic companion.

    Terminates exactly when a or b is a non-positive integer.  Otherwise
    requires Re(c - a - b) > 0 (else the series diverges and the closed form
    is the analytic continuation).
    """
    a, b, c = complex(a), complex(b), complex(c)

    def _nonpos_int(x: complex) -> bool:
        return abs(x.imag) < POLE_TOL and x.real < 0.5 and abs(x.real - round(x.real)) < POLE_TOL

    terminating = _nonpos_int(a) or _nonpos_int(b)
    if not terminating and (c - a - b).real <= 0.0:
        raise DivergentSeries("2F1(1) series requires Re(c-a-b) > 0")
    if terminating:
        n_terms = int(round(-min(a.real if _nonpos_int(a) else 0.0,
                                 b.real if _nonpos_int(b) else 0.0)))
        max_terms = n_terms + 1
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (1.0 + k))
        total += term
        if tol and abs(term) < tol * abs(total) and k > 8:
            break
    return total
