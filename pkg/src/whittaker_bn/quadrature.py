"""Recursive integral representations, evaluated on log-variable grids.

Both routes substitute t = e^v (resp. u = e^w) on every half-line factor, so
the kernels exp(-a t - 1/t) become doubly exponentially decaying functions of
v and the plain trapezoid rule on the window |v| <= u_cutoff converges
geometrically.  Levels halve the step; the reported error estimate is
|level L - level L-1| plus a crude boundary-slab truncation bound.

* exponential-kernel route: the (2n-1)-fold integral with coupling factors
  exp(-(pi y_i)^2 (t_i/t_{i+1}) u_i).  On the uniform log grid every coupling
  depends on an integer *combination* of node indices, so the whole tensor
  sum collapses to a chain of 1-d correlations: O(N^2) work at rank 2 and
  O(N^3) at rank 3 instead of N^3 / N^5 naive sums.  The inner rank-(n-1)
  factor enters through the same index-difference trick.

* K-Bessel route: the (n-1)-fold integral with kernel
  prod_i K_{2 nu_n}(2 pi y_i sqrt((1+u_{i-1})(1+1/u_i))) (u_0 = 1/u_n = 0)
  against the rank-(n-1) value at (y_2 sqrt(u_1/u_2), ..., y_n sqrt(u_{n-1})).

The rank-1 base value is 2 K_{2 nu_1}(2 pi y_1) in both pictures.

Inner factors: at rank 2 the inner rank-1 value *is* the Bessel base case;
'series' and 'recurse' coincide.  At rank 3 the inner rank-2 factor is
evaluated by the series route; full quadrature recursion is not supported
there (dimension and error control), per the documented policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InnerEvalError, NonConvergence, SizeError
from .reports import EvalReport
from .rootdata import as_nu, as_y
from .series import w_tilde_grid
from .specfun import bessel_k_many, _loggamma_vec

#: arguments 2 pi y' above this contribute below 1e-19 and are masked
_INNER_ARG_CAP = 45.0


@dataclass
class QuadratureConfig:
    """Numerical-control knobs the integral representations leave open."""

    levels: int = 5
    abs_tol: float = 1e-13
    rel_tol: float = 1e-7
    u_cutoff: float = 12.0
    inner_route: str = "series"  # "series" | "recurse"
    base_nodes: int = 48  # nodes across [-u_cutoff, u_cutoff] at level 0

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.inner_route not in ("series", "recurse"):
            raise ValueError("inner_route must be 'series' or 'recurse'")

    def grid(self, level: int) -> tuple[np.ndarray, float]:
        m = self.base_nodes * 2 ** level
        h = 2.0 * self.u_cutoff / m
        return -self.u_cutoff + h * np.arange(m + 1), h


def _bessel_base(nu1: complex, y1: float) -> complex:
    return 2.0 * complex(bessel_k_many(2.0 * nu1, np.array([2.0 * math.pi * y1]))[0])


def _refine(values: list, trunc: float, cfg: QuadratureConfig):
    err = abs(values[-1] - values[-2]) + trunc
    ok = err <= max(cfg.abs_tol, cfg.rel_tol * abs(values[-1]))
    return err, ok


def _w2_exp_level(nu: tuple, y: tuple, cfg: QuadratureConfig, level: int) -> tuple[complex, float]:
    """Rank-2 exponential-kernel integrand summed by index-difference
    correlations; returns (value, boundary truncation estimate)."""
    nu1, nu2 = nu
    y1, y2 = y
    v, h = cfg.grid(level)
    m = v.size
    p1 = (math.pi * y1) ** 2
    p2 = (math.pi * y2) ** 2
    ev = np.exp(v)
    emv = np.exp(-v)
    a = np.exp(-p1 * ev - emv + 2.0 * nu2 * v)          # t_1 factor
    b = np.exp(-p2 * ev - emv + nu2 * v)                # t_2 factor
    c = np.exp(-emv + nu2 * v)                          # u factor
    # inner rank-1 value on the difference grid v_2 - w
    dgrid = h * np.arange(-(m - 1), m)
    kin = 2.0 * bessel_k_many(2.0 * nu1, 2.0 * math.pi * y2 * np.exp(dgrid / 2.0))
    # coupling on the triple-combination grid v_1 - v_2 + w
    tgrid = -cfg.u_cutoff + h * np.arange(-(m - 1), 2 * m - 1)
    with np.errstate(over="ignore"):
        g = np.exp(-p1 * np.exp(tgrid))
    # S[i2, iw] = b[i2] c[iw] kin[i2 - iw]; collapse anti-diagonals
    s = b[:, None] * c[None, :] * kin[(np.arange(m)[:, None] - np.arange(m)[None, :]) + m - 1]
    r = np.empty(2 * m - 1, dtype=complex)
    for d in range(-(m - 1), m):
        r[d + m - 1] = np.trace(s, offset=d)  # sum over iw - i2 = d
    # T[i1] = sum_d r[d] g[i1 + d], then sum_i1 a[i1] T[i1]
    t = np.empty(m, dtype=complex)
    for i1 in range(m):
        t[i1] = g[i1: i1 + 2 * m - 1] @ r
    const = (math.pi * y1) ** (2.0 * nu2) * (math.pi * y2) ** (2.0 * nu2)
    total = const * h ** 3 * (a @ t)
    # truncation: |integrand| summed over the six boundary slabs (the decay
    # of each variable can come from the coupling, so per-axis bounds lie)
    aa, ab, ac = np.abs(a), np.abs(b), np.abs(c)
    ag, ak = np.abs(g), np.abs(kin)
    rows, cols = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    slab = 0.0
    for i1 in (0, m - 1):  # rows = i2, cols = iw
        slab += float((ab[:, None] * ac[None, :] * ak[rows - cols + m - 1]
                       * ag[i1 - rows + cols + m - 1]).sum() * aa[i1])
    for i2 in (0, m - 1):  # rows = i1, cols = iw
        slab += float((aa[:, None] * ac[None, :] * ak[i2 - cols + m - 1]
                       * ag[rows - i2 + cols + m - 1]).sum() * ab[i2])
    for iw in (0, m - 1):  # rows = i1, cols = i2
        slab += float((aa[:, None] * ab[None, :] * ak[cols - iw + m - 1]
                       * ag[rows - cols + iw + m - 1]).sum() * ac[iw])
    trunc = abs(const) * h ** 3 * slab * 2.0
    return total, trunc


def _inner_w2_diff_grid(nu12: tuple, ya: float, yb: float, h: float, m: int,
                        p_range: np.ndarray, q_range: np.ndarray) -> np.ndarray:
    """Rank-2 inner values on the tensor (p, q) index grid where the first
    argument is ya * exp(p h / 2) and the second yb * exp(q h / 2); arguments
    beyond the contribution cap are clamped and zeroed."""
    arg_a = ya * np.exp(p_range * h / 2.0)
    arg_b = yb * np.exp(q_range * h / 2.0)
    mask_a = 2.0 * math.pi * arg_a <= _INNER_ARG_CAP
    mask_b = 2.0 * math.pi * arg_b <= _INNER_ARG_CAP
    eval_a = np.where(mask_a, arg_a, arg_a[mask_a].max() if mask_a.any() else 1.0)
    eval_b = np.where(mask_b, arg_b, arg_b[mask_b].max() if mask_b.any() else 1.0)
    vals = w_tilde_grid(nu12, [eval_a, eval_b])
    vals[~mask_a, :] = 0.0
    vals[:, ~mask_b] = 0.0
    return vals


def _w3_exp_level(nu: tuple, y: tuple, cfg: QuadratureConfig, level: int) -> tuple[complex, float]:
    """Rank-3 exponential route: the 5-fold tensor sum collapses to one
    matrix product plus 1-d correlations (all couplings are index sums)."""
    if cfg.inner_route == "recurse":
        raise InnerEvalError("full quadrature recursion is supported only at rank 2")
    nu1, nu2, nu3 = nu
    y1, y2, y3 = y
    v, h = cfg.grid(level)
    m = v.size
    pis = [(math.pi * yi) ** 2 for yi in y]
    ev, emv = np.exp(v), np.exp(-v)
    e1 = np.exp(-pis[0] * ev - emv + 2.0 * nu3 * v)
    e2 = np.exp(-pis[1] * ev - emv + nu3 * v)
    e3 = np.exp(-pis[2] * ev - emv + nu3 * v)
    u1 = np.exp(-emv + nu3 * v)
    u2 = np.exp(-emv + nu3 * v)
    with np.errstate(over="ignore"):
        tgrid = -cfg.u_cutoff + h * np.arange(-(m - 1), 2 * m - 1)
        g1 = np.exp(-pis[0] * np.exp(tgrid))
        g2 = np.exp(-pis[1] * np.exp(tgrid))
    # F1[k] = sum_{i1} e1[i1] g1[i1 + k] for k = j1 - i2 in [-(m-1), m-1]
    f1 = np.empty(2 * m - 1, dtype=complex)
    for k in range(-(m - 1), m):
        f1[k + m - 1] = g1[k + m - 1: k + 2 * m - 1] @ e1
    # inner rank-2 values on (p, q): p = v2 + w2 - v3 - w1, q = v3 - w2
    p_range = np.arange(-2 * (m - 1), 2 * m - 1)
    q_range = np.arange(-(m - 1), m)
    w2vals = _inner_w2_diff_grid((nu1, nu2), y2, y3, h, m, p_range, q_range)
    # H[q, v2] = sum_r  u1[v2 - r] f1[-r] w2[r - q, q]   (matrix product)
    r_range = np.arange(-(m - 1), m)
    i2 = np.arange(m)
    idx = i2[:, None] - r_range[None, :]  # w1 node index for each (v2, r)
    valid = (idx >= 0) & (idx < m)
    a_mat = np.where(valid, u1[np.clip(idx, 0, m - 1)], 0.0) * f1[::-1][None, :]
    # w2[r - q, q] as (r, q) matrix
    rr, qq = np.meshgrid(r_range, q_range, indexing="ij")
    m_mat = w2vals[(rr - qq) - p_range[0], qq - q_range[0]]
    hq = a_mat @ m_mat  # (v2, q)
    # inner2[q] = sum_{v2} e2[v2] g2[v2 - q] hq[v2, q]
    g2m = g2[(i2[:, None] - q_range[None, :]) + (m - 1)]
    inner2 = (e2[:, None] * g2m * hq).sum(axis=0)
    # total = sum_{v3, w2} e3[v3] u2[w2] inner2[v3 - w2]
    d_idx = (i2[:, None] - i2[None, :]) + (m - 1)
    total = (e3[:, None] * u2[None, :] * inner2[d_idx]).sum()
    const = np.prod([(math.pi * yi) ** (2.0 * nu3) for yi in y])
    total = const * h ** 5 * total
    # gated route: the error estimate is refinement-only (slab sums over a
    # 5-dim boundary would cost as much as a level; tolerance here is loose)
    return complex(total), 0.0


def w_tilde_integral_exp(n: int, nu: Sequence[complex], y: Sequence[float],
                         cfg: QuadratureConfig | None = None) -> EvalReport:
    """Exponential-kernel recursive representation, (2n-1)-dim quadrature.

    Rank 1 returns the Bessel base value directly.  Rank 3 is supported but
    costs minutes at tight tolerances; rank >= 4 is out of scope.
    """
    cfg = cfg or QuadratureConfig()
    nu = as_nu(nu)
    y = as_y(y)
    if len(nu) != n or len(y) != n:
        raise ValueError("rank mismatch")
    if n == 1:
        val = _bessel_base(nu[0], y[0])
        return EvalReport(route="quad-exp", n=1, nu=nu, y=y, value=val,
                          error_estimate=1e-12 * abs(val), nodes_used=0, levels=0)
    if n > 3:
        raise SizeError("exponential-kernel route supports rank <= 3")
    level_fn = _w2_exp_level if n == 2 else _w3_exp_level
    vals, nodes = [], 0
    trunc = 0.0
    for lev in range(cfg.levels):
        val, trunc = level_fn(nu, y, cfg, lev)
        vals.append(val)
        nodes += (cfg.base_nodes * 2 ** lev + 1) ** (2 * n - 1)
        if lev >= 1:
            err, ok = _refine(vals, trunc, cfg)
            if ok:
                return EvalReport(route="quad-exp", n=n, nu=nu, y=y, value=vals[-1],
                                  error_estimate=err, nodes_used=nodes, levels=lev + 1)
    raise NonConvergence(
        f"exp-route refinement stalled at error {abs(vals[-1] - vals[-2]) + trunc:.3e}")


def _w2_bessel_level(nu: tuple, y: tuple, cfg: QuadratureConfig, level: int) -> tuple[complex, float]:
    nu1, nu2 = nu
    y1, y2 = y
    w, h = cfg.grid(level)
    u = np.exp(w)
    k1 = bessel_k_many(2.0 * nu2, 2.0 * math.pi * y1 * np.sqrt(1.0 + 1.0 / u))
    k2 = bessel_k_many(2.0 * nu2, 2.0 * math.pi * y2 * np.sqrt(1.0 + u))
    inner = 2.0 * bessel_k_many(2.0 * nu1, 2.0 * math.pi * y2 * np.sqrt(u))
    integrand = k1 * k2 * inner
    total = 4.0 * h * integrand.sum()
    trunc = 4.0 * h * (abs(integrand[0]) + abs(integrand[-1])) * 2.0
    return complex(total), float(trunc)


def _w3_bessel_level(nu: tuple, y: tuple, cfg: QuadratureConfig, level: int) -> tuple[complex, float]:
    nu1, nu2, nu3 = nu
    y1, y2, y3 = y
    w, h = cfg.grid(level)
    m = w.size
    u1 = np.exp(w)
    u2 = np.exp(w)
    ka = bessel_k_many(2.0 * nu3, 2.0 * math.pi * y1 * np.sqrt(1.0 + 1.0 / u1))
    kc = bessel_k_many(2.0 * nu3, 2.0 * math.pi * y3 * np.sqrt(1.0 + u2))
    arg_b = 2.0 * math.pi * y2 * np.sqrt(np.multiply.outer(1.0 + u1, 1.0 + 1.0 / u2))
    kb = bessel_k_many(2.0 * nu3, arg_b)
    # inner rank-2 at (y2 sqrt(u1/u2), y3 sqrt(u2)): difference grid x axis grid
    if cfg.inner_route == "recurse":
        raise InnerEvalError("full quadrature recursion is supported only at rank 2")
    d_range = np.arange(-(m - 1), m)
    arg_a = y2 * np.exp(d_range * h / 2.0)
    arg_c = y3 * np.exp(w / 2.0)
    mask_a = 2.0 * math.pi * arg_a <= _INNER_ARG_CAP
    mask_c = 2.0 * math.pi * arg_c <= _INNER_ARG_CAP
    ev_a = np.where(mask_a, arg_a, arg_a[mask_a].max() if mask_a.any() else 1.0)
    ev_c = np.where(mask_c, arg_c, arg_c[mask_c].max() if mask_c.any() else 1.0)
    w2vals = w_tilde_grid((nu1, nu2), [ev_a, ev_c])
    w2vals[~mask_a, :] = 0.0
    w2vals[:, ~mask_c] = 0.0
    i_ = np.arange(m)
    inner = w2vals[(i_[:, None] - i_[None, :]) + m - 1, i_[None, :].repeat(m, axis=0)]
    integrand = ka[:, None] * kb * kc[None, :] * inner
    total = 8.0 * h * h * integrand.sum()
    edge = (np.abs(integrand[0, :]).sum() + np.abs(integrand[-1, :]).sum()
            + np.abs(integrand[:, 0]).sum() + np.abs(integrand[:, -1]).sum())
    trunc = 8.0 * h * h * float(edge) * 2.0
    return complex(total), float(trunc)


def w_tilde_integral_bessel(n: int, nu: Sequence[complex], y: Sequence[float],
                            cfg: QuadratureConfig | None = None) -> EvalReport:
    """K-Bessel-kernel recursive representation, (n-1)-dim quadrature."""
    cfg = cfg or QuadratureConfig()
    nu = as_nu(nu)
    y = as_y(y)
    if len(nu) != n or len(y) != n:
        raise ValueError("rank mismatch")
    if n < 2:
        raise SizeError("the K-Bessel route starts at rank 2 (rank 1 is the base case)")
    if n > 3:
        raise SizeError("the K-Bessel route supports rank <= 3")
    level_fn = _w2_bessel_level if n == 2 else _w3_bessel_level
    vals, nodes = [], 0
    trunc = 0.0
    for lev in range(cfg.levels):
        val, trunc = level_fn(nu, y, cfg, lev)
        vals.append(val)
        nodes += (cfg.base_nodes * 2 ** lev + 1) ** (n - 1)
        if lev >= 1:
            err, ok = _refine(vals, trunc, cfg)
            if ok:
                return EvalReport(route="quad-bessel", n=n, nu=nu, y=y, value=vals[-1],
                                  error_estimate=err, nodes_used=nodes, levels=lev + 1)
    raise NonConvergence(
        f"bessel-route refinement stalled at error {abs(vals[-1] - vals[-2]) + trunc:.3e}")


def beta_integral_check(x: complex, y: complex, cfg: QuadratureConfig | None = None) -> float:
    """Relative residual of the half-line beta integral against its Gamma
    quotient; calibration test for the log-variable trapezoid stack."""
    cfg = cfg or QuadratureConfig()
    x, y = complex(x), complex(y)
    if x.real <= 0 or y.real <= 0:
        raise ValueError("beta integral requires Re x > 0 and Re y > 0")
    rate = min(x.real, y.real)
    cutoff = max(cfg.u_cutoff, 48.0 / rate)
    prev = None
    for lev in range(cfg.levels):
        m = int(cfg.base_nodes * 2 ** lev * max(1.0, cutoff / cfg.u_cutoff))
        h = 2.0 * cutoff / m
        w = -cutoff + h * np.arange(m + 1)
        u = np.exp(w)
        val = h * np.sum((1.0 + u) ** (-(x + y)) * u ** y)
        if prev is not None and abs(val - prev) <= 1e-13 * abs(val):
            break
        prev = val
    lg = _loggamma_vec(np.array([x, y, x + y]))
    ref = np.exp(lg[0] + lg[1] - lg[2])
    return float(abs(val - ref) / abs(ref))
