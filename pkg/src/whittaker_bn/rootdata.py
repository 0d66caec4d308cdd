"""Type-B_n combinatorics: spectral parameters, signed permutations, the
rho-shift exponents and the regularity test.

The Weyl group here is the hyperoctahedral group (signed permutations of n
letters, order 2^n n!), generated by the transpositions w_1..w_{n-1} of
adjacent entries and the sign flip w_n of the last entry.  The simple roots
are a_i = e_i - e_{i+1} (i < n) and a_n = e_n; a vector lies in the root
lattice Z a_1 + ... + Z a_n exactly when all its partial sums are integers.

A spectral parameter is regular when (i) the quadratic form q never vanishes
on the scanned box for any Weyl translate and (ii) distinct Weyl translates
differ by something outside the root lattice.  Both conditions quantify over
infinite sets; we certify them on a finite box / up to a tolerance, which is
what the downstream recurrences actually consume.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SizeError

#: default tolerance for both regularity minima
REGULARITY_TOL = 1e-8

SpectralParameter = tuple  # of complex, length n
RadialPoint = tuple  # of positive floats, length n


def as_nu(nu: Sequence[complex]) -> tuple:
    """Normalize a spectral parameter to a tuple of finite complex numbers."""
    out = tuple(complex(v) for v in nu)
    if not out:
        raise ValueError("spectral parameter must have length >= 1")
    if not all(np.isfinite(v.real) and np.isfinite(v.imag) for v in out):
        raise ValueError("spectral parameter entries must be finite")
    return out


def as_y(y: Sequence[float]) -> tuple:
    """Normalize a radial point; all coordinates must be positive."""
    out = tuple(float(v) for v in y)
    if not out or any(v <= 0.0 or not np.isfinite(v) for v in out):
        raise ValueError("radial point entries must be positive and finite")
    return out


@dataclass(frozen=True)
class WeylElement:
    """Signed permutation: (w nu)_i = signs[i] * nu[perm[i]] (0-based)."""

    perm: tuple
    signs: tuple

    def __post_init__(self):
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)) or len(self.signs) != n \
                or any(s not in (1, -1) for s in self.signs):
            raise ValueError("invalid signed permutation")

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "WeylElement":
        return cls(tuple(range(n)), (1,) * n)

    def apply(self, nu: Sequence[complex]) -> tuple:
        return tuple(self.signs[i] * nu[self.perm[i]] for i in range(self.n))

    def compose(self, other: "WeylElement") -> "WeylElement":
        """self o other, i.e. (self*other)(nu) = self(other(nu))."""
        perm = tuple(other.perm[self.perm[i]] for i in range(self.n))
        signs = tuple(self.signs[i] * other.signs[self.perm[i]] for i in range(self.n))
        return WeylElement(perm, signs)

    def inverse(self) -> "WeylElement":
        q = tuple(int(i) for i in np.argsort(self.perm))
        signs = tuple(self.signs[q[i]] for i in range(self.n))
        return WeylElement(q, signs)


def simple_reflection(n: int, i: int) -> WeylElement:
    """Generator w_i (1-based): swap entries i, i+1 for i < n; flip nu_n for i = n."""
    if not 1 <= i <= n:
        raise ValueError(f"generator index {i} outside 1..{n}")
    if i < n:
        perm = list(range(n))
        perm[i - 1], perm[i] = perm[i], perm[i - 1]
        return WeylElement(tuple(perm), (1,) * n)
    return WeylElement(tuple(range(n)), (1,) * (n - 1) + (-1,))


def weyl_enumerate(n: int) -> list:
    """All 2^n n! elements, in a fixed deterministic order."""
    if not 1 <= n <= 6:
        raise SizeError(f"Weyl enumeration supported for 1 <= n <= 6, got {n}")
    out = []
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            out.append(WeylElement(perm, signs))
    return out


def weyl_act(w: WeylElement, nu: Sequence[complex]) -> tuple:
    """Action on the spectral parameter; generators reproduce the two
    defining moves (adjacent swap, last-entry sign flip) exactly."""
    nu = as_nu(nu)
    if len(nu) != w.n:
        raise ValueError("rank mismatch between Weyl element and parameter")
    return w.apply(nu)


def weyl_orbit(nu: Sequence[complex]) -> list:
    """Orbit of nu under the full group, sorted canonically.

    The sort makes orbit enumeration independent of the representative, so
    Weyl-invariant sums built over this list are bitwise reproducible.
    """
    nu = as_nu(nu)
    pts = [weyl_act(w, nu) for w in weyl_enumerate(len(nu))]
    key = lambda t: tuple(x for v in t for x in (v.real, v.imag))
    return sorted(pts, key=key)


def rho_exponent(n: int, i: int) -> float:
    """Exponent of y_i in the rho-shift, i*(n - i/2)."""
    if not 1 <= i <= n:
        raise ValueError(f"index {i} outside 1..{n}")
    return i * (2 * n - i) / 2.0


@dataclass
class RegularityReport:
    nu: tuple
    box: int
    tol: float
    min_q_abs: float
    min_q_at: tuple  # (m, weyl index)
    min_lattice_dist: float
    min_lattice_pair: tuple  # (weyl index, weyl index)
    regular: bool

    def as_dict(self) -> dict:
        return {
            "nu": [{"re": v.real, "im": v.imag} for v in self.nu],
            "box": self.box,
            "tol": self.tol,
            "min_q_abs": self.min_q_abs,
            "min_q_at": {"m": list(self.min_q_at[0]), "weyl_index": self.min_q_at[1]},
            "min_lattice_dist": self.min_lattice_dist,
            "min_lattice_pair": list(self.min_lattice_pair),
            "regular": self.regular,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


def _lattice_distance(delta: np.ndarray) -> np.ndarray:
    """Distance of vectors (rows) from the root lattice, in the alpha basis.

    A vector sum_i c_i a_i has c_i equal to the i-th partial sum of its
    coordinates; componentwise distance of (c_i) to Z^n, max over i.
    """
    c = np.cumsum(delta, axis=-1)
    d = np.abs(c - np.round(c.real))
    return d.max(axis=-1)


def is_regular(nu: Sequence[complex], box: int = 16, tol: float = REGULARITY_TOL) -> RegularityReport:
    """Finite-box regularity certificate (see module docstring).

    The report carries the minima; the verdict is True iff both exceed tol.
    """
    from .coefficients import q_grid  # deferred: coefficients owns the form

    nu = as_nu(nu)
    n = len(nu)
    if box < 1:
        raise ValueError("box must be >= 1")
    group = weyl_enumerate(n)

    min_q = np.inf
    min_q_at = ((0,) * n, 0)
    shape = (box + 1,) * n
    nonzero = np.ones(shape, dtype=bool)
    nonzero[(0,) * n] = False
    for wi, w in enumerate(group):
        q = np.abs(q_grid(weyl_act(w, nu), box))
        q[(0,) * n] = np.inf
        flat = int(np.argmin(q))
        if q.flat[flat] < min_q:
            min_q = float(q.flat[flat])
            min_q_at = (tuple(int(v) for v in np.unravel_index(flat, shape)), wi)

    orbit = np.array([weyl_act(w, nu) for w in group], dtype=complex)
    if n <= 4:
        diff = orbit[:, None, :] - orbit[None, :, :]
        dist = _lattice_distance(diff)
        np.fill_diagonal(dist, np.inf)
        flat = int(np.argmin(dist))
        i, j = np.unravel_index(flat, dist.shape)
        min_lat = float(dist[i, j])
        pair = (int(i), int(j))
    else:
        # the root lattice is Weyl stable, so pairs reduce to (id, w)
        diff = orbit[0][None, :] - orbit[1:, :]
        dist = _lattice_distance(diff)
        k = int(np.argmin(dist))
        min_lat = float(dist[k])
        pair = (0, k + 1)

    return RegularityReport(
        nu=nu, box=box, tol=tol,
        min_q_abs=min_q, min_q_at=min_q_at,
        min_lattice_dist=min_lat, min_lattice_pair=pair,
        regular=bool(min_q > tol and min_lat > tol),
    )
