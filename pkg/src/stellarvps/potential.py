"""Radial densities and their spherical potential ``P = Lp``.

The potential operator maps a radial density ``p`` to

    Lp(r) = 4*pi * [ (1/r) * int_0^r p(s) s^2 ds + int_r^inf p(s) s ds ],

which is positive, strictly decreasing, and satisfies the radial Poisson
equation ``P'' + (2/r) P' + 4*pi*p = 0``. Densities supported on ``[0, R]``
carry closed forms where the family allows it; every density can also be
integrated by adaptive quadrature, which serves as the independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

FOUR_PI = 4.0 * math.pi
_EPS = np.finfo(float).eps


class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class RangeError(ValueError):
    """Potential value outside ``[E0, P(0)]``."""


def _as_array(r):
    return np.asarray(r, dtype=float)


def _scalar_or_array(value, like):
    return value.item() if np.ndim(like) == 0 else value


class RadialDensity:
    """A density ``p(r)`` positive on ``[0, R)`` and zero for ``r >= R``.

    Derivatives at ``r = R`` are the one-sided (interior) limits.
    Subclasses implement ``_p``, ``_d1``, ``_d2`` on ``[0, R]`` and may
    override ``potential`` / ``potential_d1`` with closed forms. The base
    implementations fall back to quadrature and finite differences.
    """

    kind = "sampled"
    #: True when p', p'' are exact (required for extendability verdicts)
    analytic = False

    R: float

    def __call__(self, r):
        r = _as_array(r)
        out = np.where((r >= 0) & (r < self.R), self._p(np.clip(r, 0.0, self.R)), 0.0)
        return _scalar_or_array(out, r)

    def d1(self, r):
        r = _as_array(r)
        out = np.where(r <= self.R, self._d1(np.clip(r, 0.0, self.R)), 0.0)
        return _scalar_or_array(out, r)

    def d2(self, r):
        r = _as_array(r)
        out = np.where(r <= self.R, self._d2(np.clip(r, 0.0, self.R)), 0.0)
        return _scalar_or_array(out, r)

    # -- derivative fallbacks -------------------------------------------------
    @property
    def _fd_step(self):
        return max(1e-5 * self.R, np.cbrt(_EPS) * self.R)

    def _d1(self, r):
        h = self._fd_step
        lo = np.clip(r - h, 0.0, self.R)
        hi = np.clip(r + h, 0.0, self.R)
        return (self._p(hi) - self._p(lo)) / (hi - lo)

    def _d2(self, r):
        h = self._fd_step
        c = np.clip(r, h, self.R - h)
        return (self._p(c + h) - 2.0 * self._p(c) + self._p(c - h)) / h**2

    # -- potential ------------------------------------------------------------
    def potential(self, r):
        return quadrature_L(self, r)

    def potential_d1(self, r):
        return quadrature_L_prime(self, r)

    def mass_integral(self):
        """``int_0^R p(s) s^2 ds`` (the enclosed mass divided by 4*pi)."""
        val, _ = integrate.quad(lambda s: self._p(np.asarray(s)) * s * s, 0.0, self.R,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def describe(self):
        return {"kind": self.kind, "R": self.R}


@dataclass(frozen=True)
class PolynomialDensity(RadialDensity):
    """``p(r) = sum_l coeffs[l] * r**l`` on ``[0, R]``."""

    coeffs: tuple
    R: float
    kind = "polynomial"
    analytic = True

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError("cutoff radius must be positive")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @cached_property
    def _poly(self):
        return np.polynomial.Polynomial(self.coeffs)

    def _p(self, r):
        return self._poly(r)

    def _d1(self, r):
        return self._poly.deriv(1)(r)

    def _d2(self, r):
        return self._poly.deriv(2)(r)

    @cached_property
    def _interior_potential(self):
        """Polynomial in r equal to Lp on [0, R] (coefficient-weighted monomials)."""
        c = np.zeros(len(self.coeffs) + 2)
        R = self.R
        for l, a in enumerate(self.coeffs):
            c[0] += FOUR_PI * a * R ** (l + 2) / (l + 2)
            c[l + 2] -= FOUR_PI * a / ((l + 2) * (l + 3))
        return np.polynomial.Polynomial(c)

    def mass_integral(self):
        return sum(a * self.R ** (l + 3) / (l + 3) for l, a in enumerate(self.coeffs))

    def potential(self, r):
        r = _as_array(r)
        inside = self._interior_potential(np.minimum(r, self.R))
        outside = FOUR_PI * self.mass_integral() / np.where(r > self.R, r, 1.0)
        return _scalar_or_array(np.where(r <= self.R, inside, outside), r)

    def potential_d1(self, r):
        r = _as_array(r)
        inside = self._interior_potential.deriv(1)(np.minimum(r, self.R))
        outside = -FOUR_PI * self.mass_integral() / np.where(r > self.R, r, 1.0) ** 2
        return _scalar_or_array(np.where(r <= self.R, inside, outside), r)

    def describe(self):
        return {"kind": self.kind, "R": self.R, "coeffs": list(self.coeffs)}


def _series_sum(term, r, start, terms=24):
    """Fixed-length series sum; 24 terms is far below eps for r < 0.1."""
    total = np.zeros_like(r)
    for m in range(start, start + terms):
        total = total + term(m, r)
    return total


def _exp_core(r, order):
    """``A(r) = (2 - e^{-r}(r + 2)) / r`` and its first two derivatives.

    The closed forms lose all digits for small ``r``; below 0.1 the Taylor
    series ``A = sum_{m>=1} (-1)^{m+1} (2-m) r^{m-1} / m!`` is used instead.
    """
    r = _as_array(r)
    small = r < 0.1
    rs = np.where(small, r, 0.05)
    rl = np.where(small, 1.0, r)
    e = np.exp(-rl)
    if order == 0:
        closed = (2.0 - e * (rl + 2.0)) / rl
        series = _series_sum(
            lambda m, x: (-1) ** (m + 1) * (2 - m) * x ** (m - 1) / math.factorial(m), rs, 1)
    elif order == 1:
        closed = e * (1.0 + 2.0 / rl + 2.0 / rl**2) - 2.0 / rl**2
        series = _series_sum(
            lambda m, x: (-1) ** (m + 1) * (2 - m) * (m - 1) * x ** (m - 2) / math.factorial(m),
            rs, 2)
    else:
        closed = -e * (1.0 + 2.0 / rl + 4.0 / rl**2 + 4.0 / rl**3) + 4.0 / rl**3
        series = _series_sum(
            lambda m, x: (-1) ** (m + 1) * (2 - m) * (m - 1) * (m - 2) * x ** (m - 3)
            / math.factorial(m), rs, 3)
    return np.where(small, series, closed)


@dataclass(frozen=True)
class ExponentialDensity(RadialDensity):
    """``p(r) = e^{-r} - e^{-R}`` on ``[0, R]``."""

    R: float
    kind = "exponential-shift"
    analytic = True

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError("cutoff radius must be positive")

    def _p(self, r):
        return np.exp(-r) - math.exp(-self.R)

    def _d1(self, r):
        return -np.exp(-r)

    def _d2(self, r):
        return np.exp(-r)

    def mass_integral(self):
        R = self.R
        eR = math.exp(-R)
        return 2.0 - eR * (R * R + 2.0 * R + 2.0) - eR * R**3 / 3.0

    def potential(self, r):
        r = _as_array(r)
        R, eR = self.R, math.exp(-self.R)
        rc = np.minimum(r, R)
        inside = FOUR_PI * (_exp_core(rc, 0) - eR * (1.0 + R + R * R / 2.0 - rc * rc / 6.0))
        outside = FOUR_PI * self.mass_integral() / np.where(r > R, r, 1.0)
        return _scalar_or_array(np.where(r <= R, inside, outside), r)

    def potential_d1(self, r):
        r = _as_array(r)
        R, eR = self.R, math.exp(-self.R)
        rc = np.minimum(r, R)
        inside = FOUR_PI * (_exp_core(rc, 1) + eR * rc / 3.0)
        outside = -FOUR_PI * self.mass_integral() / np.where(r > R, r, 1.0) ** 2
        return _scalar_or_array(np.where(r <= R, inside, outside), r)

    def potential_d2_closed(self, r):
        """Closed-form ``P''`` (series-repaired below r = 0.1), for cross-checks."""
        r = _as_array(r)
        return _scalar_or_array(
            FOUR_PI * (_exp_core(r, 2) + math.exp(-self.R) / 3.0), r)

    def X(self, r):
        """``p' P'' - p'' P'`` with the small-r cancellation removed.

        For r >= 0.1 the direct closed form is used; below that the
        factored series form ``4 pi e^{-2r} [ ... + (2r - 4) r^2 sum_{k>=5} r^{k-5}/k! ]``.
        """
        r = _as_array(r)
        R = self.R
        small = r < 0.1
        rl = np.where(small, 1.0, r)
        el = np.exp(-rl)
        closed = FOUR_PI * el / rl**3 * (
            (el * (2.0 * rl + 4.0) + 2.0 * rl) - (4.0 + math.exp(-R) / 3.0 * (rl**4 + rl**3)))
        rs = np.where(small, r, 0.05)
        tail = _series_sum(lambda k, x: x ** (k - 5) / math.factorial(k), rs, 5)
        series = FOUR_PI * np.exp(-2.0 * rs) * (
            -np.exp(rs - R) / 3.0 * (1.0 + rs) + 1.0 / 3.0 + rs / 6.0 + rs * rs / 12.0
            + (2.0 * rs - 4.0) * rs * rs * tail)
        return _scalar_or_array(np.where(small, series, closed), r)


@dataclass(frozen=True)
class PowerLawDensity(RadialDensity):
    """``p(r) = r^{-b} - R^{-b}`` on ``(0, R]`` with ``0 < b < 3``.

    The centre is singular; ``P(0)`` is finite only for ``b < 2``.
    """

    b: float
    R: float
    kind = "power-law"
    analytic = True

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError("cutoff radius must be positive")
        if not 0 < self.b < 3:
            raise DomainError(f"power-law exponent b={self.b} must lie in (0, 3); "
                              "for b >= 3 the mass integral diverges")

    def _p(self, r):
        with np.errstate(divide="ignore"):
            return r ** (-self.b) - self.R ** (-self.b)

    def _d1(self, r):
        with np.errstate(divide="ignore"):
            return -self.b * r ** (-self.b - 1.0)

    def _d2(self, r):
        with np.errstate(divide="ignore"):
            return self.b * (self.b + 1.0) * r ** (-self.b - 2.0)

    def mass_integral(self):
        return self.b * self.R ** (3.0 - self.b) / (3.0 * (3.0 - self.b))

    def potential(self, r):
        r = _as_array(r)
        b, R = self.b, self.R
        rc = np.clip(np.minimum(r, R), 1e-300, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            if b == 2.0:
                outer = np.log(R / rc)
            else:
                outer = (R ** (2.0 - b) - rc ** (2.0 - b)) / (2.0 - b)
            inside = FOUR_PI * (rc ** (2.0 - b) / (3.0 - b) - R ** (-b) * rc * rc / 3.0
                                + outer - R ** (-b) * (R * R - rc * rc) / 2.0)
        if b < 2.0:
            centre = FOUR_PI * R ** (2.0 - b) * b / (2.0 * (2.0 - b))
        else:
            centre = np.inf
        inside = np.where(r == 0.0, centre, inside)
        outside = FOUR_PI * self.mass_integral() / np.where(r > R, r, 1.0)
        return _scalar_or_array(np.where(r <= R, inside, outside), r)

    def potential_d1(self, r):
        r = _as_array(r)
        b, R = self.b, self.R
        rc = np.minimum(r, R)
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = -FOUR_PI * (rc ** (1.0 - b) / (3.0 - b) - R ** (-b) * rc / 3.0)
        inside = np.where(r == 0.0, 0.0 if b < 1 else -np.inf, inside)
        outside = -FOUR_PI * self.mass_integral() / np.where(r > R, r, 1.0) ** 2
        return _scalar_or_array(np.where(r <= R, inside, outside), r)

    def describe(self):
        return {"kind": self.kind, "R": self.R, "b": self.b}


@dataclass(frozen=True)
class PolygonDensity(RadialDensity):
    """Piecewise-linear density with ``p(kR/n) = values[k]`` and ``p(R) = 0``."""

    values: tuple
    R: float
    kind = "sampled-polygon"
    analytic = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def n(self):
        return len(self.values)

    @cached_property
    def nodes(self):
        return np.linspace(0.0, self.R, self.n + 1)

    @cached_property
    def _node_values(self):
        return np.append(np.asarray(self.values), 0.0)

    def _p(self, r):
        return np.interp(r, self.nodes, self._node_values)

    def _d1(self, r):
        k = np.clip(np.floor(r / self.R * self.n).astype(int), 0, self.n - 1)
        y = self._node_values
        return (y[k + 1] - y[k]) / (self.R / self.n)

    def _d2(self, r):
        return np.zeros_like(r)

    def _segment_moments(self, r):
        """Inner ``int_0^r p s^2`` and outer ``int_r^R p s`` moments, exactly."""
        a = self.nodes[:-1]
        b = self.nodes[1:]
        ya = self._node_values[:-1]
        yb = self._node_values[1:]
        slope = (yb - ya) / (b - a)
        icpt = ya - slope * a
        r = r[..., None]
        lo_in = a
        hi_in = np.clip(r, a, b)
        lo_out = np.clip(r, a, b)
        hi_out = b

        def m2(x):
            return icpt * x**3 / 3.0 + slope * x**4 / 4.0

        def m1(x):
            return icpt * x**2 / 2.0 + slope * x**3 / 3.0

        inner = np.sum(m2(hi_in) - m2(lo_in), axis=-1)
        outer = np.sum(m1(hi_out) - m1(lo_out), axis=-1)
        return inner, outer

    def mass_integral(self):
        inner, _ = self._segment_moments(np.asarray(self.R))
        return float(inner)

    def potential(self, r):
        r = _as_array(r)
        inner, outer = self._segment_moments(r)
        safe = np.where(r > 0, r, 1.0)
        val = FOUR_PI * (np.where(r > 0, inner / safe, 0.0) + outer)
        return _scalar_or_array(val, r)

    def potential_d1(self, r):
        r = _as_array(r)
        inner, _ = self._segment_moments(r)
        safe = np.where(r > 0, r, 1.0)
        return _scalar_or_array(np.where(r > 0, -FOUR_PI * inner / safe**2, 0.0), r)

    def describe(self):
        return {"kind": self.kind, "R": self.R, "n": self.n}


@dataclass(frozen=True)
class CallableDensity(RadialDensity):
    """Density given by a vectorised callable; derivatives optional.

    Without ``d1``/``d2`` the derivatives are central differences, and the
    density is not eligible for extendability verdicts.
    """

    func: object
    R: float
    deriv1: object = None
    deriv2: object = None
    kind: str = field(default="sampled")

    @property
    def analytic(self):
        return self.deriv1 is not None and self.deriv2 is not None

    def _p(self, r):
        return np.asarray(self.func(r), dtype=float)

    def _d1(self, r):
        if self.deriv1 is None:
            return super()._d1(r)
        return np.asarray(self.deriv1(r), dtype=float)

    def _d2(self, r):
        if self.deriv2 is None:
            return super()._d2(r)
        return np.asarray(self.deriv2(r), dtype=float)


# -- quadrature oracle ---------------------------------------------------------

_QUAD = dict(epsabs=1e-10, epsrel=1e-10, limit=200)


def _quad_moments(p, r):
    f = p._p
    inner = integrate.quad(lambda s: f(np.asarray(s)) * s * s, 0.0, r, **_QUAD)[0] if r > 0 else 0.0
    outer = integrate.quad(lambda s: f(np.asarray(s)) * s, r, p.R, **_QUAD)[0] if r < p.R else 0.0
    return inner, outer


def quadrature_L(p, r):
    """Evaluate ``Lp(r)`` by adaptive Gauss-Kronrod quadrature of both integrals."""
    r = _as_array(r)
    out = np.empty(r.shape)
    for idx, ri in np.ndenumerate(r):
        if ri < 0:
            raise DomainError("radius must be non-negative")
        rr = min(ri, p.R)
        inner, outer = _quad_moments(p, rr)
        if ri == 0:
            out[idx] = FOUR_PI * outer
        elif ri >= p.R:
            out[idx] = FOUR_PI * inner / ri
        else:
            out[idx] = FOUR_PI * (inner / ri + outer)
    return _scalar_or_array(out, r)


def quadrature_L_prime(p, r):
    """``(Lp)'(r) = -(4 pi / r^2) int_0^r p s^2 ds`` by quadrature."""
    r = _as_array(r)
    out = np.empty(r.shape)
    for idx, ri in np.ndenumerate(r):
        if ri <= 0:
            out[idx] = 0.0
            continue
        inner, _ = _quad_moments(p, min(ri, p.R))
        out[idx] = -FOUR_PI * inner / ri**2
    return _scalar_or_array(out, r)


# -- public operations ---------------------------------------------------------

def eval_L(p: RadialDensity, r):
    """Potential ``Lp(r)``; at ``r = 0`` the limit ``4 pi int_0^R p(s) s ds``."""
    if np.any(_as_array(r) < 0):
        raise DomainError("radius must be non-negative")
    return p.potential(r)


def eval_L_prime(p: RadialDensity, r):
    """``(Lp)'(r)``; returns the limit 0 at ``r = 0``."""
    if np.any(_as_array(r) < 0):
        raise DomainError("radius must be non-negative")
    return p.potential_d1(r)


def eval_L_second(p: RadialDensity, r):
    """``(Lp)''(r) = -(2/r)(Lp)'(r) - 4 pi p(r)`` for ``r > 0``."""
    r = _as_array(r)
    if np.any(r <= 0):
        raise DomainError("second derivative of the potential needs r > 0")
    val = -2.0 / r * _as_array(p.potential_d1(r)) - FOUR_PI * _as_array(p(r))
    return _scalar_or_array(val, r)


def L_monomial(l: int, R: float, r):
    """Potential of the truncated monomial ``s**l`` on ``[0, R]``.

    Inside: ``4 pi (R^{l+2}/(l+2) - r^{l+2}/((l+2)(l+3)))``; outside the
    exterior branch ``4 pi R^{l+3} / ((l+3) r)``.
    """
    if l < 0 or int(l) != l:
        raise DomainError("monomial degree must be a non-negative integer")
    r = _as_array(r)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    inside = FOUR_PI * (R ** (l + 2) / (l + 2) - np.minimum(r, R) ** (l + 2) / ((l + 2) * (l + 3)))
    outside = FOUR_PI * R ** (l + 3) / ((l + 3) * np.where(r > R, r, 1.0))
    return _scalar_or_array(np.where(r <= R, inside, outside), r)


def is_strictly_decreasing(p: RadialDensity, samples: int = 10_000) -> bool:
    r = np.linspace(0.0, p.R, samples + 1)[:-1]
    if p.kind == "power-law":
        r = r[1:]
    v = np.asarray(p(r))
    return bool(np.all(np.diff(v) < 0) and np.all(v > 0))


@dataclass(frozen=True)
class PotentialProfile:
    """``P = Lp`` together with ``E0 = P(R)``, ``P(0)`` and the inverse on ``[0, R]``."""

    density: RadialDensity

    @cached_property
    def E0(self) -> float:
        return float(eval_L(self.density, self.density.R))

    @cached_property
    def P0(self) -> float:
        return float(eval_L(self.density, 0.0))

    @property
    def R(self) -> float:
        return self.density.R

    def P(self, r):
        return eval_L(self.density, r)

    def dP(self, r):
        return eval_L_prime(self.density, r)

    def d2P(self, r):
        return eval_L_second(self.density, r)

    def inverse(self, h):
        return invert_P(self, h)


def potential_profile(p: RadialDensity) -> PotentialProfile:
    return PotentialProfile(p)


def invert_P(profile: PotentialProfile, h, *, tol=1e-12):
    """Radius ``r`` in ``[0, R]`` with ``P(r) = h``.

    Vectorised bisection down to a bracket of width ``tol * R``, followed by
    two Newton steps that are only accepted if they stay inside the bracket.
    """
    h = _as_array(h)
    E0, P0, R = profile.E0, profile.P0, profile.R
    slack = 1e-13 * max(abs(E0), abs(P0) if np.isfinite(P0) else abs(E0))
    if np.any(h < E0 - slack) or np.any(h > P0 + slack) or np.any(np.isnan(h)):
        raise RangeError(f"potential value outside [E0, P(0)] = [{E0}, {P0}]")
    hf = h.ravel()
    lo = np.zeros_like(hf)
    hi = np.full_like(hf, R)
    while np.max(hi - lo) > tol * R:
        mid = 0.5 * (lo + hi)
        above = np.asarray(profile.P(mid)) > hf
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    r = 0.5 * (lo + hi)
    for _ in range(2):
        d = np.asarray(profile.dP(r))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (np.asarray(profile.P(r)) - hf) / d
        cand = r - step
        ok = np.isfinite(cand) & (cand >= lo - tol * R) & (cand <= hi + tol * R)
        r = np.where(ok, np.clip(cand, 0.0, R), r)
    r = np.where(hf >= E0, r, R)
    r = np.where(hf >= P0, 0.0, r)
    r = np.where(hf <= E0, R, r)
    return _scalar_or_array(r.reshape(h.shape), h)
