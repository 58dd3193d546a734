"""Abel and Eddington integral equations on a half line.

Abel:       g(x) = int_0^x f(s) / sqrt(x - s) ds,   f = (1/pi) G',  G = Abel(g)
Eddington:  g(x) = int_0^x f(s) * sqrt(x - s) ds,  f = (2/pi) d/dx Abel(g')

All weakly singular integrals use s = x sin^2(theta), which makes both the
kernel singularity at s = x and an integrable s^{-1/2} blow-up of the
integrand at s = 0 disappear at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._quadrature import gauss_legendre

HALF_PI = 0.5 * math.pi
EDDINGTON_PREFACTOR = 4.0 * math.pi * math.sqrt(2.0)


class NonInvertibleError(ValueError):
    """Input violates G(0) = 0: its Abel transform does not vanish at the origin.

    The classic example is g(s) = 1/sqrt(s), which is locally integrable but
    has Abel transform identically pi, so no solution f exists.
    """


@dataclass(frozen=True)
class HalfLineFunction:
    """A function on ``[0, T)`` with optional first and second derivatives.

    Evaluators must be vectorised. ``f`` may blow up like ``s^{-1/2}`` at 0.
    """

    T: float
    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None

    def __call__(self, x):
        return self.f(x)


def _broadcast(x):
    x = np.asarray(x, dtype=float)
    return x, np.zeros_like(x), np.full_like(x, HALF_PI)


def _out(val, x):
    return val.item() if np.ndim(x) == 0 else val


def abel_kernel(phi, x, *, rtol=1e-10):
    """``int_0^x phi(s) / sqrt(x - s) ds`` with its quadrature error estimate."""
    x, a, b = _broadcast(x)
    xs = np.maximum(x, 0.0)

    def integrand(theta):
        xx = xs[..., None]
        st = np.sin(theta)
        return np.asarray(phi(xx * st * st)) * 2.0 * np.sqrt(xx) * st

    val, err = gauss_legendre(integrand, a, b, rtol=rtol, atol=1e-300)
    val = np.where(x > 0, val, 0.0)
    err = np.where(x > 0, err, 0.0)
    return _out(val, x), _out(err, x)


def sqrt_kernel(phi, x, *, rtol=1e-10):
    """``int_0^x phi(s) * sqrt(x - s) ds`` with its quadrature error estimate."""
    x, a, b = _broadcast(x)
    xs = np.maximum(x, 0.0)

    def integrand(theta):
        xx = xs[..., None]
        st, ct = np.sin(theta), np.cos(theta)
        return np.asarray(phi(xx * st * st)) * 2.0 * xx**1.5 * st * ct * ct

    val, err = gauss_legendre(integrand, a, b, rtol=rtol, atol=1e-300)
    val = np.where(x > 0, val, 0.0)
    err = np.where(x > 0, err, 0.0)
    return _out(val, x), _out(err, x)


def abel_forward(f: HalfLineFunction, x, *, rtol=1e-10):
    """Abel transform ``int_0^x f(s)/sqrt(x-s) ds``."""
    return abel_kernel(f.f, x, rtol=rtol)[0]


def abel_forward_midpoint(f: HalfLineFunction, x: float, panels: int = 10**6):
    """Midpoint rule on the untransformed integral (slow cross-check only)."""
    s = (np.arange(panels) + 0.5) * (x / panels)
    return float(np.sum(np.asarray(f.f(s)) / np.sqrt(x - s)) * (x / panels))


def _check_condition_ii(g: HalfLineFunction, tol=1e-6):
    """Numerical surrogate for G(0) = 0.

    Accept when |G(eps)| <= tol at eps = 1e-8 T, or when G is visibly shrinking
    towards the origin (|G(eps/100)| < |G(eps)|/2); the second branch admits
    e.g. g = 1 where G = 2 sqrt(x) is small but not below tol at eps.
    """
    eps = 1e-8 * g.T
    G_eps = abs(abel_kernel(g.f, eps)[0])
    if G_eps <= tol:
        return
    G_small = abs(abel_kernel(g.f, eps / 100.0)[0])
    if G_small < 0.5 * G_eps:
        return
    raise NonInvertibleError(
        f"Abel transform of the input does not vanish at 0 (G({eps:.1e}) = {G_eps:.6g}); "
        "the input is locally integrable but G(0) != 0, so Abel's equation has no solution")


def abel_invert(g: HalfLineFunction, x, *, check=True, rtol=1e-10):
    """Solution ``f = (1/pi) G'`` of Abel's equation with right-hand side ``g``.

    With ``g'`` available, ``G'(x) = g(0)/sqrt(x) + int_0^x g'(s)/sqrt(x-s) ds``;
    otherwise ``G'`` is a central difference with step ``min(1e-5 T, x/2)``.
    """
    if check:
        _check_condition_ii(g)
    x = np.asarray(x, dtype=float)
    if g.df is not None:
        g0 = float(np.asarray(g.f(np.asarray(0.0))))
        with np.errstate(divide="ignore", invalid="ignore"):
            head = np.where(x > 0, g0 / np.sqrt(np.where(x > 0, x, 1.0)),
                            np.inf if g0 > 0 else (-np.inf if g0 < 0 else 0.0))
        Gp = head + np.asarray(abel_kernel(g.df, x, rtol=rtol)[0])
    else:
        step = np.minimum(1e-5 * g.T, x / 2.0)
        hi = np.asarray(abel_kernel(g.f, x + step, rtol=rtol)[0])
        lo = np.asarray(abel_kernel(g.f, x - step, rtol=rtol)[0])
        Gp = np.where(step > 0, (hi - lo) / np.where(step > 0, 2.0 * step, 1.0), 0.0)
    return _out(Gp / math.pi, x)


def eddington_forward(q: HalfLineFunction, h, *, prefactor=False, rtol=1e-10):
    """``int_0^h q(s) sqrt(h-s) ds``, times ``4 pi sqrt 2`` when ``prefactor``."""
    val = np.asarray(sqrt_kernel(q.f, h, rtol=rtol)[0])
    if prefactor:
        val = EDDINGTON_PREFACTOR * val
    return _out(val, np.asarray(h))


def eddington_invert(g: HalfLineFunction, h, *, prefactor=False, rtol=1e-10):
    """Solution ``f = (2/pi) d/dh int_0^h g'(s)/sqrt(h-s) ds`` of Eddington's equation.

    Uses ``(2/pi) [g'(0)/sqrt(h) + int_0^h g''(s)/sqrt(h-s) ds]`` when ``g''``
    is available, a central difference of the Abel transform of ``g'``
    otherwise. At ``h = 0`` with ``g'(0) > 0`` the result is ``+inf`` (an
    integrable singularity, not an error). With ``prefactor`` the
    right-hand side is taken to include ``4 pi sqrt 2``.
    """
    if g.df is None:
        raise ValueError("Eddington inversion needs the derivative g'")
    h = np.asarray(h, dtype=float)
    if g.d2f is not None:
        dg0 = float(np.asarray(g.df(np.asarray(0.0))))
        hs = np.where(h > 0, h, 1.0)
        head = np.where(h > 0, dg0 / np.sqrt(hs), np.inf if dg0 > 0 else 0.0)
        tail = np.asarray(abel_kernel(g.d2f, h, rtol=rtol)[0])
        val = 2.0 / math.pi * (head + tail)
    else:
        inner = HalfLineFunction(g.T, g.df)
        val = 2.0 * np.asarray(abel_invert(inner, h, check=False, rtol=rtol))
    if prefactor:
        val = val / EDDINGTON_PREFACTOR
    return _out(val, h)
