"""Direct problem: solve ``Lp - E0 = G0(p)`` for a polygonal density.

With hat functions on the equidistant nodes R_k = kR/n the density
p = sum_k x_k hat_k (x_n = 0) turns the integral equation into the
approximating nonlinear system ``A x = G0(x)`` with

    A_ik = L(hat_k)(R_i) - L(hat_k)(R) = B_ik - C_k.

The system is solved by Newton's method on a refinement ladder
n = 1, 2, 4, ..., each level started from the interpolated previous polygon.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, optimize

from ._quadrature import gauss_legendre_fixed
from .abel_eddington import EDDINGTON_PREFACTOR, abel_kernel, sqrt_kernel
from .potential import DomainError, PolygonDensity, RangeError

PI = math.pi


class SolverError(RuntimeError):
    """Numerical failure of the direct solver; carries the last report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# -- hat-function potentials -------------------------------------------------------

def segment_potential(kind: str, lo: float, hi: float, r: float) -> float:
    """Potential at ``r`` of one linear segment of a hat function.

    ``01`` rises from 0 at ``lo`` to 1 at ``hi``; ``10`` falls from 1 to 0.
    Kind ``I`` needs ``r <= lo`` (segment outside r), kind ``II`` needs
    ``r >= hi`` (segment inside r).
    """
    if not 0 <= lo < hi:
        raise DomainError(f"segment endpoints must satisfy 0 <= lo < hi, got {lo}, {hi}")
    if kind == "I-01":
        if not 0 <= r <= lo:
            raise DomainError("kind I-01 needs 0 <= r <= lo")
        return 4 * PI / 3 * (hi**2 - lo * (hi + lo) / 2)
    if kind == "I-10":
        if not 0 <= r <= lo:
            raise DomainError("kind I-10 needs 0 <= r <= lo")
        return 4 * PI / 3 * (hi * (hi + lo) / 2 - lo**2)
    if kind == "II-01":
        if not (r >= hi and r > 0):
            raise DomainError("kind II-01 needs r >= hi")
        return PI / r * (hi**3 - (hi**2 * lo + hi * lo**2 + lo**3) / 3)
    if kind == "II-10":
        if not (r >= hi and r > 0):
            raise DomainError("kind II-10 needs r >= hi")
        return PI / r * ((hi**3 + hi**2 * lo + hi * lo**2) / 3 - lo**3)
    raise DomainError(f"unknown segment kind {kind!r}")


def hat_potential_at_node(n: int, R: float, k: int, i: int) -> float:
    """``L(hat_k)(R_i)`` composed from segment potentials (``i = n`` gives ``C_k``)."""
    h = R / n
    r = i * h
    total = 0.0
    if k >= 1:
        lo, hi = (k - 1) * h, k * h
        total += segment_potential("I-01" if i <= k - 1 else "II-01", lo, hi, r)
    lo, hi = k * h, (k + 1) * h
    total += segment_potential("I-10" if i <= k else "II-10", lo, hi, r)
    return total


def assemble_B(n: int, R: float) -> np.ndarray:
    """``B_ik = L(hat_k)(R_i)`` for ``i, k = 0..n-1`` in closed form."""
    if n < 1 or R <= 0:
        raise DomainError("need n >= 1 and R > 0")
    h2 = (R / n) ** 2
    i, k = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float), indexing="ij")
    si = np.where(i > 0, i, 1.0)
    sk = np.where(k > 0, k, 1.0)
    B = np.where(k < i, 4 * PI * h2 * (k**2 + 1.0 / 6.0) / si, 4 * PI * h2 * k)
    B = np.where((k == i) & (k > 0), 4 * PI * h2 * (k - 1.0 / 6.0 + 1.0 / (12.0 * sk)), B)
    B = np.where((k == 0) & (i > 0), PI / 3.0 / si * h2, B)
    B[0, 0] = 2 * PI / 3 * h2
    return B


def assemble_C(n: int, R: float) -> np.ndarray:
    """``C_k = L(hat_k)(R)``."""
    if n < 1 or R <= 0:
        raise DomainError("need n >= 1 and R > 0")
    h2 = (R / n) ** 2
    k = np.arange(n, dtype=float)
    C = 4 * PI / n * h2 * (k**2 + 1.0 / 6.0)
    C[0] = PI / (3 * R) * (R / n) ** 3
    return C


# -- G0 ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GZeroMap:
    """Inverse ``G0`` of the shifted density-potential profile ``F0``."""

    G: Callable
    dG: Callable
    d2G: Optional[Callable] = None
    provenance: str = "closed-form"
    #: G0'' unbounded as t -> 0 (e.g. G0 ~ sqrt(t))
    singular_at_zero: bool = False
    description: str = ""

    def __call__(self, t):
        return self.G(t)

    @classmethod
    def quadratic(cls, R: float) -> "GZeroMap":
        """``G0(t) = (pi R^2/5)(t^2 + 4t/3)`` for the density ``1 - (r/R)^2``."""
        c = PI * R * R / 5.0
        return cls(lambda t: c * (t * t + 4.0 * t / 3.0),
                   lambda t: c * (2.0 * t + 4.0 / 3.0),
                   lambda t: np.full_like(np.asarray(t, dtype=float), 2.0 * c),
                   description=f"(pi R^2/5)(t^2+4t/3), R={R}")

    @classmethod
    def sqrt(cls, coef: float) -> "GZeroMap":
        """``G0(t) = coef * sqrt(t)``."""
        return cls(lambda t: coef * np.sqrt(t),
                   lambda t: 0.5 * coef / np.sqrt(t),
                   lambda t: -0.25 * coef * np.asarray(t, dtype=float) ** -1.5,
                   singular_at_zero=True, description=f"{coef} sqrt(t)")

    @classmethod
    def from_q(cls, q: Callable, h_max: float, grid: int = 2048) -> "GZeroMap":
        """Numeric ``G0`` from a microscopic distribution ``q``.

        ``F0(h) = 4 pi sqrt2 int_0^h q(s) sqrt(h-s) ds`` is tabulated on a
        grid refined quadratically towards 0 and interpolated by a monotone
        cubic; ``G0 = F0^{-1}`` is found by bisection on the interpolant and
        ``G0' = 1 / F0'(G0)`` with ``F0'(h) = 2 pi sqrt2 int_0^h q/sqrt(h-s) ds``.
        """
        hs = h_max * np.linspace(0.0, 1.0, grid) ** 2
        F = EDDINGTON_PREFACTOR * np.asarray(sqrt_kernel(q, hs)[0])
        if np.any(np.diff(F) <= 0):
            raise DomainError("F0 is not strictly increasing on the grid (q must be positive)")
        F_interp = interpolate.PchipInterpolator(hs, F)
        t_max = float(F[-1])

        def G(t):
            t = np.asarray(t, dtype=float)
            if np.any(t < 0) or np.any(t > t_max):
                raise RangeError(f"t outside the tabulated range [0, {t_max}]")
            lo = np.zeros_like(t)
            hi = np.full_like(t, h_max)
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                below = F_interp(mid) < t
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out = 0.5 * (lo + hi)
            return out.item() if out.ndim == 0 else out

        def dG(t):
            h = np.asarray(G(t))
            dF = 0.5 * EDDINGTON_PREFACTOR * np.asarray(abel_kernel(q, h)[0])
            with np.errstate(divide="ignore"):
                return 1.0 / dF

        return cls(G, dG, None, provenance="numeric", description=f"numeric from q, h_max={h_max}")


# -- system and solver ---------------------------------------------------------------

@dataclass
class AnsSystem:
    n: int
    R: float
    G0: GZeroMap
    B: np.ndarray = field(init=False, repr=False)
    C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.B = assemble_B(self.n, self.R)
        self.C = assemble_C(self.n, self.R)

    @property
    def A(self):
        return self.B - self.C[None, :]

    @property
    def nodes(self):
        return np.linspace(0.0, self.R, self.n + 1)

    def residual(self, x):
        return self.A @ x - np.asarray(self.G0.G(x))

    def jacobian(self, x):
        return self.A - np.diag(np.asarray(self.G0.dG(x)))


@dataclass
class KantorovichResult:
    status: str  # satisfied | failed | not evaluated
    beta: float = math.nan
    eta: float = math.nan
    K: float = math.nan
    h0: float = math.nan

    def to_dict(self):
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                for k, v in asdict(self).items()}


def kantorovich_check(system: AnsSystem, x0, *, box_samples=2001) -> KantorovichResult:
    """Kantorovich constants in the infinity norm at ``x0``.

    ``beta = |J^{-1}|``, ``eta = |J^{-1} F|`` and ``K`` bounds the Lipschitz
    constant of ``J`` (the largest ``|G0''|`` over the box
    ``[min x - 2 eta, max x + 2 eta]`` intersected with t > 0). Satisfied
    iff ``h0 = beta eta K <= 1/2``.
    """
    if system.G0.d2G is None:
        return KantorovichResult("not evaluated")
    x0 = np.asarray(x0, dtype=float)
    J = system.jacobian(x0)
    try:
        Jinv = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        return KantorovichResult("failed")
    beta = float(np.abs(Jinv).sum(axis=1).max())
    eta = float(np.abs(Jinv @ system.residual(x0)).max())
    lo, hi = x0.min() - 2 * eta, x0.max() + 2 * eta
    if lo <= 0 and system.G0.singular_at_zero:
        K = math.inf
    else:
        ts = np.linspace(max(lo, 0.0), hi, box_samples)
        if lo <= 0:
            ts = ts[1:]
        K = float(np.abs(np.asarray(system.G0.d2G(ts))).max())
    h0 = beta * eta * K if K > 0 else 0.0
    return KantorovichResult("satisfied" if h0 <= 0.5 else "failed", beta, eta, K, h0)


@dataclass
class SolveReport:
    n: int
    R: float
    x: np.ndarray
    E0n: float
    residual: float
    iterations: int
    converged: bool
    message: str = ""
    clamped: bool = False
    kantorovich: Optional[KantorovichResult] = None
    #: first Newton iterate (0 = start) at which the Kantorovich check is satisfied
    kantorovich_first_certified: Optional[int] = None
    l2_error: Optional[float] = None
    l2_norm: Optional[float] = None

    @property
    def nodes(self):
        return np.linspace(0.0, self.R, self.n + 1)

    def polygon(self):
        return polygon_to_density(self.x, self.n, self.R)

    def __call__(self, r):
        return np.interp(r, self.nodes, np.append(self.x, 0.0))

    def to_dict(self):
        d = {k: getattr(self, k) for k in
             ("n", "R", "E0n", "residual", "iterations", "converged", "message", "clamped",
              "kantorovich_first_certified", "l2_error", "l2_norm")}
        d["x"] = np.asarray(self.x).tolist()
        d["kantorovich"] = self.kantorovich.to_dict() if self.kantorovich else None
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


@dataclass(frozen=True)
class NewtonConfig:
    step_rtol: float = 1e-9
    max_iter: int = 50
    max_halvings: int = 30
    floor: float = 1e-14
    #: deflate the trivial root x = 0 of A x = G0(x)
    deflate: bool = True
    track_kantorovich: bool = True


def newton_solve(system: AnsSystem, x_start, config: NewtonConfig = NewtonConfig()) -> SolveReport:
    """Damped, deflated Newton iteration for ``A x - G0(x) = 0``.

    ``x = 0`` always solves the system and attracts plain Newton from coarse
    starts, so the step ``d = J^{-1} F`` is rescaled by ``M / (M + grad M . d)``
    with ``M(x) = |x|^{-2} + 1``, the deflation of that root. Steps leaving
    the positive cone are halved.
    """
    x = np.array(x_start, dtype=float)
    if np.any(x <= 0):
        raise DomainError("start vector must be strictly positive")
    kres = kantorovich_check(system, x) if config.track_kantorovich else None
    first_cert = 0 if kres is not None and kres.status == "satisfied" else None
    clamped = False

    def report(it, ok, msg):
        F = system.residual(x)
        return SolveReport(system.n, system.R, x.copy(), float(system.C @ x),
                           float(np.abs(F).max()), it, ok, msg, clamped, kres, first_cert)

    F = system.residual(x)
    scale = np.abs(system.A) @ np.abs(x) + np.abs(np.asarray(system.G0.G(x)))
    if np.all(np.abs(F) <= 4 * np.finfo(float).eps * scale):
        return report(0, True, "start vector solves the system")

    for it in range(1, config.max_iter + 1):
        J = system.jacobian(x)
        try:
            d = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return report(it - 1, False, "singular Jacobian")
        if not np.all(np.isfinite(d)):
            return report(it - 1, False, "non-finite Newton step")
        if config.deflate:
            nx2 = float(x @ x)
            M = 1.0 / nx2 + 1.0
            gradM_d = float(-2.0 / nx2**2 * (x @ d))
            d = d * (M / (M + gradM_d))
        lam = 1.0
        for _ in range(config.max_halvings):
            if np.all(x - lam * d > 0):
                break
            lam *= 0.5
        step = lam * d
        x = x - step
        if np.any(x < config.floor):
            x = np.maximum(x, config.floor)
            clamped = True
        if config.track_kantorovich and first_cert is None:
            if kantorovich_check(system, x).status == "satisfied":
                first_cert = it
        if np.abs(step).max() <= config.step_rtol * np.abs(x).max():
            rep = report(it, True, "converged")
            tol = 1e-9 * (1.0 + np.abs(x).max())
            if rep.residual > tol:
                rep.converged = False
                rep.message = f"step converged but residual {rep.residual:.3e} > {tol:.3e}"
            return rep
        F = system.residual(x)
    return report(config.max_iter, False, "no convergence within the iteration limit")


def solve_scalar(system: AnsSystem, *, eps=1e-12, rtol=1e-12, max_doublings=200) -> SolveReport:
    """The n = 1 system ``A00 t = G0(t)`` by bisection on ``[eps, hi]``.

    ``hi`` doubles from 1 until the residual differs in sign from its value at ``eps``.
    """
    if system.n != 1:
        raise DomainError("scalar solve is for n = 1")
    a = float(system.A[0, 0])

    def f(t):
        return a * t - float(np.asarray(system.G0.G(np.asarray(t))))

    s0 = np.sign(f(eps))
    hi = 1.0
    for _ in range(max_doublings):
        if np.sign(f(hi)) != s0:
            break
        hi *= 2.0
    else:
        rep = SolveReport(1, system.R, np.array([math.nan]), math.nan, math.nan, 0, False,
                          f"no sign change of a t - G0(t) on [{eps}, {hi}]")
        raise SolverError(rep.message, rep)
    t, info = optimize.bisect(f, eps, hi, rtol=rtol, xtol=1e-300, full_output=True, maxiter=2000)
    x = np.array([t])
    return SolveReport(1, system.R, x, float(system.C @ x), abs(f(t)), info.iterations,
                       info.converged, "bisection")


def polygon_to_density(x, n: int, R: float) -> PolygonDensity:
    x = np.asarray(x, dtype=float)
    if x.size != n:
        raise DomainError(f"expected {n} node values, got {x.size}")
    return PolygonDensity(tuple(x), R)


def l2_norm(func, n: int, R: float, panels: int = 1024) -> float:
    """``sqrt(int_0^R func^2)`` with a 4-point rule on ``panels`` panels per segment."""
    edges = np.linspace(0.0, R, n + 1)
    vals = gauss_legendre_fixed(lambda s: np.asarray(func(s)) ** 2, edges[:-1], edges[1:],
                                panels=panels)
    return float(math.sqrt(np.sum(vals)))


def l2_error(x, n: int, R: float, reference: Callable, panels: int = 1024) -> float:
    """L2 distance on ``[0, R]`` between the polygon of ``x`` and ``reference``."""
    nodes = np.linspace(0.0, R, n + 1)
    y = np.append(np.asarray(x, dtype=float), 0.0)
    return l2_norm(lambda s: np.asarray(reference(s)) - np.interp(s, nodes, y), n, R, panels)


def interpolate_start(report: SolveReport, n_new: int) -> np.ndarray:
    """Previous polygon evaluated at the nodes of the finer partition."""
    return report(np.linspace(0.0, report.R, n_new + 1)[:-1])


def refinement_ladder(G0: GZeroMap, R: float, n_max: int, *, reference: Callable | None = None,
                      config: NewtonConfig = NewtonConfig(),
                      scalar_rtol: float = 1e-12) -> list[SolveReport]:
    """Solve for n = 1, 2, 4, ..., n_max, warm-starting each level from the last."""
    if n_max < 1 or n_max & (n_max - 1):
        raise DomainError("n_max must be a power of two")
    rep = solve_scalar(AnsSystem(1, R, G0), rtol=scalar_rtol)
    reports = [rep]
    n = 1
    while n < n_max:
        n *= 2
        start = interpolate_start(rep, n)
        rep = newton_solve(AnsSystem(n, R, G0), start, config)
        reports.append(rep)
        if not rep.converged:
            raise SolverError(f"Newton failed at n={n}: {rep.message}", rep)
    for rep in reports:
        rep.l2_norm = l2_norm(rep, rep.n, R)
        if reference is not None:
            rep.l2_error = l2_error(rep.x, rep.n, R, reference)
    return reports


# -- tables ---------------------------------------------------------------------------

def _fmt(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return f"{v:.6g}"


def ladder_table(reports: list[SolveReport], *, r_step: float = 0.5,
                 reference: Callable | None = None, E0_exact: float | None = None) -> list[list[str]]:
    """Rows of a ladder table (node values on a radius grid plus summary rows).

    With a reference density the last column is ``reference - finest`` and the
    summary rows are the L2 error, ``E0n`` and its percentage error against
    ``E0_exact``. Without one, the last column is the relative change between
    the two finest levels in percent, and the summary rows are the L2 norm,
    its relative change, ``E0n`` and its relative change.
    """
    reports = [r for r in reports if r.n >= 2]
    R = reports[0].R
    r = np.round(np.arange(0.0, R + 0.5 * r_step, r_step), 12)
    finest, prev = reports[-1], reports[-2] if len(reports) > 1 else None
    last_head = "reference-minus-finest" if reference is not None else "rel-change-finest-%"
    rows = [["r"] + [f"n={rep.n}" for rep in reports] + [last_head]]
    for ri in r:
        row = [_fmt(float(ri))]
        for rep in reports:
            on_node = abs(ri * rep.n / R - round(ri * rep.n / R)) < 1e-9
            row.append(_fmt(float(rep(ri))) if on_node else "-")
        if reference is not None:
            row.append(_fmt(float(reference(ri)) - float(finest(ri))))
        elif prev is not None:
            f, c = float(finest(ri)), float(prev(ri))
            row.append(_fmt(abs(c - f) / f * 100.0) if f != 0 else _fmt(0.0))
        rows.append(row)
    if reference is not None:
        rows.append(["L2-error"] + [_fmt(rep.l2_error) for rep in reports] + [""])
        rows.append(["E0n"] + [_fmt(rep.E0n) for rep in reports] + [_fmt(E0_exact)])
        if E0_exact is not None:
            rows.append(["E0-error-%"] + [_fmt(abs(E0_exact - rep.E0n) / abs(E0_exact) * 100)
                                          for rep in reports] + [""])
    else:
        norms = [rep.l2_norm for rep in reports]
        e0 = [rep.E0n for rep in reports]
        rows.append(["L2-norm"] + [_fmt(v) for v in norms] + [""])
        rows.append(["norm-change-%"] + [_fmt(abs(a - b) / b * 100) for a, b in zip(norms, norms[1:])]
                    + [""] * 2)
        rows.append(["E0n"] + [_fmt(v) for v in e0] + [""])
        rows.append(["E0-change-%"] + [_fmt(abs(a - b) / b * 100) for a, b in zip(e0, e0[1:])]
                    + [""] * 2)
    return rows
