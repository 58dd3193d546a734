"""Inverse problem: given a density, decide whether an energy distribution exists.

For p strictly decreasing on [0, R) the density-potential relation
F0(h) = p(Phi(h)), Phi(h) = P^{-1}(h + E0), is strictly increasing, and the
candidate distribution solves Eddington's equation F0 = 4 pi sqrt2 * Edd(q):

    q(h) = 1/(4 pi sqrt2) * (2/pi) * dH/dh,
    dH/dh = F0'(0)/sqrt(h) + int_0^h F0''(s)/sqrt(h-s) ds            (s-space)
          = F0'(0)/sqrt(h) + int_Phi^R X/P'^2 / sqrt(P(Phi)-P(r)) dr  (r-space)

with X = p' P'' - p'' P' and F0'' = X / |P'|^3. The density is extendable
iff q > 0; sufficient conditions are F0'' > 0 (3a), X > 0 (3b) and
(2/r) p' + p'' > 0 (3c).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from ._quadrature import gauss_legendre
from .abel_eddington import abel_kernel
from .potential import (
    FOUR_PI,
    DomainError,
    PotentialProfile,
    RadialDensity,
    RangeError,
    eval_L_prime,
    eval_L_second,
    invert_P,
    is_strictly_decreasing,
)

Q_FACTOR = 1.0 / (4.0 * math.pi * math.sqrt(2.0)) * (2.0 / math.pi)


def X_function(p: RadialDensity, r):
    """``X(r) = p'(r) P''(r) - p''(r) P'(r)`` on ``(0, R]``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("X is evaluated on (0, R]")
    if hasattr(p, "X"):
        return p.X(r)
    val = np.asarray(p.d1(r)) * np.asarray(eval_L_second(p, r)) \
        - np.asarray(p.d2(r)) * np.asarray(eval_L_prime(p, r))
    return val.item() if r.ndim == 0 else val


@dataclass(frozen=True)
class EnergySlice:
    """``F0(h) = p(P^{-1}(h + E0))`` and its derivatives on ``[0, P(0) - E0)``."""

    density: RadialDensity
    provenance: str = "composed"

    @cached_property
    def profile(self) -> PotentialProfile:
        return PotentialProfile(self.density)

    @property
    def E0(self):
        return self.profile.E0

    @property
    def P0(self):
        return self.profile.P0

    @property
    def span(self):
        """Length ``P(0) - E0`` of the energy interval (may be infinite)."""
        return self.P0 - self.E0

    def Phi(self, h):
        h = np.asarray(h, dtype=float)
        return invert_P(self.profile, np.minimum(h + self.E0, self.P0))

    def F0(self, h):
        return self.density(self.Phi(h))

    def F0_prime(self, h):
        r = np.asarray(self.Phi(h))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.asarray(self.density.d1(r)) / np.asarray(eval_L_prime(self.density, r))
        return val.item() if val.ndim == 0 else val

    def F0_second(self, h):
        r = np.asarray(self.Phi(h))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.asarray(X_function(self.density, r)) \
                / np.abs(np.asarray(eval_L_prime(self.density, r))) ** 3
        return val.item() if val.ndim == 0 else val

    @property
    def F0_prime_at_zero(self) -> float:
        """``p'(R) / P'(R)`` (non-negative)."""
        R = self.density.R
        return float(self.density.d1(R)) / float(eval_L_prime(self.density, R))


def build_energy_slice(p: RadialDensity) -> EnergySlice:
    """Compose ``F0 = p o Phi``; rejects densities that are not strictly decreasing."""
    if not is_strictly_decreasing(p):
        raise DomainError("density must be positive and strictly decreasing on [0, R)")
    return EnergySlice(p)


# -- sufficient conditions ---------------------------------------------------------

def _cell_lower_bounds(v):
    """Lower bound of a C^2 function on each cell between consecutive samples.

    Between two samples the function deviates from the chord by at most
    h^2 max|f''| / 8; the second differences at both cell ends estimate h^2 f''.
    """
    if v.size < 3:
        return np.minimum(v[:-1], v[1:])
    curv = np.abs(np.diff(v, 2))
    at_nodes = np.concatenate([curv[:1], curv, curv[-1:]])
    return np.minimum(v[:-1], v[1:]) - np.maximum(at_nodes[:-1], at_nodes[1:]) / 8.0


def certify_positive(func, a, b, samples=10_000, *, depth=10, split=8, max_cells=4096):
    """Sampling certificate that ``func > 0`` on ``[x_1, x_N]``, ``x_j = a + (b-a) j/(N+1)``.

    Every sample must be positive and every cell's interpolation lower bound
    positive. Cells failing only the margin test are subdivided (at most
    ``depth`` times), which handles integrable blow-ups near an endpoint.
    """
    x = a + (b - a) * np.arange(1, samples + 1) / (samples + 1)
    v = np.asarray(func(x), dtype=float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        return False
    bad = np.flatnonzero(_cell_lower_bounds(v) <= 0)
    lo, hi = x[bad], x[bad + 1]
    for _ in range(depth):
        if lo.size == 0:
            return True
        if lo.size > max_cells:
            return False
        sub = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, split + 1)
        sv = np.asarray(func(sub), dtype=float)
        if not np.all(np.isfinite(sv)) or np.any(sv <= 0):
            return False
        lb = np.apply_along_axis(_cell_lower_bounds, 1, sv)
        rows, cols = np.nonzero(lb <= 0)
        lo, hi = sub[rows, cols], sub[rows, cols + 1]
    return lo.size == 0


@dataclass(frozen=True)
class SufficientFlags:
    a: bool
    b: bool
    c: bool
    consistent: bool  # (a) <=> (b), (c) => (b)

    def fired(self):
        return [k for k in ("c", "b", "a") if getattr(self, k)]


def check_sufficient(p: RadialDensity, samples: int = 10_000) -> SufficientFlags:
    """Evaluate conditions 3a, 3b, 3c on a sample grid of ``samples`` interior points."""
    R = p.R
    flag_c = certify_positive(lambda r: 2.0 / r * np.asarray(p.d1(r)) + np.asarray(p.d2(r)),
                              0.0, R, samples)
    flag_b = certify_positive(lambda r: np.asarray(X_function(p, r)), 0.0, R, samples)
    # 3a on an energy grid through F0''; an infinite energy range is mapped back to radii
    es = EnergySlice(p)
    if np.isfinite(es.span):
        flag_a = certify_positive(es.F0_second, 0.0, es.span, samples)
    else:
        flag_a = certify_positive(
            lambda r: np.asarray(X_function(p, r)) / np.abs(np.asarray(eval_L_prime(p, r))) ** 3,
            0.0, R, samples)
    consistent = (flag_a == flag_b) and (flag_b or not flag_c)
    return SufficientFlags(flag_a, flag_b, flag_c, consistent)


# -- dH/dh -------------------------------------------------------------------------

def _check_h(es: EnergySlice, h):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0) or np.any(h >= es.span):
        raise RangeError(f"h must lie in the open interval (0, {es.span})")
    return h


_DROP_T, _DROP_W = np.polynomial.legendre.leggauss(24)
_DROP_T = 0.5 * (_DROP_T + 1.0)
_DROP_W = 0.5 * _DROP_W


def _potential_drop(p, phi, u2, P_phi):
    """``P(phi) - P(phi + u2)``.

    Where the direct difference loses more than six digits it is replaced
    by ``int_phi^{phi+u2} |P'(t)| dt`` with ``t = phi + u2 tau^2``, which
    keeps full precision and tames an integrable ``P'`` singularity at 0.
    """
    phi, u2, P_phi = np.broadcast_arrays(phi, u2, P_phi)
    drop = P_phi - np.asarray(p.potential(phi + u2))
    small = drop < 1e-6 * np.abs(P_phi)
    if np.any(small):
        ph, w2 = phi[small][:, None], u2[small][:, None]
        t = ph + w2 * _DROP_T**2
        dP = np.asarray(eval_L_prime(p, t))
        drop = drop.copy()
        drop[small] = -np.sum(dP * 2.0 * w2 * _DROP_T * _DROP_W, axis=-1)
    return drop


def _r_space_integral(es: EnergySlice, h, rtol=1e-11):
    """``int_Phi^R X/P'^2 / sqrt(P(Phi) - P(r)) dr`` with ``r = Phi + u^2``."""
    h = np.asarray(h, dtype=float)
    if h.ndim > 0:
        # one energy at a time, so each integral converges on its own panel count
        pairs = [_r_space_integral(es, hi, rtol) for hi in h.ravel()]
        val = np.array([v for v, _ in pairs]).reshape(h.shape)
        err = np.array([e for _, e in pairs]).reshape(h.shape)
        return val, err
    p = es.density
    phi = np.asarray(es.Phi(h), dtype=float)
    P_phi = h + es.E0
    top = np.sqrt(np.maximum(p.R - phi, 0.0))

    def integrand(u):
        ph = phi[..., None]
        u2 = u * u
        r = np.minimum(ph + u2, p.R)
        drop = _potential_drop(p, ph, u2, np.asarray(P_phi)[..., None])
        dP = np.asarray(eval_L_prime(p, r))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2.0 * u * np.asarray(X_function(p, r)) / dP**2 / np.sqrt(drop)
        return np.where(u > 0, val, 0.0)

    return gauss_legendre(integrand, np.zeros_like(top), top, rtol=rtol, atol=1e-14)


@dataclass(frozen=True)
class DerivativeSample:
    value: np.ndarray
    error: np.ndarray


def dH_dh(p, h, *, method="r", slice_: EnergySlice | None = None) -> DerivativeSample:
    """``d/dh H_{F0'}(h)`` with a quadrature error estimate.

    ``method="r"`` integrates over radii (the Phi(h)-endpoint singularity is
    removed by ``r = Phi + u^2``); ``method="s"`` integrates ``F0''`` over
    energies. Both are exact rewrites of each other.
    """
    es = slice_ or EnergySlice(p)
    h = _check_h(es, h)
    head = es.F0_prime_at_zero / np.sqrt(h)
    if method == "r":
        tail, err = _r_space_integral(es, h)
    elif method == "s":
        tail, err = abel_kernel(es.F0_second, h, rtol=1e-11)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DerivativeSample(np.asarray(head + tail), np.asarray(err))


def J_integral(p, phi, *, slice_: EnergySlice | None = None):
    """``int_phi^R J(r, h) dr`` with ``h = P(phi) - E0``; returns (value, error).

    ``J(r, h) = X/|P'|^2 * sqrt((P(phi) - E0) / (P(phi) - P(r)))``.
    """
    es = slice_ or EnergySlice(p)
    h = float(p.potential(phi)) - es.E0
    val, err = _r_space_integral(es, np.asarray(h))
    return float(val) * math.sqrt(h), float(err) * math.sqrt(h)


def J_function(p, r, phi):
    """Integrand ``J(r, h)`` of the radial form, for tabulation."""
    P_phi = float(p.potential(phi))
    E0 = float(p.potential(p.R))
    r = np.asarray(r, dtype=float)
    dP = np.asarray(eval_L_prime(p, r))
    drop = P_phi - np.asarray(p.potential(r))
    return np.asarray(X_function(p, r)) / dP**2 * np.sqrt((P_phi - E0) / drop)


def recover_q(p, h, *, method="r", slice_: EnergySlice | None = None):
    """``q(h) = (1/(4 pi sqrt2)) (2/pi) dH/dh``."""
    d = dH_dh(p, h, method=method, slice_=slice_)
    val = Q_FACTOR * d.value
    return val.item() if np.ndim(h) == 0 else val


def recover_q_with_error(p, h, *, slice_: EnergySlice | None = None):
    d = dH_dh(p, h, slice_=slice_)
    return Q_FACTOR * d.value, Q_FACTOR * d.error


# -- verdict -----------------------------------------------------------------------

@dataclass
class ExtendabilityReport:
    verdict: str
    evidence: str
    flags: dict
    X_samples: dict = field(default_factory=dict)
    dH_samples: dict = field(default_factory=dict)
    q_min: float | None = None
    q_min_at: float | None = None
    density: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for key in ("X_samples", "dH_samples"):
            d[key] = {k: np.asarray(v).tolist() for k, v in d[key].items()}
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def energy_grid(span, levels=40, interior=64):
    """Energies dense near both ends: span 2^-k, span (1 - 2^-k), plus a uniform interior."""
    k = np.arange(1, levels + 1)
    near0 = span * 2.0 ** (-k)
    near1 = span * (1.0 - 2.0 ** (-k))
    mid = span * np.arange(1, interior) / interior
    grid = np.unique(np.concatenate([near0, mid, near1]))
    return grid[(grid > 0) & (grid < span)]


def extendability_verdict(p: RadialDensity, grid_size: int = 10_000,
                          sample_points: int = 200) -> ExtendabilityReport:
    """Decide extendability: sufficient conditions first, then direct q sampling.

    A ``NotExtendable`` verdict requires a negative q whose quadrature error is
    below half its magnitude; anything uncertified is ``Inconclusive``.
    """
    if not p.analytic:
        raise DomainError("extendability verdicts need analytic p' and p''")
    es = build_energy_slice(p)
    flags = check_sufficient(p, grid_size)
    r = p.R * np.arange(1, sample_points + 1) / (sample_points + 1)
    report = ExtendabilityReport(
        verdict="Inconclusive", evidence="", density=p.describe(),
        flags={"3a": flags.a, "3b": flags.b, "3c": flags.c, "consistent": flags.consistent},
        X_samples={"r": r, "X": np.asarray(X_function(p, r))})
    if flags.c:
        report.verdict, report.evidence = "Extendable", "3c"
        return report
    if flags.b or flags.a:
        report.verdict, report.evidence = "Extendable", "3b" if flags.b else "3a"
        return report
    if not np.isfinite(es.span):
        report.evidence = "infinite-energy-range"
        return report

    h = energy_grid(es.span)
    d = dH_dh(p, h, slice_=es)
    q, qerr = Q_FACTOR * d.value, Q_FACTOR * d.error
    report.dH_samples = {"h": h, "dH_dh": d.value, "error": d.error}
    i = int(np.argmin(q))
    report.q_min, report.q_min_at = float(q[i]), float(h[i])
    certified_neg = (q < 0) & (qerr < 0.5 * np.abs(q))
    if np.any(certified_neg):
        report.verdict, report.evidence = "NotExtendable", "numerical-negative-q"
    elif np.all(q - qerr > 0):
        report.verdict, report.evidence = "Extendable", "direct-q-positivity"
    else:
        report.evidence = "uncertified-q-samples"
    return report
