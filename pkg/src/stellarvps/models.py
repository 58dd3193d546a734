"""Built-in model fixtures with their closed forms.

Each fixture bundles a density (or, for the direct problem, a G0 map), the
closed-form expressions available for it, and the extendability verdict
expected from the analysis of the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ans_solver import GZeroMap
from .potential import (
    DomainError,
    ExponentialDensity,
    PolynomialDensity,
    PowerLawDensity,
    RadialDensity,
)

PI = math.pi

EXTENDABLE = "Extendable"
NOT_EXTENDABLE = "NotExtendable"
REGIME_DEPENDENT = "RegimeDependent"


@dataclass
class ModelFixture:
    name: str
    params: dict
    density: Optional[RadialDensity] = None
    closed: dict = field(default_factory=dict)
    G0: Optional[GZeroMap] = None
    expected: Optional[str] = None
    description: str = ""

    def row(self):
        par = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return [self.name, par, self.expected or "-", self.description]


def _arr(x):
    return np.asarray(x, dtype=float)


def quadratic(R: float = 8.0) -> ModelFixture:
    """``p = 1 - (r/R)^2``: every quantity of the inverse problem is explicit."""
    a = 5.0 / (PI * R * R)
    closed = {
        "P": lambda r: PI * R * R * (0.2 * (_arr(r) / R) ** 4 - 2.0 / 3.0 * (_arr(r) / R) ** 2 + 1.0),
        "dP": lambda r: 4 * PI * R * R * (0.2 * _arr(r) ** 3 / R**4 - _arr(r) / (3 * R * R)),
        "d2P": lambda r: 4 * PI * R * R * (0.6 * _arr(r) ** 2 / R**4 - 1.0 / (3 * R * R)),
        "E0": 8.0 / 15.0 * PI * R * R,
        "P0": PI * R * R,
        "P_inv": lambda h: R * np.sqrt(5.0 / 3.0 - np.sqrt(np.maximum(
            5.0 * _arr(h) / (PI * R * R) - 20.0 / 9.0, 0.0))),
        "F0": lambda h: np.sqrt(a * _arr(h) + 4.0 / 9.0) - 2.0 / 3.0,
        "dF0": lambda h: 0.5 * a / np.sqrt(a * _arr(h) + 4.0 / 9.0),
        "d2F0": lambda h: -0.25 * a * a / np.sqrt(a * _arr(h) + 4.0 / 9.0) ** 3,
        "dH_dh": lambda h: 1.0 / 3.0 / ((_arr(h) + 4.0 / (9.0 * a)) * np.sqrt(_arr(h))),
        "q": lambda h: math.sqrt(2.0) / (4 * PI**2) / 3.0
        / ((_arr(h) + 4.0 / (9.0 * a)) * np.sqrt(_arr(h))),
        "X": lambda r: -16.0 * PI / 5.0 * _arr(r) ** 3 / R**4,
        "a": a,
    }
    return ModelFixture("quadratic-5.1", {"R": R}, PolynomialDensity((1.0, 0.0, -1.0 / R**2), R),
                        closed, GZeroMap.quadratic(R), EXTENDABLE, "1 - (r/R)^2")


def squared_linear(R: float = 1.0) -> ModelFixture:
    """``p = (1 - r/R)^2``; X is positive, the third criterion is not."""

    def f(alpha):
        return 2.0 / 3.0 - 2.0 * alpha + 2.2 * alpha**2 - 0.8 * alpha**3

    closed = {
        "P": lambda r: 4 * PI * (-_arr(r) ** 2 / 6 + _arr(r) ** 3 / (6 * R)
                                 - _arr(r) ** 4 / (20 * R * R) + R * R / 12.0),
        "dP": lambda r: 4 * PI * (-_arr(r) / 3 + _arr(r) ** 2 / (2 * R) - _arr(r) ** 3 / (5 * R * R)),
        "d2P": lambda r: 4 * PI * (-1.0 / 3.0 + _arr(r) / R - 0.6 * _arr(r) ** 2 / (R * R)),
        "X": lambda r: 4 * PI / R * f(_arr(r) / R),
        "f": f,
        "criterion_c": lambda r: 6.0 / R**2 - 4.0 / (_arr(r) * R),
    }
    return ModelFixture("squared-linear-5.2", {"R": R},
                        PolynomialDensity((1.0, -2.0 / R, 1.0 / R**2), R), closed, None,
                        EXTENDABLE, "(1 - r/R)^2")


def exponential_boundary(r):
    """Cut-off radius R(r) at which X(r, R) = 0, for 0 < r <= R < 2 (diagnostic)."""
    r = _arr(r)
    return -np.log(6.0 * ((r + 2.0) * np.exp(-r) + r - 2.0) / ((r + 1.0) * r**3))


def exponential(R: float = 2.0) -> ModelFixture:
    """``p = e^{-r} - e^{-R}``; X > 0 on (0, R) exactly when R >= 2."""
    d = ExponentialDensity(R)
    closed = {
        "d2P": lambda r: 4 * PI * (-np.exp(-_arr(r)) * (1 + 2 / _arr(r) + 4 / _arr(r) ** 2
                                                         + 4 / _arr(r) ** 3)
                                   + 4 / _arr(r) ** 3 + math.exp(-R) / 3),
        "X": d.X,
        "X_limit": 4 * PI * (1.0 / 3.0 - math.exp(-R) / 3.0),
        "dX_dR": lambda r: 4 * PI / 3 * (_arr(r) + 1) * np.exp(-(_arr(r) + R)),
        "boundary": exponential_boundary,
    }
    return ModelFixture("exponential-5.3", {"R": R}, d, closed, None,
                        EXTENDABLE if R >= 2 else REGIME_DEPENDENT, "e^{-r} - e^{-R}")


def power_law(b: float = 1.5, R: float = 1.0) -> ModelFixture:
    """``p = r^{-b} - R^{-b}``, 0 < b < 3 (b >= 3 is rejected: infinite mass)."""
    if not 0 < b < 3:
        raise DomainError("power-law exponent must lie in (0, 3)")
    d = PowerLawDensity(b, R)
    closed = {
        "criterion_c": lambda r: b * (b - 1) * _arr(r) ** (-b - 2),
        "X": lambda r: 4 * PI * R**-b * _arr(r) ** (-b - 1) / (3 - b) * b
        * (2 * ((R / _arr(r)) ** b - 1) + (b * b - b) / 3),
        "dp": lambda r: -b * _arr(r) ** (-b - 1),
        "d2p": lambda r: b * (b + 1) * _arr(r) ** (-b - 2),
    }
    if b != 2:
        closed["P"] = lambda r: 4 * PI * (-_arr(r) ** (2 - b) / ((3 - b) * (2 - b))
                                          + R**-b * _arr(r) ** 2 / 6 + b * R ** (2 - b) / (2 * (2 - b)))
    if b < 1:
        closed["X_root"] = R * (6.0 / (6.0 + b - b * b)) ** (1.0 / b)
    expected = EXTENDABLE if b >= 1 else REGIME_DEPENDENT
    return ModelFixture("power-law-5.4", {"b": b, "R": R}, d, closed, None, expected,
                        "r^{-b} - R^{-b}")


SQRT_Q_DEFAULT_C = math.sqrt(2.0) / (16.0 * PI**4 * 1000.0)


def sqrt_q(c: float = SQRT_Q_DEFAULT_C, R: float = 8.0) -> ModelFixture:
    """Direct problem with ``q(s) = c sqrt(s)``: ``F0 = (pi^2 c / sqrt2) h^2``."""
    if c <= 0:
        raise DomainError("c must be positive")
    k = PI**2 * c / math.sqrt(2.0)
    coef = 2.0 ** 0.25 / (PI * math.sqrt(c))
    closed = {
        "q": lambda s: c * np.sqrt(np.maximum(_arr(s), 0.0)),
        "F0": lambda h: k * _arr(h) ** 2,
        "dF0": lambda h: 2 * k * _arr(h),
        "d2F0": lambda h: np.full_like(_arr(h), 2 * k),
        "G0_coef": coef,
    }
    return ModelFixture("sqrt-q-5.8", {"c": c, "R": R}, None, closed, GZeroMap.sqrt(coef), None,
                        "q(s) = c sqrt(s) (direct problem)")


QUARTIC_COEFFS = (2.0, 0.0, -39.0 / 146.0, -107.0 / 146.0, 45.0 / 146.0)


def quartic() -> ModelFixture:
    """Quartic on R = 2 with an inflection at w = 13/10; strictly decreasing but unextendable."""
    R, w = 2.0, 1.3
    Xc = np.array([0, 0, -1093540, 1183812, -233688, -330515, 329025, -81000], dtype=float)
    closed = {
        "w": w,
        "dp": lambda r: (-78 * _arr(r) - 321 * _arr(r) ** 2 + 180 * _arr(r) ** 3) / 146,
        "d2p": lambda r: (-78 - 642 * _arr(r) + 540 * _arr(r) ** 2) / 146,
        "P": lambda r: 4 * PI * (-_arr(r) ** 2 / 3 + 39 / 2920 * _arr(r) ** 4
                                 + 107 / 4380 * _arr(r) ** 5 - 15 / 2044 * _arr(r) ** 6 + 558 / 365),
        "X": lambda r: 4 * PI / 746060 * np.polynomial.polynomial.polyval(_arr(r), Xc),
        "r1": w + 0.0575585,
        "phi_tilde": 0.01,
        "g1": lambda r: 4 / 0.3 * (_arr(r) - 0.31),
        "g2": lambda r: 1.21 / 0.7 * (_arr(r) - 1.3),
    }
    return ModelFixture("quartic-5.9", {"R": R, "w": w, "a0": 2.0},
                        PolynomialDensity(QUARTIC_COEFFS, R), closed, None, NOT_EXTENDABLE,
                        "2 + (-39 r^2 - 107 r^3 + 45 r^4)/146")


_FACTORIES: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "quadratic-5.1": (quadratic, ("R",)),
    "squared-linear-5.2": (squared_linear, ("R",)),
    "exponential-5.3": (exponential, ("R",)),
    "power-law-5.4": (power_law, ("b", "R")),
    "sqrt-q-5.8": (sqrt_q, ("c", "R")),
    "quartic-5.9": (quartic, ()),
}


def fixture_names():
    return list(_FACTORIES)


def fixture(name: str, **params) -> ModelFixture:
    """Build a fixture by name; parameters not accepted by the family are an error."""
    if name not in _FACTORIES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(_FACTORIES)}")
    factory, accepted = _FACTORIES[name]
    given = {k: v for k, v in params.items() if v is not None}
    extra = set(given) - set(accepted)
    if extra:
        raise TypeError(f"fixture {name} does not take {', '.join(sorted(extra))}")
    return factory(**given)


def list_fixtures() -> list[list[str]]:
    """Table rows (name, default parameters, expected verdict, description)."""
    return [["name", "parameters", "expected", "description"]] + \
        [fixture(n).row() for n in _FACTORIES]
