import math

import numpy as np
import pytest

from stellarvps import models
from stellarvps.inverse_problem import EnergySlice, X_function, dH_dh
from stellarvps.potential import DomainError, eval_L, eval_L_prime, eval_L_second, potential_profile

PI = math.pi


def test_names_and_listing():
    assert models.fixture_names() == ["quadratic-5.1", "squared-linear-5.2", "exponential-5.3",
                                      "power-law-5.4", "sqrt-q-5.8", "quartic-5.9"]
    rows = models.list_fixtures()
    assert rows[0] == ["name", "parameters", "expected", "description"]
    assert len(rows) == 7


def test_fixture_errors():
    with pytest.raises(KeyError):
        models.fixture("nope")
    with pytest.raises(TypeError):
        models.fixture("quartic-5.9", R=3.0)
    with pytest.raises(DomainError):
        models.fixture("power-law-5.4", b=3.0)
    with pytest.raises(DomainError):
        models.fixture("power-law-5.4", b=0.0)
    with pytest.raises(DomainError):
        models.fixture("sqrt-q-5.8", c=-1.0)
    # None parameters mean "use the default"
    assert models.fixture("exponential-5.3", R=None).params == {"R": 2.0}


def test_expected_tags():
    assert models.fixture("exponential-5.3", R=1.5).expected == models.REGIME_DEPENDENT
    assert models.fixture("exponential-5.3", R=2.0).expected == models.EXTENDABLE
    assert models.fixture("power-law-5.4", b=0.5).expected == models.REGIME_DEPENDENT
    assert models.fixture("quartic-5.9").expected == models.NOT_EXTENDABLE
    assert models.fixture("sqrt-q-5.8").expected is None


def test_quadratic_G0():
    fx = models.quadratic(8.0)
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(fx.G0(t), PI * 64 / 5 * (t * t + 4 * t / 3), rtol=1e-15)


def test_sqrt_G0():
    c = 1e-4
    fx = models.sqrt_q(c)
    assert fx.G0(4.0) == pytest.approx(2 ** 0.25 / (PI * math.sqrt(c)) * 2.0, rel=1e-15)
    assert models.SQRT_Q_DEFAULT_C == pytest.approx(math.sqrt(2) / (16 * PI**4 * 1000), rel=1e-15)


def test_quartic_parameters(quartic):
    p = quartic.density
    assert quartic.params == {"R": 2.0, "w": 1.3, "a0": 2.0}
    np.testing.assert_allclose(p.coeffs, [2.0, 0.0, -39 / 146, -107 / 146, 45 / 146], rtol=1e-15)
    r = np.linspace(0.0, 2.0, 21)
    np.testing.assert_allclose(p.d1(r), quartic.closed["dp"](r), atol=1e-14)
    np.testing.assert_allclose(p.d2(r), quartic.closed["d2p"](r), atol=1e-14)
    assert p.d2(1.3) == pytest.approx(0.0, abs=0.2)  # inflection near w
    assert p.d1(2.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("name,params", [("quadratic-5.1", {"R": 8.0}), ("quadratic-5.1", {"R": 2.0}),
                                         ("squared-linear-5.2", {"R": 1.0}),
                                         ("squared-linear-5.2", {"R": 3.0}),
                                         ("power-law-5.4", {"b": 0.5}), ("power-law-5.4", {"b": 1.5}),
                                         ("power-law-5.4", {"b": 2.5}), ("quartic-5.9", {})])
def test_closed_forms_match_pipeline(name, params):
    fx = models.fixture(name, **params)
    p, cl = fx.density, fx.closed
    r = p.R * np.linspace(0.02, 0.98, 40)
    checks = {"P": lambda x: eval_L(p, x), "dP": lambda x: eval_L_prime(p, x),
              "d2P": lambda x: eval_L_second(p, x), "X": lambda x: X_function(p, x)}
    done = 0
    for key, generic in checks.items():
        if key in cl:
            np.testing.assert_allclose(cl[key](r), generic(r), rtol=1e-8, atol=1e-12, err_msg=key)
            done += 1
    assert done >= 1


def test_quadratic_energy_closed_forms(quadratic8):
    cl = quadratic8.closed
    prof = potential_profile(quadratic8.density)
    assert prof.E0 == pytest.approx(cl["E0"], rel=1e-14)
    assert prof.P0 == pytest.approx(cl["P0"], rel=1e-14)
    es = EnergySlice(quadratic8.density)
    h = es.span * np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(es.F0(h), cl["F0"](h), rtol=1e-8)
    np.testing.assert_allclose(dH_dh(quadratic8.density, h, slice_=es).value, cl["dH_dh"](h), rtol=1e-8)
    assert cl["a"] == pytest.approx(5 / (PI * 64))


def test_squared_linear_criterion_c():
    fx = models.squared_linear(2.0)
    p = fx.density
    r = np.linspace(0.1, 1.9, 19)
    np.testing.assert_allclose(2 / r * p.d1(r) + p.d2(r), fx.closed["criterion_c"](r), rtol=1e-12)


def test_power_law_criterion_c():
    fx = models.power_law(1.7, 1.0)
    p = fx.density
    r = np.linspace(0.05, 0.95, 19)
    np.testing.assert_allclose(2 / r * p.d1(r) + p.d2(r), fx.closed["criterion_c"](r), rtol=1e-11)


TABLE_X = [(0.25, 2.33), (0.5, 1.47), (0.75, 0.910), (1.0, 0.541), (1.25, 0.302), (1.5, 0.151),
           (1.75, 0.056), (2.0, 0.0), (1e-5, 3.6218)]


@pytest.mark.parametrize("r,printed", TABLE_X)
def test_exponential_table_row(r, printed):
    fx = models.exponential(2.0)
    assert fx.closed["X"](r) == pytest.approx(printed, abs=1e-2)


def test_exponential_limit():
    for R in (0.5, 2.0, 5.0):
        fx = models.exponential(R)
        assert fx.closed["X_limit"] == pytest.approx(4 * PI * (1 / 3 - math.exp(-R) / 3), rel=1e-15)
        assert float(fx.closed["X"](1e-9)) == pytest.approx(fx.closed["X_limit"], rel=1e-7)
    assert models.exponential(2.0).closed["X_limit"] == pytest.approx(3.6220, abs=1e-3)


def test_exponential_monotone_in_R():
    rng = np.random.default_rng(11)
    for _ in range(100):
        R = rng.uniform(0.5, 5.0)
        r = rng.uniform(0.01, R)
        dR = 1e-5
        fd = (models.exponential(R + dR).closed["X"](r) - models.exponential(R - dR).closed["X"](r)) / (2 * dR)
        exact = models.exponential(R).closed["dX_dR"](r)
        assert exact > 0
        assert fd == pytest.approx(exact, rel=1e-5, abs=1e-9)


def test_exponential_boundary_curve():
    r = np.array([0.5, 1.0, 1.5])
    Rb = models.exponential_boundary(r)
    assert np.all((Rb > r) & (Rb < 2.0))
    for ri, Ri in zip(r, Rb):
        assert float(models.exponential(Ri).closed["X"](ri)) == pytest.approx(0.0, abs=1e-9)


def test_quartic_sign_pattern(quartic):
    X = quartic.closed["X"]
    assert X(1.0) < 0 < X(2.0)
    assert quartic.closed["r1"] == pytest.approx(1.3575585, abs=1e-7)
