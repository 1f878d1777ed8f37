import math

import numpy as np
import pytest
from scipy import integrate, stats

from apfbench.core import ObstacleKind, distance
from apfbench.terrain import (CRATERS, D_CRIT, ROCKS, AbundanceModel, TerrainError, _place, coverage,
                              cumulative_area, cumulative_number, exp_integral_neg, generate_scenario, preset,
                              rescale_to_area, sample_diameters, truncated_cdf)

# N(0.065) for k=0.02, q=1.6 with Ei evaluated by 50-digit adaptive quadrature (mpmath.quad)
GOLDEN_N = 0.681438382484351493
# Ei(-0.104) from the same quadrature
GOLDEN_EI = -1.78750600876934772607


def test_cumulative_area_examples():
    assert cumulative_area(0.0, ROCKS) == 0.02
    assert cumulative_area(0.065, ROCKS) == pytest.approx(0.02 * math.exp(-0.104), rel=1e-15)
    assert cumulative_area(0.065, ROCKS) == pytest.approx(0.018025, abs=5e-7)
    vals = cumulative_area(np.linspace(0, 20, 200), ROCKS)
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-14
    with pytest.raises(ValueError):
        cumulative_area(-0.1, ROCKS)


def test_exp_integral_against_quadrature():
    assert exp_integral_neg(0.104) == pytest.approx(GOLDEN_EI, rel=1e-13)
    for x in (0.01, 0.104, 0.5, 1.0, 3.2, 10.0):
        quad, _ = integrate.quad(lambda t: math.exp(-t) / t, x, np.inf, epsabs=0, epsrel=1e-13, limit=200)
        assert exp_integral_neg(x) == pytest.approx(-quad, rel=1e-10)


def test_cumulative_number_golden_value():
    assert cumulative_number(0.065, ROCKS) == pytest.approx(GOLDEN_N, rel=1e-12)


def test_cumulative_number_live_quadrature():
    k, q, d = 0.02, 1.6, 0.065
    ei, _ = integrate.quad(lambda t: math.exp(-t) / t, q * d, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    want = 4 * q * k / math.pi * (math.exp(-q * d) / d + q * ei)
    assert cumulative_number(d, ROCKS) == pytest.approx(want, rel=1e-10)


def test_cumulative_number_monotone_and_linear():
    d = np.linspace(0.01, 5.0, 100)
    n = cumulative_number(d, ROCKS)
    assert np.all(n > 0) and np.all(np.diff(n) < 0)
    double = AbundanceModel(0.04, ROCKS.q, ROCKS.d_min, ROCKS.d_max)
    assert np.allclose(cumulative_number(d, double), 2 * n, rtol=1e-14, atol=0)
    with pytest.raises(ValueError):
        cumulative_number(0.0, ROCKS)


def _disc_density(model):
    """Number density of features of diameter s: (-dA/ds) / (pi s^2 / 4)."""
    k, q = model.k_abund, model.q
    return lambda s: k * q * math.exp(-q * s) / (math.pi * s * s / 4)


@pytest.mark.xfail(strict=True, reason="the closed form carries -q Ei(-qD); integrating its own "
                   "density gives +q Ei(-qD), so the two cannot both hold with Ei(-x) = -E1(x)")
@pytest.mark.parametrize("model", [ROCKS, CRATERS])
def test_cumulative_number_integral_relation(model):
    """N(D) counts discs wider than D: the integral of the disc number density from D to infinity."""
    density = _disc_density(model)
    for d in np.geomspace(0.02, 6.0, 10):
        want, _ = integrate.quad(density, d, np.inf, epsabs=0, epsrel=1e-12, limit=200)
        assert cumulative_number(d, model) == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("model", [ROCKS, CRATERS])
def test_flipped_ei_sign_satisfies_integral_relation(model):
    """Diagnosis of the xfail above: only the Ei sign separates the closed form from the integral."""
    density = _disc_density(model)
    k, q = model.k_abund, model.q
    for d in np.geomspace(0.02, 6.0, 10):
        want, _ = integrate.quad(density, d, np.inf, epsabs=0, epsrel=1e-12, limit=200)
        flipped = 4 * q * k / math.pi * (math.exp(-q * d) / d + q * exp_integral_neg(q * d))
        assert flipped == pytest.approx(want, rel=1e-6)
        gap = cumulative_number(d, model) - flipped
        assert gap == pytest.approx(-8 * q * q * k / math.pi * exp_integral_neg(q * d), rel=1e-9)


def test_sample_diameters_bounds_and_determinism():
    a = sample_diameters(5000, ROCKS, np.random.default_rng(1))
    b = sample_diameters(5000, ROCKS, np.random.default_rng(1))
    assert np.array_equal(a, b)
    assert a.min() >= ROCKS.d_min and a.max() <= ROCKS.d_max
    with pytest.raises(ValueError):
        sample_diameters(0, ROCKS, np.random.default_rng(1))


@pytest.mark.parametrize("model", [ROCKS, CRATERS])
def test_sample_diameters_ks(model):
    n_lo = cumulative_number(model.d_min, model)
    n_hi = cumulative_number(model.d_max, model)

    def cdf(d):
        d = np.clip(d, model.d_min, model.d_max)
        return (n_lo - cumulative_number(d, model)) / (n_lo - n_hi)

    x = sample_diameters(100_000, model, np.random.default_rng(2024))
    res = stats.kstest(x, cdf)
    assert res.statistic < 0.01
    assert np.allclose(truncated_cdf(x[:100], model), cdf(x[:100]))


def test_rescale_hits_area():
    d = sample_diameters(50, ROCKS, np.random.default_rng(3))
    for anchor in (0.0, D_CRIT):
        out = rescale_to_area(d, 12.0, anchor)
        assert math.fsum(math.pi * out * out / 4) == pytest.approx(12.0, rel=1e-12)
        assert np.all(np.argsort(out) == np.argsort(d))
    assert np.all(rescale_to_area(d, 0.5, D_CRIT) > D_CRIT)
    with pytest.raises(TerrainError):
        rescale_to_area(d, 1e-3, D_CRIT)


@pytest.mark.parametrize("name,rocks,craters", [("A", 42, 38), ("B", 88, 32), ("C", 137, 24)])
def test_preset_counts(name, rocks, craters):
    for seed in (0, 1, 99):
        sc = generate_scenario(preset(name), seed)
        assert sum(o.kind is ObstacleKind.ROCK for o in sc.obstacles) == rocks
        assert sum(o.kind is ObstacleKind.CRATER for o in sc.obstacles) == craters
        assert all(2 * o.radius > D_CRIT for o in sc.obstacles if o.kind is ObstacleKind.ROCK)


@pytest.mark.parametrize("name", ["A", "B", "C", "A11"])
def test_coverage_over_100_seeds(name):
    spec = preset(name)
    for seed in range(100):
        sc = generate_scenario(spec, seed)
        assert abs(coverage(sc, ObstacleKind.ROCK) - 0.018) <= 0.001
        assert abs(coverage(sc, ObstacleKind.CRATER) - spec.target_crater_area_fraction) <= 0.001
        reg = sc.obstacle_region
        for o in sc.obstacles:
            assert reg.xmin <= o.center.x <= reg.xmax and reg.ymin <= o.center.y <= reg.ymax
            assert distance(o.center, sc.start) > o.radius + sc.rover_radius
            assert distance(o.center, sc.goal_center) > o.radius + sc.goal_radius


def test_crater_presets():
    assert preset("a").target_crater_area_fraction == 0.15
    assert preset("A11").target_crater_area_fraction == 0.11
    with pytest.raises(ValueError):
        preset("Z")


def test_generation_determinism():
    a = generate_scenario(preset("B"), 7)
    assert a == generate_scenario(preset("B"), 7)
    assert a.to_json() == generate_scenario(preset("B"), 7).to_json()
    b = generate_scenario(preset("B"), 8)
    assert [o.center for o in a.obstacles] != [o.center for o in b.obstacles]
    assert a.seed == 7


def test_placement_gives_up():
    geom = preset("A").geometry
    with pytest.raises(TerrainError):
        _place(np.array([100.0]), ObstacleKind.CRATER, geom, np.random.default_rng(0))


def test_abundance_validation():
    for bad in ((0.0, 1.6, 0.1, 1.0), (0.02, 0.0, 0.1, 1.0), (0.02, 1.6, 1.0, 0.5), (1.0, 1.6, 0.1, 1.0)):
        with pytest.raises(ValueError):
            AbundanceModel(*bad)
