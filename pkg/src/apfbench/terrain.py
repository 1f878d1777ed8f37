"""Lunar-analog obstacle fields from the exponential size-frequency model.

The cumulative fractional area covered by features wider than ``D`` is
``k exp(-q D)``; differentiating and counting discs of area ``pi D^2 / 4``
gives the cumulative number per square meter

    N(D) = 4 q k / pi * (exp(-q D) / D - q Ei(-q D)).

Diameters are drawn from ``N`` truncated to ``[d_min, d_max]`` by inverse
transform sampling and then rescaled so the field hits a prescribed area
coverage with a prescribed count (the preset tables).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1

from .core import Obstacle, ObstacleKind, Rect, Scenario, Vec2, empty_scenario

D_CRIT = 0.065  # rocks wider than this are obstacles for the rover


class TerrainError(RuntimeError):
    pass


@dataclass(frozen=True)
class AbundanceModel:
    k_abund: float
    q: float
    d_min: float
    d_max: float

    def __post_init__(self):
        if not 0 < self.k_abund < 1:
            raise ValueError("k_abund must be in (0, 1)")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not 0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")


ROCKS = AbundanceModel(k_abund=0.02, q=1.6, d_min=D_CRIT, d_max=2.0)
# only the shape (q) matters once counts and coverage are fixed
CRATERS = AbundanceModel(k_abund=0.15, q=1.2, d_min=0.3, d_max=4.0)


def exp_integral_neg(x):
    """``Ei(-x)`` for ``x > 0``, i.e. ``-E1(x)``."""
    return -exp1(x)


def cumulative_area(d, m: AbundanceModel):
    """Fraction of the surface covered by features wider than ``d``."""
    arr = np.asarray(d, dtype=float)
    if np.any(arr < 0):
        raise ValueError("diameter must be non-negative")
    out = m.k_abund * np.exp(-m.q * arr)
    return out if np.ndim(d) else float(out)


def cumulative_number(d, m: AbundanceModel):
    """Cumulative count of features wider than ``d`` per square meter."""
    arr = np.asarray(d, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("diameter must be positive")
    q, k = m.q, m.k_abund
    out = 4.0 * q * k / math.pi * (np.exp(-q * arr) / arr - q * exp_integral_neg(q * arr))
    return out if np.ndim(d) else float(out)


def truncated_cdf(d, m: AbundanceModel):
    n_lo = cumulative_number(m.d_min, m)
    n_hi = cumulative_number(m.d_max, m)
    d = np.clip(np.asarray(d, dtype=float), m.d_min, m.d_max)
    return (n_lo - cumulative_number(d, m)) / (n_lo - n_hi)


def sample_diameters(count: int, m: AbundanceModel, rng: np.random.Generator) -> np.ndarray:
    """Inverse-transform draws from the truncated cumulative-number law."""
    if count <= 0:
        raise ValueError("count must be positive")
    u = rng.random(count)
    n_lo = cumulative_number(m.d_min, m)
    n_hi = cumulative_number(m.d_max, m)
    level = n_lo - u * (n_lo - n_hi)
    lo = np.full(count, m.d_min)
    hi = np.full(count, m.d_max)
    # N is strictly decreasing; bisection to float resolution
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        above = cumulative_number(mid, m) > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def rescale_to_area(d: np.ndarray, area: float, anchor: float = 0.0) -> np.ndarray:
    """Map ``d -> anchor + s (d - anchor)`` with ``s > 0`` so that the disc areas sum to ``area``.

    With ``anchor = 0`` this is a plain multiplicative rescale.  Rocks use
    ``anchor = D_CRIT`` so that shrinking never drops a rock below the
    obstacle threshold.
    """
    e = d - anchor
    # pi/4 * sum((anchor + s e)^2) = area  ->  a s^2 + b s + c = 0
    a = np.sum(e * e)
    b = 2.0 * anchor * np.sum(e)
    c = len(d) * anchor * anchor - 4.0 * area / math.pi
    if c >= 0:
        raise TerrainError("target area is smaller than the anchor discs alone")
    s = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return anchor + s * e


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    rock_count: int
    crater_count: int
    target_rock_area_fraction: float = 0.018
    target_crater_area_fraction: float = 0.15
    rock_model: AbundanceModel = ROCKS
    crater_model: AbundanceModel = CRATERS
    geometry: Scenario = field(default_factory=empty_scenario)

    def __post_init__(self):
        if self.rock_count <= 0 or self.crater_count <= 0:
            raise ValueError("counts must be positive")
        for f in (self.target_rock_area_fraction, self.target_crater_area_fraction):
            if not 0 < f < 1:
                raise ValueError("area fractions must be in (0, 1)")


PRESETS = {
    "A": ScenarioSpec("A", 42, 38),
    "B": ScenarioSpec("B", 88, 32),
    "C": ScenarioSpec("C", 137, 24),
    # alternative crater coverage quoted alongside the scenario table
    "A11": ScenarioSpec("A11", 42, 38, target_crater_area_fraction=0.11),
    "B11": ScenarioSpec("B11", 88, 32, target_crater_area_fraction=0.11),
    "C11": ScenarioSpec("C11", 137, 24, target_crater_area_fraction=0.11),
}


def preset(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown scenario preset {name!r}; choose from {sorted(PRESETS)}") from None


MAX_ATTEMPTS = 10_000


def _place(radii: np.ndarray, kind: ObstacleKind, geom: Scenario, rng: np.random.Generator) -> list[Obstacle]:
    reg = geom.obstacle_region
    sx, sy = geom.start
    gx, gy = geom.goal_center
    out = []
    for r in radii:
        for _ in range(MAX_ATTEMPTS):
            x = rng.uniform(reg.xmin, reg.xmax)
            y = rng.uniform(reg.ymin, reg.ymax)
            if math.hypot(x - sx, y - sy) > r + geom.rover_radius and \
                    math.hypot(x - gx, y - gy) > r + geom.goal_radius:
                break
        else:
            raise TerrainError(f"could not place a {kind.value} of radius {r:.3f} m")
        out.append(Obstacle(Vec2(float(x), float(y)), float(r), kind))
    return out


def generate_scenario(spec: ScenarioSpec, seed: int) -> Scenario:
    """Random obstacle field with the preset's counts and coverages."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    geom = spec.geometry
    area = geom.obstacle_region.area
    rock_d = sample_diameters(spec.rock_count, spec.rock_model, rng)
    rock_d = rescale_to_area(rock_d, spec.target_rock_area_fraction * area, anchor=D_CRIT)
    crater_d = sample_diameters(spec.crater_count, spec.crater_model, rng)
    crater_d = rescale_to_area(crater_d, spec.target_crater_area_fraction * area)
    rocks = _place(rock_d[rock_d > D_CRIT] / 2.0, ObstacleKind.ROCK, geom, rng)
    craters = _place(crater_d / 2.0, ObstacleKind.CRATER, geom, rng)
    return dataclasses.replace(geom, obstacles=tuple(rocks + craters), seed=int(seed))


def coverage(scenario: Scenario, kind: ObstacleKind) -> float:
    """Summed disc area of one obstacle kind over the obstacle region area."""
    a = sum(math.pi * o.radius ** 2 for o in scenario.obstacles if o.kind == kind)
    return a / scenario.obstacle_region.area
