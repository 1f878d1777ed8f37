"""Geometry and configuration types shared by every module.

Everything here is an immutable value. Lengths are meters, angles radians.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class Vec2(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


class ObstacleKind(str, enum.Enum):
    ROCK = "rock"
    CRATER = "crater"
    ARTIFICIAL = "artificial"


class Obstacle(NamedTuple):
    """Circular no-go disc."""

    center: Vec2
    radius: float
    kind: ObstacleKind = ObstacleKind.ROCK

    @classmethod
    def at(cls, x: float, y: float, radius: float, kind: ObstacleKind = ObstacleKind.ROCK) -> "Obstacle":
        if not radius > 0:
            raise ValueError(f"obstacle radius must be positive, got {radius}")
        return cls(Vec2(float(x), float(y)), float(radius), ObstacleKind(kind))


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def clearance(p: Sequence[float], o: Obstacle) -> float:
    """Signed distance from ``p`` to the obstacle rim; negative inside the disc."""
    return distance(p, o.center) - o.radius


def in_collision(p: Sequence[float], rover_radius: float, obstacles: Iterable[Obstacle]) -> bool:
    return any(clearance(p, o) < rover_radius for o in obstacles)


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, p: Sequence[float]) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax


class Path:
    """Immutable polyline; consecutive duplicate points are dropped.

    Planners hand over an ``(n, 2)`` array through ``from_array``; the
    ``Vec2`` tuple is only built when somebody asks for ``waypoints``.
    """

    __slots__ = ("_pts", "_arr")

    def __init__(self, waypoints: Iterable[Sequence[float]]):
        pts: list[Vec2] = []
        for w in waypoints:
            v = Vec2(float(w[0]), float(w[1]))
            # consecutive duplicates carry no motion
            if not pts or v != pts[-1]:
                pts.append(v)
        self._pts: tuple[Vec2, ...] | None = tuple(pts)
        self._arr: np.ndarray | None = None

    @classmethod
    def from_array(cls, arr) -> "Path":
        a = np.array(arr, dtype=float).reshape(-1, 2)
        if len(a) > 1:
            same = (a[1:, 0] == a[:-1, 0]) & (a[1:, 1] == a[:-1, 1])
            if same.any():
                a = a[np.concatenate(([True], ~same))]
        a.flags.writeable = False
        obj = cls.__new__(cls)
        obj._pts = None
        obj._arr = a
        return obj

    @property
    def waypoints(self) -> tuple[Vec2, ...]:
        if self._pts is None:
            self._pts = tuple(Vec2(x, y) for x, y in self._arr.tolist())
        return self._pts

    def as_array(self) -> np.ndarray:
        if self._arr is None:
            self._arr = np.array(self._pts, dtype=float).reshape(-1, 2)
            self._arr.flags.writeable = False
        return self._arr

    def __setattr__(self, name, value):
        if name in self.__slots__ and getattr(self, name, None) is None:
            object.__setattr__(self, name, value)
        else:
            raise AttributeError("Path is immutable")

    def __eq__(self, other) -> bool:
        return isinstance(other, Path) and self.waypoints == other.waypoints

    def __hash__(self) -> int:
        return hash(self.waypoints)

    def __repr__(self) -> str:
        return f"Path({len(self)} waypoints)"

    def __len__(self) -> int:
        return len(self._arr) if self._pts is None else len(self._pts)

    @property
    def length(self) -> float:
        w = self.waypoints
        return math.fsum(distance(w[i], w[i + 1]) for i in range(len(w) - 1))

    @property
    def end(self) -> Vec2:
        return self.waypoints[-1]


@dataclass(frozen=True)
class Scenario:
    world_size: tuple[float, float]
    obstacle_region: Rect
    start: Vec2
    goal_center: Vec2
    goal_radius: float
    rover_radius: float
    obstacles: tuple[Obstacle, ...] = ()
    seed: int = 0

    def __post_init__(self):
        bounds = self.bounds
        if not (bounds.contains(self.start) and bounds.contains(self.goal_center)):
            raise ValueError("start and goal must lie inside the world")
        if self.goal_radius <= 0 or self.rover_radius <= 0:
            raise ValueError("goal_radius and rover_radius must be positive")
        if in_collision(self.start, self.rover_radius, self.obstacles):
            raise ValueError("start position collides with an obstacle")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def bounds(self) -> Rect:
        return Rect(0.0, 0.0, float(self.world_size[0]), float(self.world_size[1]))

    def with_obstacles(self, obstacles: Iterable[Obstacle]) -> "Scenario":
        return dataclasses.replace(self, obstacles=tuple(obstacles))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        r = self.obstacle_region
        return {
            "world_size": [_fx(self.world_size[0]), _fx(self.world_size[1])],
            "obstacle_region": {"xmin": _fx(r.xmin), "ymin": _fx(r.ymin),
                                "xmax": _fx(r.xmax), "ymax": _fx(r.ymax)},
            "start": {"x": _fx(self.start.x), "y": _fx(self.start.y)},
            "goal_center": {"x": _fx(self.goal_center.x), "y": _fx(self.goal_center.y)},
            "goal_radius": _fx(self.goal_radius),
            "rover_radius": _fx(self.rover_radius),
            "seed": self.seed,
            "obstacles": [
                {"x": _fx(o.center.x), "y": _fx(o.center.y), "radius": _fx(o.radius), "kind": o.kind.value}
                for o in self.obstacles
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        r = d["obstacle_region"]
        return cls(
            world_size=(float(d["world_size"][0]), float(d["world_size"][1])),
            obstacle_region=Rect(float(r["xmin"]), float(r["ymin"]), float(r["xmax"]), float(r["ymax"])),
            start=Vec2(float(d["start"]["x"]), float(d["start"]["y"])),
            goal_center=Vec2(float(d["goal_center"]["x"]), float(d["goal_center"]["y"])),
            goal_radius=float(d["goal_radius"]),
            rover_radius=float(d["rover_radius"]),
            obstacles=tuple(Obstacle.at(o["x"], o["y"], o["radius"], o.get("kind", "rock"))
                            for o in d["obstacles"]),
            seed=int(d.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def _fx(v: float) -> float:
    # fixed 6-decimal rounding keeps files stable and well above 4 significant digits
    return round(float(v), 6)


def empty_scenario(**overrides) -> Scenario:
    """The 30 m x 30 m benchmark geometry with no obstacles."""
    base = dict(
        world_size=(30.0, 30.0),
        obstacle_region=Rect(5.0, 5.0, 25.0, 25.0),
        start=Vec2(2.0, 2.0),
        goal_center=Vec2(28.0, 28.0),
        goal_radius=0.5,
        rover_radius=0.2,
        obstacles=(),
        seed=0,
    )
    base.update(overrides)
    return Scenario(**base)


@dataclass(frozen=True)
class PlannerParams:
    """Every tunable of the planners.

    Gaussian radii are per obstacle: the inner (infinite) radius is
    ``obstacle.radius + rho_l`` and the outer radius adds ``rho_u`` on top.
    ``max_steps`` is a deterministic iteration budget that ends a plan with
    Timeout before the wall-clock ``max_time`` would.
    """

    # quadratic APF / RVF
    k_a: float = 0.1
    k_rep: float = 10.0
    rho_0: float = 1.5
    spin: str = "ccw"
    map_size: float = 5.0
    map_cell: float = 0.15
    # Gaussian (CRBAPF* / RAPF)
    alpha_a: float = 100.0
    mu_a: float = 0.0005
    alpha_o: float = 5.0
    mu_o: float = 6.0
    rho_l: float = 0.21
    rho_u: float = 0.8
    n_bacteria: int = 8
    rho_b: float = 0.05
    # shared
    step_size: float = 0.05
    max_time: float = 10.0
    max_steps: int = 20_000
    goal_margin: float = 0.5
    rw_steps: int = 10
    max_artificial: int = 50
    grid_cell: float = 0.1
    grid_margin: float = 0.03

    def __post_init__(self):
        positive = ("k_a", "k_rep", "rho_0", "alpha_a", "mu_a", "alpha_o", "mu_o", "rho_l", "rho_u",
                    "rho_b", "step_size", "goal_margin", "rw_steps", "max_artificial", "grid_cell",
                    "map_size", "map_cell", "max_steps")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_time < 0:
            raise ValueError("max_time must be non-negative")
        if self.n_bacteria < 3:
            raise ValueError("n_bacteria must be at least 3")
        if not self.rho_l < self.rho_u:
            raise ValueError("rho_l must be smaller than rho_u")
        if self.spin not in ("ccw", "cw"):
            raise ValueError("spin must be 'ccw' or 'cw'")
        if self.grid_margin < 0:
            raise ValueError("grid_margin must be non-negative")

    def replace(self, **changes) -> "PlannerParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown planner parameters: {sorted(unknown)}")
        return cls(**d)
