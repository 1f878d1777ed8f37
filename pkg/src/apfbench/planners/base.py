from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

from ..core import Obstacle, Path, PlannerParams, Rect, Vec2


class Status(str, enum.Enum):
    REACHED = "Reached"
    NO_PATH = "NoPath"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class PlanRequest:
    start: Vec2
    target: Vec2
    known_obstacles: tuple[Obstacle, ...] = ()
    params: PlannerParams = field(default_factory=PlannerParams)
    rng_seed: int = 0
    rover_radius: float = 0.2
    bounds: Rect | None = None  # grid extent for A*; derived from the request when None

    def __post_init__(self):
        object.__setattr__(self, "start", Vec2(float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "target", Vec2(float(self.target[0]), float(self.target[1])))
        object.__setattr__(self, "known_obstacles", tuple(self.known_obstacles))
        if self.start == self.target:
            raise ValueError("start and target coincide")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


class LocalMinimumEvent(NamedTuple):
    position: Vec2
    step_index: int


@dataclass(frozen=True)
class PlanResult:
    status: Status
    path: Path
    artificial_obstacles: tuple[Obstacle, ...] = ()
    potential_evals: int = 0
    wall_time: float = 0.0
    events: tuple[LocalMinimumEvent, ...] = ()

    @property
    def reached(self) -> bool:
        return self.status is Status.REACHED

    def to_dict(self, with_time: bool = True) -> dict:
        d = {
            "status": self.status.value,
            "waypoints": [[w.x, w.y] for w in self.path.waypoints],
            "artificial_obstacles": [
                {"x": o.center.x, "y": o.center.y, "radius": o.radius, "kind": o.kind.value}
                for o in self.artificial_obstacles
            ],
            "potential_evals": self.potential_evals,
        }
        if with_time:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, with_time: bool = True) -> str:
        return json.dumps(self.to_dict(with_time))


def select_bacteria(robot_potential: float, candidates: Sequence[Sequence[float]],
                    potentials: Sequence[float], target: Sequence[float]) -> int | None:
    """Index of the candidate that lowers the potential and lies closest to the target.

    A candidate qualifies when ``J_b - J(robot) < 0``.  Ties keep the first
    candidate in generation order.  ``None`` means no candidate qualifies.
    """
    best = None
    best_d2 = math.inf
    tx, ty = target[0], target[1]
    for i, (c, jb) in enumerate(zip(candidates, potentials)):
        if not jb < robot_potential:
            continue
        dx = c[0] - tx
        dy = c[1] - ty
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best, best_d2 = i, d2
    return best


class OscillationMonitor:
    """Remembers the last ``4 N_B`` positions and flags near revisits.

    A position within ``rho_b / 2`` of any remembered one counts as a trap.
    Positions are hashed on a grid of the tolerance size so a query looks at
    the 3x3 neighbouring cells only.
    """

    def __init__(self, params: PlannerParams):
        self.window = 4 * params.n_bacteria
        self.tol = 0.5 * params.rho_b
        self.tol2 = self.tol * self.tol
        self.recent: deque = deque()
        self._cells: dict[tuple[int, int], list] = {}

    def revisits(self, x: float, y: float) -> bool:
        tol2 = self.tol2
        ci = math.floor(x / self.tol)
        cj = math.floor(y / self.tol)
        cells = self._cells
        for i in (ci - 1, ci, ci + 1):
            for j in (cj - 1, cj, cj + 1):
                bucket = cells.get((i, j))
                if bucket:
                    for hx, hy in bucket:
                        dx = hx - x
                        dy = hy - y
                        if dx * dx + dy * dy < tol2:
                            return True
        return False

    def push(self, x: float, y: float) -> None:
        key = (math.floor(x / self.tol), math.floor(y / self.tol))
        self.recent.append((key, x, y))
        self._cells.setdefault(key, []).append((x, y))
        if len(self.recent) > self.window:
            old, ox, oy = self.recent.popleft()
            bucket = self._cells[old]
            bucket.remove((ox, oy))
            if not bucket:
                del self._cells[old]

    def clear(self) -> None:
        self.recent.clear()
        self._cells.clear()


def detect_local_minimum(history: Iterable[Sequence[float]], current: Sequence[float],
                         selection: Sequence[float] | None, params: PlannerParams,
                         step_index: int = 0) -> LocalMinimumEvent | None:
    """Local-minimum rule shared by the bacteria planners.

    Fires when no bacteria point was selected, or when ``current`` lies
    within ``rho_b / 2`` of one of the last ``4 N_B`` positions in
    ``history`` (oldest first, not including ``current``).
    """
    pos = Vec2(float(current[0]), float(current[1]))
    if selection is None:
        return LocalMinimumEvent(pos, step_index)
    mon = OscillationMonitor(params)
    for h in history:
        mon.push(h[0], h[1])
    if mon.revisits(pos.x, pos.y):
        return LocalMinimumEvent(pos, step_index)
    return None


def in_collision_xy(x: float, y: float, rover_radius: float, obs: Sequence[tuple[float, float, float]]) -> bool:
    for ox, oy, r in obs:
        lim = r + rover_radius
        dx = x - ox
        dy = y - oy
        if dx * dx + dy * dy < lim * lim:
            return True
    return False


Planner = Callable[[PlanRequest], PlanResult]


class SplitMix64:
    """SplitMix64 stream; the compiled CRBAPF kernel draws from the same sequence."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n
