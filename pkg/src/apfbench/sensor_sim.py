"""Closed-loop sense-plan-move trials with a limited field-of-view sensor."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Obstacle, ObstacleKind, Path, PlannerParams, Scenario, Vec2, distance
from .planners import PlanRequest, Status, get_planner

DEFAULT_WALK_BUDGET = 10_000


@dataclass(frozen=True)
class SensorModel:
    range: float = 0.8
    fov: float = math.radians(62.0)
    # True: any part of the disc inside the sector counts; False: center only
    edge: bool = True

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("sensor range must be positive")
        if not 0 < self.fov <= 2 * math.pi:
            raise ValueError("fov must be in (0, 2 pi]")


def wrap_angle(a: float) -> float:
    """Normalize to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2 * math.pi)
    if a <= 0:
        a += 2 * math.pi
    return a - math.pi


@dataclass
class RoverState:
    position: Vec2
    heading: float
    known_obstacles: list[Obstacle] = field(default_factory=list)
    walked: list[Vec2] = field(default_factory=list)

    def __post_init__(self):
        self.heading = wrap_angle(self.heading)


class TrialStatus(str, enum.Enum):
    REACHED = "Reached"
    COLLISION = "Collision"
    TIMEOUT = "Timeout"
    NO_PATH = "NoPath"


@dataclass
class TrialOutcome:
    status: TrialStatus
    planning_time_total: float
    walked_length: float
    safety_samples: list[tuple[int, float]]
    potential_evals: int
    replan_count: int
    walked: list[Vec2] = field(default_factory=list, repr=False)
    artificial_count: int = 0
    trace: list[tuple[int, float, float, float, int]] | None = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.status is TrialStatus.REACHED

    @property
    def mean_replan_time(self) -> float:
        return self.planning_time_total / self.replan_count if self.replan_count else 0.0


def _sees(px: float, py: float, heading: float, o: Obstacle, sensor: SensorModel) -> bool:
    """Does any part of the obstacle disc fall inside the sensing sector?"""
    cx, cy, r = o.center[0], o.center[1], o.radius
    dx, dy = cx - px, cy - py
    d = math.hypot(dx, dy)
    rng = sensor.range
    if not sensor.edge:
        r = 0.0
    if d - r > rng:
        return False
    if d <= r:
        return True  # sensor inside the disc
    if d == 0.0:
        return True
    half = 0.5 * sensor.fov
    if half >= math.pi:
        return True
    bearing = wrap_angle(math.atan2(dy, dx) - heading)
    if abs(bearing) <= half:
        # center direction inside the cone: nearest point is along the bearing
        return True
    # otherwise the disc must touch one of the two boundary rays
    for side in (half, -half):
        a = heading + side
        ux, uy = math.cos(a), math.sin(a)
        t = min(max(dx * ux + dy * uy, 0.0), rng)
        if math.hypot(dx - t * ux, dy - t * uy) <= r:
            return True
    return False


def detect(state: RoverState, truth: Sequence[Obstacle], sensor: SensorModel,
           noise: Callable[[Obstacle], Obstacle] | None = None) -> list[Obstacle]:
    """Ground-truth obstacles with some part inside the range/field-of-view sector.

    ``noise`` is an optional hook applied to each returned obstacle.
    """
    px, py = state.position
    seen = [o for o in truth if _sees(px, py, state.heading, o, sensor)]
    return [noise(o) for o in seen] if noise else seen


class _Follower:
    """Walks a polyline in chords of exactly ``step`` (shorter only at its end)."""

    def __init__(self, path: Path):
        self.pts = path.waypoints
        self.k = 0  # current position lies on segment k -> k+1

    def advance(self, pos: Vec2, step: float) -> Vec2 | None:
        pts = self.pts
        px, py = pos
        s2 = step * step
        while self.k < len(pts) - 1:
            ax, ay = pts[self.k]
            bx, by = pts[self.k + 1]
            if (bx - px) ** 2 + (by - py) ** 2 < s2:
                self.k += 1
                continue
            # point on a->b at distance `step` from pos, beyond pos's projection
            ux, uy = bx - ax, by - ay
            ll = ux * ux + uy * uy
            fx, fy = ax - px, ay - py
            b = fx * ux + fy * uy
            c = fx * fx + fy * fy - s2
            disc = max(b * b - ll * c, 0.0)
            t = (-b + math.sqrt(disc)) / ll
            t = min(max(t, 0.0), 1.0)
            return Vec2(ax + t * ux, ay + t * uy)
        if pts and (pts[-1][0], pts[-1][1]) != (px, py):
            return Vec2(*pts[-1])
        return None


def _plan_seed(seed: int, replan: int) -> int:
    return int(np.random.SeedSequence([seed, replan]).generate_state(2, np.uint32).view(np.uint64)[0])


def run_trial(scenario: Scenario, planner: str, params: PlannerParams | None = None,
              sensor: SensorModel | None = None, seed: int = 0, *, omniscient: bool = False,
              walk_budget: int = DEFAULT_WALK_BUDGET, record_trace: bool = False,
              safety_to_edge: bool = False) -> TrialOutcome:
    params = params or PlannerParams()
    sensor = sensor or SensorModel()
    plan_fn = get_planner(planner)
    truth = list(scenario.obstacles)
    goal = scenario.goal_center
    rr = scenario.rover_radius
    step = params.step_size
    heading = math.atan2(goal.y - scenario.start.y, goal.x - scenario.start.x)
    state = RoverState(scenario.start, heading, [], [scenario.start])

    n = len(truth)
    ox = np.array([o.center.x for o in truth], dtype=float)
    oy = np.array([o.center.y for o in truth], dtype=float)
    orad = np.array([o.radius for o in truth], dtype=float)
    off = orad if safety_to_edge else np.zeros(n)
    reach = orad + sensor.range if sensor.edge else np.full(n, sensor.range)
    known = np.zeros(n, dtype=bool)
    min_dist = np.full(n, np.inf)
    order: list[int] = []  # detection order of ground-truth ids
    artificial: list[Obstacle] = []
    plan_time = 0.0
    evals = 0
    replans = 0
    follower = None
    need_plan = True
    trace = [] if record_trace else None
    status = TrialStatus.TIMEOUT

    for step_idx in range(walk_budget + 1):
        pos = state.position
        if distance(pos, goal) < scenario.goal_radius:
            status = TrialStatus.REACHED
            break
        if step_idx == walk_budget:
            status = TrialStatus.TIMEOUT
            break
        dx = ox - pos.x
        dy = oy - pos.y
        dist = np.hypot(dx, dy)
        if omniscient:
            new = np.flatnonzero(~known).tolist()
        else:
            cand = np.flatnonzero(~known & (dist <= reach))
            new = [int(i) for i in cand if _sees(pos.x, pos.y, state.heading, truth[i], sensor)]
        if new:
            walked = np.asarray(state.walked)
            for i in new:
                known[i] = True
                order.append(i)
                state.known_obstacles.append(truth[i])
                d = np.hypot(walked[:, 0] - ox[i], walked[:, 1] - oy[i]).min()
                min_dist[i] = d - off[i]
            need_plan = True
        replan_flag = 0
        if need_plan:
            req = PlanRequest(pos, goal, tuple(state.known_obstacles), params,
                              _plan_seed(seed, replans), rr, scenario.bounds)
            result = plan_fn(req)
            replans += 1
            replan_flag = 1
            plan_time += result.wall_time
            evals += result.potential_evals
            artificial.extend(result.artificial_obstacles)
            state.known_obstacles.extend(result.artificial_obstacles)
            if result.status is not Status.REACHED:
                status = TrialStatus.NO_PATH if result.status is Status.NO_PATH else TrialStatus.TIMEOUT
                break
            follower = _Follower(result.path)
            need_plan = False
        if trace is not None:
            trace.append((step_idx, pos.x, pos.y, state.heading, replan_flag))
        nxt = follower.advance(pos, step)
        if nxt is None:
            # plan exhausted outside the goal disc
            need_plan = True
            continue
        state.heading = wrap_angle(math.atan2(nxt.y - pos.y, nxt.x - pos.x))
        state.position = nxt
        state.walked.append(nxt)
        dist = np.hypot(ox - nxt.x, oy - nxt.y)
        np.minimum(min_dist, np.where(known, dist - off, np.inf), out=min_dist)
        if n and bool(np.any(dist - orad < rr)):
            status = TrialStatus.COLLISION
            break
    if trace is not None:
        trace.append((len(state.walked) - 1, state.position.x, state.position.y, state.heading, 0))
    return TrialOutcome(
        status=status,
        planning_time_total=plan_time,
        walked_length=Path(state.walked).length,
        safety_samples=[(i, float(min_dist[i])) for i in sorted(order)],
        potential_evals=evals,
        replan_count=replans,
        walked=state.walked,
        artificial_count=len(artificial),
        trace=trace,
    )


def write_trace(outcome: TrialOutcome, path) -> None:
    if outcome.trace is None:
        raise ValueError("trial was run without record_trace")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x", "y", "heading", "replan_flag"])
        for s, x, y, h, f in outcome.trace:
            w.writerow([s, f"{x:.6f}", f"{y:.6f}", f"{h:.6f}", f])
