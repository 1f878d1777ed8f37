"""Pure-Python planners, kept as the readable reference for the compiled kernels.

The production entry points in ``bacteria``, ``gradient`` and ``astar`` run
numba kernels; every function here takes the same request and must produce
the same path, status and evaluation count.  The tests hold them together.
"""
from __future__ import annotations

import math
import time

from ..core import Obstacle, ObstacleKind, Path, Vec2, in_collision
from ..potentials import INF, TWO_PI, EvalCounter, GaussField, QuadField, SingularPotentialError
from .astar import _default_bounds, occupancy, search
from .base import (LocalMinimumEvent, OscillationMonitor, PlanRequest, PlanResult, SplitMix64, Status,
                   in_collision_xy)

def _ring(n: int, rb: float) -> list[tuple[float, float]]:
    out = []
    for j in range(1, n + 1):
        a = 0.0 if j == n else TWO_PI * j / n
        out.append((rb * math.cos(a), rb * math.sin(a)))
    return out


def rapf(req: PlanRequest) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    counter = EvalCounter()
    field = GaussField(req.target, req.known_obstacles, p, counter)
    tx, ty = req.target
    sx, sy = req.start
    ring = _ring(p.n_bacteria, 1.0)
    rb = p.rho_b
    margin2 = p.goal_margin ** 2
    artificial: list[Obstacle] = []
    events: list[LocalMinimumEvent] = []
    monitor = OscillationMonitor(p)

    x, y = sx, sy
    path = [(x, y)]
    j_robot = field.at(x, y)
    steps = 0
    status = None
    while status is None:
        if time.perf_counter() - t0 > p.max_time or steps >= p.max_steps:
            status = Status.TIMEOUT
            break
        dx, dy = tx - x, ty - y
        d2 = dx * dx + dy * dy
        if d2 < margin2:
            status = Status.REACHED
            break
        steps += 1
        # ring rotated so that its last point lies on the robot-target ray
        inv = rb / math.sqrt(d2)
        ux, uy = dx * inv, dy * inv
        best = field.pick(x, y, ring, ux, uy, j_robot)
        trapped = best is None
        if not trapped:
            monitor.push(x, y)
            x, y, j_robot = best
            path.append((x, y))
            trapped = monitor.revisits(x, y)
        if trapped:
            events.append(LocalMinimumEvent(Vec2(x, y), steps))
            marker = Obstacle(Vec2(x, y), rb, ObstacleKind.ARTIFICIAL)
            artificial.append(marker)
            if len(artificial) > p.max_artificial:
                status = Status.NO_PATH
                break
            field.add(marker)
            x, y = sx, sy
            path = [(x, y)]
            j_robot = field.at(x, y)
            monitor.clear()
    return PlanResult(status, Path(path), tuple(artificial), counter.n,
                      time.perf_counter() - t0, tuple(events))


def crbapf(req: PlanRequest) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    counter = EvalCounter()
    field = GaussField(req.target, req.known_obstacles, p, counter)
    rng = SplitMix64(req.rng_seed)
    tx, ty = req.target
    ring = _ring(p.n_bacteria, 1.0)
    rb = p.rho_b
    margin2 = p.goal_margin ** 2
    events: list[LocalMinimumEvent] = []
    monitor = OscillationMonitor(p)

    x, y = req.start
    path = [(x, y)]
    j_robot = field.at(x, y)
    steps = 0
    walk_left = 0
    status = None
    while status is None:
        if time.perf_counter() - t0 > p.max_time or steps >= p.max_steps:
            status = Status.TIMEOUT
            break
        dx, dy = tx - x, ty - y
        if dx * dx + dy * dy < margin2:
            status = Status.REACHED
            break
        steps += 1
        if walk_left:
            walk_left -= 1
            options = [(bx, by) for bx, by, jb in field.ring(x, y, ring, rb, 0.0) if jb < INF]
            if not options:
                status = Status.NO_PATH
                break
            x, y = options[rng.below(len(options))]
            path.append((x, y))
            if not walk_left:
                j_robot = field.at(x, y)
                monitor.clear()
            continue
        best = field.pick(x, y, ring, rb, 0.0, j_robot)
        trapped = best is None
        if not trapped:
            monitor.push(x, y)
            x, y, j_robot = best
            path.append((x, y))
            trapped = monitor.revisits(x, y)
        if trapped:
            events.append(LocalMinimumEvent(Vec2(x, y), steps))
            walk_left = p.rw_steps
    return PlanResult(status, Path(path), (), counter.n, time.perf_counter() - t0, tuple(events))


STALL_FORCE = 1e-9


class ForceMap:
    """Analytic forces sampled on a regular grid centered on a point."""

    def __init__(self, field: QuadField, obstacles, cx: float, cy: float, size: float, cell: float,
                 counter: EvalCounter):
        m = max(1, int(round(0.5 * size / cell)))
        self.n = 2 * m + 1
        self.cell = cell
        self.x0 = cx - m * cell
        self.y0 = cy - m * cell
        self.cx, self.cy = cx, cy
        self.half = m * cell
        reach = self.half + field.rho0 + cell
        field.obs = [o for o in obstacles if abs(o[0] - cx) <= reach + o[2] and abs(o[1] - cy) <= reach + o[2]]
        fx_rows, fy_rows = [], []
        for i in range(self.n):
            x = self.x0 + i * cell
            rx, ry = [], []
            for j in range(self.n):
                try:
                    fx, fy = field.force(x, self.y0 + j * cell)
                except SingularPotentialError:
                    fx = fy = 0.0
                rx.append(fx)
                ry.append(fy)
            fx_rows.append(rx)
            fy_rows.append(ry)
        counter.add(self.n * self.n)
        self.fx = fx_rows
        self.fy = fy_rows

    def inside(self, x: float, y: float, border: float) -> bool:
        lim = self.half - border
        return abs(x - self.cx) <= lim and abs(y - self.cy) <= lim

    def force(self, x: float, y: float) -> tuple[float, float]:
        u = (x - self.x0) / self.cell
        v = (y - self.y0) / self.cell
        i = min(max(int(u), 0), self.n - 2)
        j = min(max(int(v), 0), self.n - 2)
        a = u - i
        b = v - j
        w00 = (1 - a) * (1 - b)
        w10 = a * (1 - b)
        w01 = (1 - a) * b
        w11 = a * b
        fx, fy = self.fx, self.fy
        return (w00 * fx[i][j] + w10 * fx[i + 1][j] + w01 * fx[i][j + 1] + w11 * fx[i + 1][j + 1],
                w00 * fy[i][j] + w10 * fy[i + 1][j] + w01 * fy[i][j + 1] + w11 * fy[i + 1][j + 1])


def _descend(req: PlanRequest, rotate: str | None) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    counter = EvalCounter()
    obs = [(o.center[0], o.center[1], o.radius) for o in req.known_obstacles]
    field = QuadField(req.target, obs, p, rotate=rotate)
    tx, ty = req.target
    margin2 = p.goal_margin ** 2
    step = p.step_size
    monitor = OscillationMonitor(p)
    x, y = req.start
    path = [(x, y)]
    fmap = None
    steps = 0
    status = None
    while status is None:
        if time.perf_counter() - t0 > p.max_time or steps >= p.max_steps:
            status = Status.TIMEOUT
            break
        dx, dy = tx - x, ty - y
        if dx * dx + dy * dy < margin2:
            status = Status.REACHED
            break
        steps += 1
        if fmap is None or not fmap.inside(x, y, p.map_cell):
            fmap = ForceMap(field, obs, x, y, p.map_size, p.map_cell, counter)
        fx, fy = fmap.force(x, y)
        norm = math.sqrt(fx * fx + fy * fy)
        if norm < STALL_FORCE:
            status = Status.NO_PATH
            break
        nx = x + step * fx / norm
        ny = y + step * fy / norm
        if in_collision_xy(nx, ny, req.rover_radius, field.obs) or monitor.revisits(nx, ny):
            status = Status.NO_PATH
            break
        monitor.push(x, y)
        x, y = nx, ny
        path.append((x, y))
    return PlanResult(status, Path(path), (), counter.n, time.perf_counter() - t0)


def apf(req: PlanRequest) -> PlanResult:
    return _descend(req, rotate=None)


def rvf(req: PlanRequest) -> PlanResult:
    return _descend(req, rotate=req.params.spin)


def astar(req: PlanRequest) -> PlanResult:
    t0 = time.perf_counter()
    p = req.params
    bounds = req.bounds or _default_bounds(req)
    grid = occupancy(bounds, p.grid_cell, req.known_obstacles, req.rover_radius + p.grid_margin)
    start = grid.cell_of(req.start)
    goal = grid.cell_of(req.target)
    if grid.blocked[start] and not in_collision(req.start, req.rover_radius, req.known_obstacles):
        grid.blocked[start] = False
    found = search(grid.blocked, start, goal)
    if found is None:
        return PlanResult(Status.NO_PATH, Path([req.start]), (), 0, time.perf_counter() - t0)
    cells, _ = found
    pts = [req.start] + [grid.center(i, j) for i, j in cells[1:]]
    return PlanResult(Status.REACHED, Path(pts), (), 0, time.perf_counter() - t0)
