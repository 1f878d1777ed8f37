"""A* on an 8-connected occupancy grid, the optimal reference planner."""
from __future__ import annotations

import heapq
import math
import time

import numpy as np

from ..core import Obstacle, Path, Rect, Vec2, in_collision
from . import _kernels as _k
from .base import PlanRequest, PlanResult, Status

SQRT2 = math.sqrt(2.0)
MOVES = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
         (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


class Grid:
    """Cells of side ``cell`` covering ``bounds``; cell ``(i, j)`` has its center at
    ``(xmin + (i + 0.5) cell, ymin + (j + 0.5) cell)``."""

    def __init__(self, bounds: Rect, cell: float):
        self.bounds = bounds
        self.cell = float(cell)
        self.nx = int(math.ceil((bounds.xmax - bounds.xmin) / cell - 1e-9))
        self.ny = int(math.ceil((bounds.ymax - bounds.ymin) / cell - 1e-9))
        self.blocked = np.zeros((self.nx, self.ny), dtype=bool)

    def center(self, i: int, j: int) -> Vec2:
        b = self.bounds
        return Vec2(b.xmin + (i + 0.5) * self.cell, b.ymin + (j + 0.5) * self.cell)

    def cell_of(self, p) -> tuple[int, int]:
        b = self.bounds
        i = int(math.floor((p[0] - b.xmin) / self.cell))
        j = int(math.floor((p[1] - b.ymin) / self.cell))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def stamp(self, cx: float, cy: float, radius: float) -> None:
        """Block every cell whose center lies strictly within ``radius`` of ``(cx, cy)``."""
        b, h = self.bounds, self.cell
        i0 = max(int(math.floor((cx - radius - b.xmin) / h)), 0)
        i1 = min(int(math.ceil((cx + radius - b.xmin) / h)), self.nx - 1)
        j0 = max(int(math.floor((cy - radius - b.ymin) / h)), 0)
        j1 = min(int(math.ceil((cy + radius - b.ymin) / h)), self.ny - 1)
        if i0 > i1 or j0 > j1:
            return
        xs = b.xmin + (np.arange(i0, i1 + 1) + 0.5) * h - cx
        ys = b.ymin + (np.arange(j0, j1 + 1) + 0.5) * h - cy
        inside = xs[:, None] ** 2 + ys[None, :] ** 2 < radius * radius
        self.blocked[i0:i1 + 1, j0:j1 + 1] |= inside


def occupancy(bounds: Rect, cell: float, obstacles, inflate: float) -> Grid:
    g = Grid(bounds, cell)
    for o in obstacles:
        g.stamp(o.center[0], o.center[1], o.radius + inflate)
    return g


def octile(di: int, dj: int) -> float:
    di, dj = abs(di), abs(dj)
    return (SQRT2 - 1.0) * min(di, dj) + max(di, dj)


def search(blocked: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> tuple[list[tuple[int, int]], float] | None:
    """Shortest 8-connected path in cell units; returns ``(cells, cost)`` or ``None``."""
    nx, ny = blocked.shape
    free = (~blocked).ravel().tolist()
    si, sj = start
    gi, gj = goal
    s = si * ny + sj
    g_goal = gi * ny + gj
    if not free[s] or not free[g_goal]:
        return None
    gscore = {s: 0.0}
    parent = {s: -1}
    closed = bytearray(nx * ny)
    k = SQRT2 - 1.0
    h0 = octile(si - gi, sj - gj)
    heap = [(h0, h0, s)]
    while heap:
        _, _, cur = heapq.heappop(heap)
        if closed[cur]:
            continue
        if cur == g_goal:
            cells = []
            while cur != -1:
                cells.append(divmod(cur, ny))
                cur = parent[cur]
            cells.reverse()
            return cells, gscore[g_goal]
        closed[cur] = 1
        ci, cj = divmod(cur, ny)
        gc = gscore[cur]
        for di, dj, cost in MOVES:
            i = ci + di
            j = cj + dj
            if i < 0 or j < 0 or i >= nx or j >= ny:
                continue
            nb = i * ny + j
            if closed[nb] or not free[nb]:
                continue
            ng = gc + cost
            old = gscore.get(nb)
            if old is not None and ng >= old:
                continue
            gscore[nb] = ng
            parent[nb] = cur
            ai = abs(i - gi)
            aj = abs(j - gj)
            h = k * (ai if ai < aj else aj) + (ai if ai > aj else aj)
            # ties broken toward the goal (smaller h first)
            heapq.heappush(heap, (ng + h, h, nb))
    return None


def _default_bounds(req: PlanRequest) -> Rect:
    xs = [req.start.x, req.target.x] + [o.center.x for o in req.known_obstacles]
    ys = [req.start.y, req.target.y] + [o.center.y for o in req.known_obstacles]
    pad = 2.0
    return Rect(min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


_scratch: list[np.ndarray] = []


def _workspace(ncell: int) -> list[np.ndarray]:
    # reused across calls: fresh megabyte-sized arrays per plan made timing depend on allocator state
    if not _scratch or _scratch[0].shape[0] < ncell:
        _scratch[:] = [np.empty(ncell), np.empty(ncell, np.int64), np.empty(ncell, np.bool_)]
    return _scratch


def plan_astar(req: PlanRequest, grid_cell: float | None = None) -> PlanResult:
    t0 = time.perf_counter()
    p = req.params
    cell = p.grid_cell if grid_cell is None else grid_cell
    if not cell > 0:
        raise ValueError("grid_cell must be positive")
    bounds = req.bounds or _default_bounds(req)
    grid = Grid(bounds, cell)
    obs = req.known_obstacles
    if obs:
        ox = np.array([o.center[0] for o in obs], dtype=float)
        oy = np.array([o.center[1] for o in obs], dtype=float)
        rad = np.array([o.radius for o in obs], dtype=float) + (req.rover_radius + p.grid_margin)
        _k.stamp_all(grid.blocked, bounds.xmin, bounds.ymin, grid.cell, ox, oy, rad)
    start = grid.cell_of(req.start)
    goal = grid.cell_of(req.target)
    # the rover may stand in a cell whose center is inflated while its own pose is clear
    if grid.blocked[start] and not in_collision(req.start, req.rover_radius, obs):
        grid.blocked[start] = False
    cost, cells = _k.astar_ws(grid.blocked, start[0], start[1], goal[0], goal[1],
                              *_workspace(grid.nx * grid.ny))
    if cost < 0:
        return PlanResult(Status.NO_PATH, Path([req.start]), (), 0, time.perf_counter() - t0)
    pts = np.empty((len(cells), 2))
    pts[0] = req.start
    pts[1:, 0] = bounds.xmin + (cells[1:, 0] + 0.5) * cell
    pts[1:, 1] = bounds.ymin + (cells[1:, 1] + 0.5) * cell
    return PlanResult(Status.REACHED, Path.from_array(pts), (), 0, time.perf_counter() - t0)
