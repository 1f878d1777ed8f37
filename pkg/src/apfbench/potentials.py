"""Potential and force fields.

Two families live here:

* quadratic attractive/repulsive potentials with their analytic forces and
  the rotated (vortex) variant used by RVF;
* Gaussian potentials with a per-obstacle lower/upper radius, evaluated at
  bacteria points by CRBAPF* and RAPF.

Quadratic distances are plain Euclidean, Gaussian distances are squared
Euclidean (the radii are compared against their square root).  Inside the
lower radius the Gaussian repulsion is ``INF``, a float infinity: it orders
above every finite potential and absorbs under addition.

The public functions take ``Vec2``/``Obstacle`` values.  The planners call
the lower level ``GaussField`` / ``QuadField`` objects, which work on raw
floats and a spatial bucket index so that a step costs a handful of float
operations.
"""
from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import Obstacle, ObstacleKind, PlannerParams, Vec2

INF = math.inf
TWO_PI = 2.0 * math.pi


class SingularPotentialError(ValueError):
    """Evaluation point coincides with an obstacle center inside its influence range."""


class DegenerateDirectionError(ValueError):
    pass


class PotentialSample(NamedTuple):
    value: float
    position: Vec2


class ForceSample(NamedTuple):
    fx: float
    fy: float
    position: Vec2


class EvalCounter:
    """Counts potential (or force) evaluations for one trial or plan."""

    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0

    def add(self, k: int = 1) -> None:
        self.n += k


def _xyr(obstacles: Iterable[Obstacle]) -> list[tuple[float, float, float]]:
    return [(o.center[0], o.center[1], o.radius) for o in obstacles]


# ---------------------------------------------------------------------------
# quadratic potentials
# ---------------------------------------------------------------------------

def quad_attractive(p: Sequence[float], target: Sequence[float], params: PlannerParams) -> float:
    dx = p[0] - target[0]
    dy = p[1] - target[1]
    return 0.5 * params.k_a * (dx * dx + dy * dy)


def quad_repulsive(p: Sequence[float], obstacles: Iterable[Obstacle], params: PlannerParams) -> float:
    rho0 = params.rho_0
    total = 0.0
    for ox, oy, _ in _xyr(obstacles):
        d = math.hypot(p[0] - ox, p[1] - oy)
        if d > rho0:
            continue
        if d == 0.0:
            raise SingularPotentialError(f"point {tuple(p)} sits on an obstacle center")
        b = 1.0 / d - 1.0 / rho0
        total += 0.5 * params.k_rep * b * b
    return total


def quad_total(p, target, obstacles, params: PlannerParams, counter: EvalCounter | None = None) -> float:
    if counter is not None:
        counter.add()
    return quad_attractive(p, target, params) + quad_repulsive(p, obstacles, params)


def _quad_rep_gradients(px: float, py: float, obs, k_rep: float, rho0: float):
    """Yield the gradient of each in-range obstacle's repulsive potential."""
    for ox, oy, _ in obs:
        dx = px - ox
        dy = py - oy
        d2 = dx * dx + dy * dy
        if d2 > rho0 * rho0:
            continue
        if d2 == 0.0:
            raise SingularPotentialError(f"point ({px}, {py}) sits on an obstacle center")
        d = math.sqrt(d2)
        # d/dx of 1/2 k (1/d - 1/rho0)^2 = -k (1/d - 1/rho0) dx / d^3
        c = -k_rep * (1.0 / d - 1.0 / rho0) / (d2 * d)
        yield c * dx, c * dy


def quad_gradient(p, target, obstacles, params: PlannerParams,
                  counter: EvalCounter | None = None) -> ForceSample:
    """Force ``-grad J`` of the quadratic field, in closed form."""
    if counter is not None:
        counter.add()
    fx = -params.k_a * (p[0] - target[0])
    fy = -params.k_a * (p[1] - target[1])
    for gx, gy in _quad_rep_gradients(p[0], p[1], _xyr(obstacles), params.k_rep, params.rho_0):
        fx -= gx
        fy -= gy
    return ForceSample(fx, fy, Vec2(p[0], p[1]))


def rotate_contribution(gx: float, gy: float, spin: str) -> tuple[float, float]:
    """Vortex rotation of one obstacle gradient: ``+-(dJ/dy, -dJ/dx)``."""
    if spin == "ccw":
        return gy, -gx
    if spin == "cw":
        return -gy, gx
    raise ValueError(f"unknown spin {spin!r}")


def vortex_force(p, target, obstacles, params: PlannerParams, spin: str | None = None,
                 counter: EvalCounter | None = None) -> ForceSample:
    """RVF force: attraction unchanged, every in-range obstacle term rotated by 90 degrees."""
    if counter is not None:
        counter.add()
    spin = spin or params.spin
    fx = -params.k_a * (p[0] - target[0])
    fy = -params.k_a * (p[1] - target[1])
    for gx, gy in _quad_rep_gradients(p[0], p[1], _xyr(obstacles), params.k_rep, params.rho_0):
        rx, ry = rotate_contribution(gx, gy, spin)
        fx += rx
        fy += ry
    return ForceSample(fx, fy, Vec2(p[0], p[1]))


# ---------------------------------------------------------------------------
# Gaussian potentials
# ---------------------------------------------------------------------------

def lower_radius(o: Obstacle, params: PlannerParams) -> float:
    """Radius of the infinite core.  Artificial markers get none: they are
    finite bumps the robot can roll off, not walls."""
    if o.kind is ObstacleKind.ARTIFICIAL:
        return 0.0
    return o.radius + params.rho_l


def upper_radius(o: Obstacle, params: PlannerParams) -> float:
    return o.radius + params.rho_l + params.rho_u


def gauss_attractive(p, target, params: PlannerParams) -> float:
    dx = p[0] - target[0]
    dy = p[1] - target[1]
    return -params.alpha_a * math.exp(-params.mu_a * (dx * dx + dy * dy))


def _gauss_rep_term(d2: float, rl: float, ru: float, alpha_o: float, mu_o: float) -> float:
    if d2 >= ru * ru:
        return 0.0
    if rl > 0.0 and d2 <= rl * rl:
        return INF
    return alpha_o * math.exp(-mu_o * d2)


def gauss_repulsive(p, obstacles: Iterable[Obstacle], params: PlannerParams) -> float:
    total = 0.0
    for o in obstacles:
        dx = p[0] - o.center[0]
        dy = p[1] - o.center[1]
        total += _gauss_rep_term(dx * dx + dy * dy, lower_radius(o, params), upper_radius(o, params),
                                 params.alpha_o, params.mu_o)
    return total


def gauss_total(p, target, obstacles, params: PlannerParams, counter: EvalCounter | None = None) -> float:
    if counter is not None:
        counter.add()
    return gauss_attractive(p, target, params) + gauss_repulsive(p, obstacles, params)


def bacteria_points(p: Sequence[float], params: PlannerParams,
                    align_to: Sequence[float] | None = None) -> list[Vec2]:
    """``n_bacteria`` points on the circle of radius ``rho_b`` around ``p``.

    Point ``j`` (1-based) sits at angle ``2 pi j / N``.  With ``align_to``
    every angle is shifted by the bearing of ``align_to`` so that point ``N``
    lies on the ray from ``p`` toward it.
    """
    n = params.n_bacteria
    base = 0.0
    if align_to is not None:
        dx = align_to[0] - p[0]
        dy = align_to[1] - p[1]
        if dx == 0.0 and dy == 0.0:
            raise DegenerateDirectionError("cannot align bacteria toward the robot's own position")
        base = math.atan2(dy, dx)
    rb = params.rho_b
    pts = []
    for j in range(1, n + 1):
        a = base + TWO_PI * j / n
        if j == n:
            a = base
        pts.append(Vec2(p[0] + rb * math.cos(a), p[1] + rb * math.sin(a)))
    return pts


# ---------------------------------------------------------------------------
# fast evaluators used inside planning loops
# ---------------------------------------------------------------------------

class BucketIndex:
    """Uniform-grid bucket index over discs of influence.

    ``query(x, y)`` returns every entry whose influence disc, widened by
    ``pad``, overlaps the bucket containing ``(x, y)``.  Entries are the
    caller's tuples; they are stored, not copied.
    """

    def __init__(self, cell: float, pad: float = 0.0):
        self.cell = float(cell)
        self.pad = float(pad)
        self._buckets: dict[tuple[int, int], list] = {}
        self._empty: list = []

    def add(self, cx: float, cy: float, reach: float, entry) -> None:
        c = self.cell
        r = reach + self.pad
        i0, i1 = math.floor((cx - r) / c), math.floor((cx + r) / c)
        j0, j1 = math.floor((cy - r) / c), math.floor((cy + r) / c)
        r2 = r * r
        for i in range(i0, i1 + 1):
            x0 = i * c
            nx = min(max(cx, x0), x0 + c) - cx
            for j in range(j0, j1 + 1):
                y0 = j * c
                ny = min(max(cy, y0), y0 + c) - cy
                if nx * nx + ny * ny <= r2:
                    self._buckets.setdefault((i, j), []).append(entry)

    def query(self, x: float, y: float) -> list:
        c = self.cell
        return self._buckets.get((math.floor(x / c), math.floor(y / c)), self._empty)


class GaussField:
    """Total Gaussian potential for a fixed target and growing obstacle set."""

    def __init__(self, target: Sequence[float], obstacles: Iterable[Obstacle], params: PlannerParams,
                 counter: EvalCounter | None = None):
        self.tx, self.ty = float(target[0]), float(target[1])
        self.params = params
        self.counter = counter if counter is not None else EvalCounter()
        self._aa, self._ma = params.alpha_a, params.mu_a
        self._ao, self._mo = params.alpha_o, params.mu_o
        # bacteria sit within rho_b of the query point
        self.index = BucketIndex(cell=1.0, pad=params.rho_b + 1e-9)
        for o in obstacles:
            self.add(o)

    def add(self, o: Obstacle) -> None:
        rl = lower_radius(o, self.params)
        ru = upper_radius(o, self.params)
        # a negative squared core never matches
        rl2 = rl * rl if rl > 0.0 else -1.0
        self.index.add(o.center[0], o.center[1], ru, (o.center[0], o.center[1], rl2, ru * ru))

    def near(self, x: float, y: float) -> list:
        return self.index.query(x, y)

    def at(self, x: float, y: float, near: list | None = None) -> float:
        """Potential at ``(x, y)``; ``near`` is a bucket already fetched for a point within rho_b."""
        self.counter.n += 1
        dx = x - self.tx
        dy = y - self.ty
        j = -self._aa * math.exp(-self._ma * (dx * dx + dy * dy))
        for ox, oy, rl2, ru2 in (self.index.query(x, y) if near is None else near):
            ex = x - ox
            ey = y - oy
            d2 = ex * ex + ey * ey
            if d2 >= ru2:
                continue
            if d2 <= rl2:
                return INF
            j += self._ao * math.exp(-self._mo * d2)
        return j

    def ring(self, x: float, y: float, ring: Sequence[tuple[float, float]], ux: float, uy: float,
             ) -> list[tuple[float, float, float]]:
        """Bacteria points of a unit ``ring`` rotated and scaled by ``(ux, uy)``
        about ``(x, y)``, each with its potential: ``[(bx, by, J), ...]``.

        ``|(ux, uy)|`` must not exceed the rho_b padding of the index.
        """
        pts = []
        near = self.index.query(x, y)
        self.counter.n += len(ring)
        tx, ty = self.tx, self.ty
        aa, ma, ao, mo = self._aa, self._ma, self._ao, self._mo
        exp = math.exp
        for c, s in ring:
            bx = x + c * ux - s * uy
            by = y + s * ux + c * uy
            dx = bx - tx
            dy = by - ty
            j = -aa * exp(-ma * (dx * dx + dy * dy))
            for ox, oy, rl2, ru2 in near:
                ex = bx - ox
                ey = by - oy
                d2 = ex * ex + ey * ey
                if d2 >= ru2:
                    continue
                if d2 <= rl2:
                    j = INF
                    break
                j += ao * exp(-mo * d2)
            pts.append((bx, by, j))
        return pts

    def pick(self, x: float, y: float, ring: Sequence[tuple[float, float]], ux: float, uy: float,
             j_robot: float) -> tuple[float, float, float] | None:
        """Fused ``ring`` + selection: the bacteria point with potential below
        ``j_robot`` nearest the target (first one on ties), or ``None``.
        Every point is still evaluated and counted."""
        near = self.index.query(x, y)
        self.counter.n += len(ring)
        tx, ty = self.tx, self.ty
        aa, ma, ao, mo = self._aa, self._ma, self._ao, self._mo
        exp = math.exp
        best = None
        best_e2 = INF
        for c, s in ring:
            bx = x + c * ux - s * uy
            by = y + s * ux + c * uy
            dx = bx - tx
            dy = by - ty
            e2 = dx * dx + dy * dy
            j = -aa * exp(-ma * e2)
            for ox, oy, rl2, ru2 in near:
                ex = bx - ox
                ey = by - oy
                d2 = ex * ex + ey * ey
                if d2 >= ru2:
                    continue
                if d2 <= rl2:
                    j = INF
                    break
                j += ao * exp(-mo * d2)
            if j < j_robot and e2 < best_e2:
                best = (bx, by, j)
                best_e2 = e2
        return best

    def finite(self, x: float, y: float, near: list | None = None) -> bool:
        """True when no obstacle's lower radius contains the point (no evaluation counted)."""
        for ox, oy, rl2, _ in (self.index.query(x, y) if near is None else near):
            ex = x - ox
            ey = y - oy
            if ex * ex + ey * ey <= rl2:
                return False
        return True


class QuadField:
    """Quadratic force field restricted to obstacles near a window."""

    def __init__(self, target: Sequence[float], obstacles: Sequence[tuple[float, float, float]],
                 params: PlannerParams, rotate: str | None = None):
        self.tx, self.ty = float(target[0]), float(target[1])
        self.obs = list(obstacles)
        self.k_a = params.k_a
        self.k_rep = params.k_rep
        self.rho0 = params.rho_0
        self.rotate = rotate

    def force(self, x: float, y: float) -> tuple[float, float]:
        fx = -self.k_a * (x - self.tx)
        fy = -self.k_a * (y - self.ty)
        k, rho0 = self.k_rep, self.rho0
        r02 = rho0 * rho0
        inv0 = 1.0 / rho0
        rot = self.rotate
        for ox, oy, _ in self.obs:
            dx = x - ox
            dy = y - oy
            d2 = dx * dx + dy * dy
            if d2 > r02:
                continue
            if d2 == 0.0:
                raise SingularPotentialError(f"point ({x}, {y}) sits on an obstacle center")
            d = math.sqrt(d2)
            c = -k * (1.0 / d - inv0) / (d2 * d)
            gx, gy = c * dx, c * dy
            if rot is None:
                fx -= gx
                fy -= gy
            elif rot == "ccw":
                fx += gy
                fy -= gx
            else:
                fx -= gy
                fy += gx
        return fx, fy


# ---------------------------------------------------------------------------
# visualization export
# ---------------------------------------------------------------------------

def potential_grid(xmin: float, ymin: float, cell: float, rows: int, cols: int, target,
                   obstacles: Sequence[Obstacle], params: PlannerParams) -> np.ndarray:
    """Gaussian total potential sampled at ``(xmin + c*cell, ymin + r*cell)``."""
    xs = xmin + cell * np.arange(cols)
    ys = ymin + cell * np.arange(rows)
    gx, gy = np.meshgrid(xs, ys)
    d2t = (gx - target[0]) ** 2 + (gy - target[1]) ** 2
    out = -params.alpha_a * np.exp(-params.mu_a * d2t)
    for o in obstacles:
        d2 = (gx - o.center[0]) ** 2 + (gy - o.center[1]) ** 2
        rl = lower_radius(o, params)
        ru = upper_radius(o, params)
        band = (d2 > rl * rl) & (d2 < ru * ru)
        out = out + np.where(band, params.alpha_o * np.exp(-params.mu_o * d2), 0.0)
        if rl > 0.0:
            out[d2 <= rl * rl] = np.inf
    return out


def write_potential_map(path, xmin: float, ymin: float, cell: float, rows: int, cols: int, target,
                        obstacles: Sequence[Obstacle], params: PlannerParams) -> np.ndarray:
    grid = potential_grid(xmin, ymin, cell, rows, cols, target, obstacles, params)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {xmin:.6f} {ymin:.6f} {cell:.6f} {rows} {cols}\n")
        for row in grid:
            fh.write(",".join("inf" if math.isinf(v) else f"{v:.9g}" for v in row) + "\n")
    return grid


def read_potential_map(path) -> tuple[tuple[float, float, float, int, int], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").split()
        xmin, ymin, cell = (float(v) for v in header[:3])
        rows, cols = int(header[3]), int(header[4])
        data = np.array([[float(v) for v in line.strip().split(",")] for line in fh if line.strip()])
    return (xmin, ymin, cell, rows, cols), data.reshape(rows, cols)
