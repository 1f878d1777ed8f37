"""Bacteria-point planners on the Gaussian potential.

Both planners repeatedly place ``N_B`` candidate points on a circle of
radius ``rho_b`` around the robot, keep the candidates whose potential is
below the robot's, and step to the one nearest the target.  They differ in
how the ring is oriented and in how local minima are handled:

* CRBAPF* uses a fixed ring and escapes minima with a short uniform random
  walk over finite-potential candidates;
* RAPF aligns one candidate with the robot-target ray and turns every
  minimum into an artificial obstacle, then restarts from the plan start.

The loops run compiled (``_kernels``); ``reference`` holds the Python twins.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..core import Obstacle, ObstacleKind, Path, Vec2
from ..potentials import upper_radius
from . import _kernels as _k
from .base import LocalMinimumEvent, PlanRequest, PlanResult, Status

_STATUS = (Status.REACHED, Status.NO_PATH, Status.TIMEOUT)


class _Field:
    """Flat arrays and a unit-cell bucket index for the kernels."""

    def __init__(self, req: PlanRequest):
        p = req.params
        obs = req.known_obstacles
        # one pass over the obstacles; same arithmetic as lower_radius / upper_radius
        flat = np.array([(o.center[0], o.center[1], o.radius, o.kind is ObstacleKind.ARTIFICIAL)
                         for o in obs], dtype=float).reshape(-1, 4)
        self.ox = np.ascontiguousarray(flat[:, 0])
        self.oy = np.ascontiguousarray(flat[:, 1])
        rl = flat[:, 2] + p.rho_l
        ru = rl + p.rho_u
        rl[flat[:, 3] != 0.0] = 0.0
        self.rl2 = np.where(rl > 0.0, rl * rl, -1.0)
        self.ru2 = ru * ru
        # bacteria sit within rho_b of the robot, whose cell is the one queried
        reach = ru + p.rho_b + 1e-6
        if obs:
            x0 = math.floor((self.ox - reach).min()) - 1
            y0 = math.floor((self.oy - reach).min()) - 1
            nx = int(math.floor((self.ox + reach).max())) - x0 + 2
            ny = int(math.floor((self.oy + reach).max())) - y0 + 2
        else:
            x0 = y0 = 0
            nx = ny = 1
        self.x0, self.y0, self.nx, self.ny = float(x0), float(y0), nx, ny
        self.start, self.items = _k.build_index(self.ox, self.oy, reach, self.x0, self.y0, nx, ny)

    def args(self):
        return (self.ox, self.oy, self.rl2, self.ru2, self.start, self.items,
                self.x0, self.y0, self.nx, self.ny)


def _events(ev, ev_step) -> tuple[LocalMinimumEvent, ...]:
    return tuple(LocalMinimumEvent(Vec2(x, y), s) for (x, y), s in zip(ev.tolist(), ev_step.tolist()))


def plan_rapf(req: PlanRequest) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    f = _Field(req)
    marker_ru = upper_radius(Obstacle(Vec2(0.0, 0.0), p.rho_b, ObstacleKind.ARTIFICIAL), p)
    code, pts, na, evals, ev, ev_step = _k.rapf(
        req.start.x, req.start.y, req.target.x, req.target.y, *f.args(),
        p.alpha_a, p.mu_a, p.alpha_o, p.mu_o, p.n_bacteria, p.rho_b, marker_ru * marker_ru,
        p.goal_margin ** 2, p.max_steps, p.max_time, p.max_artificial, 4 * p.n_bacteria)
    events = _events(ev, ev_step)
    artificial = tuple(Obstacle(e.position, p.rho_b, ObstacleKind.ARTIFICIAL) for e in events)
    path = Path.from_array(pts)
    return PlanResult(_STATUS[code], path, artificial, int(evals), time.perf_counter() - t0, events)


def plan_crbapf(req: PlanRequest) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    f = _Field(req)
    code, pts, evals, ev, ev_step = _k.crbapf(
        req.start.x, req.start.y, req.target.x, req.target.y, *f.args(),
        p.alpha_a, p.mu_a, p.alpha_o, p.mu_o, p.n_bacteria, p.rho_b,
        p.goal_margin ** 2, p.max_steps, p.max_time, p.rw_steps, 4 * p.n_bacteria,
        np.uint64(req.rng_seed))
    path = Path.from_array(pts)
    return PlanResult(_STATUS[code], path, (), int(evals), time.perf_counter() - t0, _events(ev, ev_step))
