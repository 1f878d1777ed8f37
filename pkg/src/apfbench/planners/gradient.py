"""Gradient-following planners on the quadratic field: classical APF and RVF.

Both keep a square force map of the robot's surroundings (``map_size``
wide, nodes every ``map_cell``) filled with the analytic force, follow the
bilinearly interpolated force with fixed-length steps, and rebuild the map
around the robot whenever it nears the map border.  RVF fills the map with
the vortex force instead of the plain one.

Neither planner has an escape mechanism: a vanishing force, a revisit of a
recent position, or a step into a known obstacle ends the plan with NoPath.
The loop runs compiled; ``reference.apf``/``reference.rvf`` are the Python twins.
"""
from __future__ import annotations

import time

import numpy as np

from ..core import Path, Vec2
from . import _kernels as _k
from .base import PlanRequest, PlanResult, Status

STALL_FORCE = 1e-9
_STATUS = (Status.REACHED, Status.NO_PATH, Status.TIMEOUT)
_SPIN = {None: 0, "ccw": 1, "cw": -1}


def _descend(req: PlanRequest, rotate: str | None) -> PlanResult:
    p = req.params
    t0 = time.perf_counter()
    obs = req.known_obstacles
    ox = np.array([o.center[0] for o in obs], dtype=float)
    oy = np.array([o.center[1] for o in obs], dtype=float)
    orad = np.array([o.radius for o in obs], dtype=float)
    window = 4 * p.n_bacteria
    tol2 = (0.5 * p.rho_b) * (0.5 * p.rho_b)
    code, pts, evals = _k.descend(
        req.start.x, req.start.y, req.target.x, req.target.y, ox, oy, orad,
        p.k_a, p.k_rep, p.rho_0, _SPIN[rotate], p.map_size, p.map_cell,
        p.step_size, p.goal_margin ** 2, req.rover_radius, p.max_steps, p.max_time,
        window, tol2, STALL_FORCE)
    path = Path.from_array(pts)
    return PlanResult(_STATUS[code], path, (), int(evals), time.perf_counter() - t0)


def plan_apf(req: PlanRequest) -> PlanResult:
    return _descend(req, rotate=None)


def plan_rvf(req: PlanRequest) -> PlanResult:
    return _descend(req, rotate=req.params.spin)
