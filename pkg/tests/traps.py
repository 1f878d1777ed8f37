"""Seeded local-minimum fixtures shared by planner tests and the acceptance suite."""
import numpy as np

from apfbench.core import Obstacle, PlannerParams, Vec2
from apfbench.planners import PlanRequest

# five rocks: a back wall of three and two arms, opening toward the start
U_BASE = ((3.5, -0.6), (3.5, 0.0), (3.5, 0.6), (2.95, -0.85), (2.95, 0.85))
U_TARGET = Vec2(7.0, 0.0)


def utrap_request(seed: int, params: PlannerParams | None = None) -> PlanRequest:
    rng = np.random.default_rng(seed)
    obs = tuple(
        Obstacle(Vec2(x + rng.normal(0, 0.03), y + rng.normal(0, 0.03)), float(rng.uniform(0.28, 0.32)))
        for x, y in U_BASE
    )
    start = Vec2(0.0, float(rng.uniform(-0.2, 0.2)))
    return PlanRequest(start, U_TARGET, obs, params or PlannerParams(), seed, 0.2)
