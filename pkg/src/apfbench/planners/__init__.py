"""Planners behind one call signature: ``plan(name, request) -> PlanResult``."""
from __future__ import annotations

from ..core import ObstacleKind
from .astar import plan_astar
from .bacteria import plan_crbapf, plan_rapf
from .base import (LocalMinimumEvent, OscillationMonitor, Planner, PlanRequest, PlanResult, Status,
                   detect_local_minimum, select_bacteria)
from .gradient import plan_apf, plan_rvf

PLANNERS: dict[str, Planner] = {
    "apf": plan_apf,
    "rvf": plan_rvf,
    "crbapf": plan_crbapf,
    "rapf": plan_rapf,
    "astar": plan_astar,
}


def get_planner(name: str) -> Planner:
    try:
        return PLANNERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}") from None


def plan(name: str, req: PlanRequest) -> PlanResult:
    return get_planner(name)(req)


def warmup() -> None:
    """Compile (or load from cache) every kernel so no timed plan pays for it."""
    from ..core import Obstacle, Rect, Vec2
    obs = (Obstacle(Vec2(1.0, 0.1), 0.3), Obstacle(Vec2(0.5, 0.5), 0.05, ObstacleKind.ARTIFICIAL))
    req = PlanRequest(Vec2(0.0, 0.0), Vec2(2.0, 0.0), obs, rover_radius=0.1, bounds=Rect(-1, -1, 3, 1))
    for fn in PLANNERS.values():
        fn(req)


__all__ = [
    "PLANNERS", "LocalMinimumEvent", "OscillationMonitor", "PlanRequest", "PlanResult", "Status",
    "detect_local_minimum", "get_planner", "plan", "plan_apf", "plan_astar", "plan_crbapf",
    "plan_rapf", "plan_rvf", "select_bacteria", "warmup",
]
