"""Batch metrics: reachability, planning time, path length, safety, evaluation counts."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sensor_sim import TrialOutcome

SUMMARY_SCHEMA = "apfbench-summary/1"
SUMMARY_COLUMNS = (
    "planner", "scenario", "trials", "successes", "reachability",
    "mean_planning_time", "p25_planning_time", "p50_planning_time", "p75_planning_time",
    "planning_time_outliers", "mean_replan_time", "mean_path_length", "mean_safety",
    "mean_potential_evals",
)
# columns that carry wall-clock measurements
TIME_COLUMNS = frozenset(c for c in SUMMARY_COLUMNS if "time" in c)


class MetricError(ValueError):
    pass


def _successes(outcomes: Sequence[TrialOutcome]) -> list[TrialOutcome]:
    return [o for o in outcomes if o.success]


def reachability(outcomes: Sequence[TrialOutcome]) -> float:
    if not outcomes:
        raise MetricError("reachability of an empty batch")
    return len(_successes(outcomes)) / len(outcomes)


def mean_path_length(outcomes: Sequence[TrialOutcome]) -> float | None:
    """Mean walked length over successful trials; None without successes."""
    ok = _successes(outcomes)
    if not ok:
        return None
    return math.fsum(o.walked_length for o in ok) / len(ok)


def trial_safety(outcome: TrialOutcome) -> float | None:
    if not outcome.safety_samples:
        return None
    return math.fsum(d for _, d in outcome.safety_samples) / len(outcome.safety_samples)


def safety(outcomes: Sequence[TrialOutcome]) -> float | None:
    """Per successful trial, the mean over detected obstacles of the closest
    approach; then the mean over trials.  None when nothing was ever detected."""
    vals = [s for s in (trial_safety(o) for o in _successes(outcomes)) if s is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def rapf_eval_count(n_bacteria: int, path_length: float, rho_b: float) -> int:
    """Potential evaluations for a path of ``path_length`` walked in ``rho_b`` steps."""
    if n_bacteria <= 0 or path_length <= 0 or rho_b <= 0:
        raise MetricError("n_bacteria, path_length and rho_b must be positive")
    # guard against 8*3/0.05 = 480.00000000000006 style round-up
    return math.ceil(round(n_bacteria * path_length / rho_b, 9))


def quantiles(values: Sequence[float]) -> tuple[float, float, float, int]:
    """(p25, p50, p75, count above p75 + 1.5 IQR), linear interpolation."""
    if len(values) == 0:
        raise MetricError("quantiles of an empty sample")
    a = np.asarray(values, dtype=float)
    p25, p50, p75 = np.quantile(a, [0.25, 0.5, 0.75], method="linear")
    fence = p75 + 1.5 * (p75 - p25)
    return float(p25), float(p50), float(p75), int(np.count_nonzero(a > fence))


@dataclass(frozen=True)
class BatchSummary:
    planner: str
    scenario: str
    trials: int
    successes: int
    reachability: float
    mean_planning_time: float | None
    planning_time_quantiles: tuple[float, float, float, int] | None
    mean_path_length: float | None
    mean_safety: float | None
    mean_potential_evals: float | None
    mean_replan_time: float | None = None

    def row(self) -> dict:
        q = self.planning_time_quantiles or (None, None, None, None)
        return {
            "planner": self.planner, "scenario": self.scenario, "trials": self.trials,
            "successes": self.successes, "reachability": self.reachability,
            "mean_planning_time": self.mean_planning_time,
            "p25_planning_time": q[0], "p50_planning_time": q[1], "p75_planning_time": q[2],
            "planning_time_outliers": q[3], "mean_replan_time": self.mean_replan_time,
            "mean_path_length": self.mean_path_length, "mean_safety": self.mean_safety,
            "mean_potential_evals": self.mean_potential_evals,
        }


def summarize(outcomes: Sequence[TrialOutcome], planner: str, scenario: str) -> BatchSummary:
    """Aggregate one (planner, scenario) cell; time, length and eval means use successes only."""
    r = reachability(outcomes)
    ok = _successes(outcomes)
    if ok:
        times = [o.planning_time_total for o in ok]
        mean_t = math.fsum(times) / len(ok)
        q = quantiles(times)
        replan = [o.mean_replan_time for o in ok if o.replan_count]
        mean_rp = math.fsum(replan) / len(replan) if replan else None
        evals = math.fsum(o.potential_evals for o in ok) / len(ok)
    else:
        mean_t = q = mean_rp = evals = None
    return BatchSummary(planner, scenario, len(outcomes), len(ok), r, mean_t, q,
                        mean_path_length(outcomes), safety(outcomes), evals, mean_rp)


def _fmt(v, spec: str) -> str:
    if v is None:
        width = "".join(ch for ch in spec.split(".")[0] if ch.isdigit())
        return "-".rjust(int(width or 0))
    return format(v, spec)


def format_table(summaries: Sequence[BatchSummary]) -> str:
    """Plain-text table: one row per planner, reachability per scenario, then the
    time/length/safety columns of each scenario."""
    head = (f"{'planner':<8} {'scen':<4} {'N':>5} {'reach%':>7} {'T_mean[ms]':>11} {'T_p50[ms]':>10} "
            f"{'IQR[ms]':>9} {'out':>4} {'T_plan[ms]':>10} {'L[m]':>7} {'safety[m]':>9} {'evals':>9}")
    lines = [head, "-" * len(head)]
    for s in summaries:
        q = s.planning_time_quantiles
        ms = (lambda v: None if v is None else v * 1e3)
        lines.append(
            f"{s.planner:<8} {s.scenario:<4} {s.trials:>5} {100 * s.reachability:>7.1f} "
            f"{_fmt(ms(s.mean_planning_time), '>11.2f')} {_fmt(ms(q[1]) if q else None, '>10.2f')} "
            f"{_fmt(ms(q[2] - q[0]) if q else None, '>9.2f')} {_fmt(q[3] if q else None, '>4d')} "
            f"{_fmt(ms(s.mean_replan_time), '>10.3f')} {_fmt(s.mean_path_length, '>7.2f')} "
            f"{_fmt(s.mean_safety, '>9.3f')} {_fmt(s.mean_potential_evals, '>9.0f')}")
    return "\n".join(lines)


def to_csv(summaries: Sequence[BatchSummary], with_time: bool = True) -> str:
    cols = [c for c in SUMMARY_COLUMNS if with_time or c not in TIME_COLUMNS]
    buf = io.StringIO()
    buf.write(f"# {SUMMARY_SCHEMA}\n")
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for s in summaries:
        row = {k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in s.row().items()}
        w.writerow(row)
    return buf.getvalue()
