"""Monte Carlo batches: trial fan-out, seed manifest, result files and gates."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import PlannerParams, Scenario
from .metrics import BatchSummary, format_table, summarize, to_csv
from .planners import PLANNERS, warmup
from .sensor_sim import SensorModel, TrialOutcome, run_trial
from .terrain import PRESETS, generate_scenario, preset

TRIALS_SCHEMA = "apfbench-trials/1"
MANIFEST_SCHEMA = "apfbench-manifest/1"
DEFAULT_TRIALS = 100
FULL_TRIALS = 500
DEFAULT_BASE_SEED = 1000
DEFAULT_PLANNERS = ("astar", "apf", "rvf", "crbapf", "rapf")

TRIAL_COLUMNS = ("scenario", "planner", "index", "seed", "scenario_hash", "status", "walked_length",
                 "planning_time_total", "mean_replan_time", "replan_count", "potential_evals",
                 "artificial_count", "safety", "path_sha256")


class GateError(ValueError):
    pass


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(sc.to_json().encode()).hexdigest()


def path_hash(points) -> str:
    a = np.ascontiguousarray(np.asarray(points, dtype="<f8").reshape(-1, 2))
    return hashlib.sha256(a.tobytes()).hexdigest()


def scenario_source(name: str) -> tuple[str, Scenario | None]:
    """Preset name -> (name, None); scenario file -> (file stem, scenario)."""
    if name.upper() in PRESETS:
        return name.upper(), None
    p = FsPath(name)
    if p.is_file():
        return p.stem, Scenario.from_json(p.read_text(encoding="utf-8"))
    raise ValueError(f"{name!r} is neither a preset ({', '.join(PRESETS)}) nor a scenario file")


def make_scenario(name: str, seed: int) -> Scenario:
    label, fixed = scenario_source(name)
    return fixed if fixed is not None else generate_scenario(preset(label), seed)


@dataclass(frozen=True)
class BenchConfig:
    scenarios: tuple[str, ...] = ("A", "B", "C")
    planners: tuple[str, ...] = DEFAULT_PLANNERS
    trials_per_cell: int = DEFAULT_TRIALS
    base_seed: int = DEFAULT_BASE_SEED
    params: PlannerParams = field(default_factory=PlannerParams)
    sensor: SensorModel = field(default_factory=SensorModel)
    workers: int = 1
    output_dir: str | None = None
    omniscient: bool = False

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not (0 <= self.base_seed and self.base_seed + self.trials_per_cell <= 2**64):
            raise ValueError("seeds must fit in 64 bits")
        for p in self.planners:
            if p.lower() not in PLANNERS:
                raise ValueError(f"unknown planner {p!r}")
        for s in self.scenarios:
            scenario_source(s)

    def seed(self, i: int) -> int:
        return self.base_seed + i

    def to_dict(self) -> dict:
        return {
            "scenarios": list(self.scenarios), "planners": list(self.planners),
            "trials_per_cell": self.trials_per_cell, "base_seed": self.base_seed,
            "params": self.params.to_dict(), "sensor": dataclasses.asdict(self.sensor),
            "omniscient": self.omniscient,
        }

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "BenchConfig":
        kw = dict(
            scenarios=tuple(d["scenarios"]), planners=tuple(d["planners"]),
            trials_per_cell=int(d["trials_per_cell"]), base_seed=int(d["base_seed"]),
            params=PlannerParams.from_dict(d.get("params", {})),
            sensor=SensorModel(**d.get("sensor", {})), omniscient=bool(d.get("omniscient", False)),
        )
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class TrialRecord:
    scenario: str
    planner: str
    index: int
    seed: int
    scenario_hash: str
    outcome: TrialOutcome

    @property
    def path_sha256(self) -> str:
        return path_hash(self.outcome.walked)

    def row(self) -> dict:
        o = self.outcome
        s = [d for _, d in o.safety_samples]
        return {
            "scenario": self.scenario, "planner": self.planner, "index": self.index, "seed": self.seed,
            "scenario_hash": self.scenario_hash, "status": o.status.value,
            "walked_length": repr(o.walked_length), "planning_time_total": repr(o.planning_time_total),
            "mean_replan_time": repr(o.mean_replan_time), "replan_count": o.replan_count,
            "potential_evals": o.potential_evals, "artificial_count": o.artificial_count,
            "safety": repr(math.fsum(s) / len(s)) if s else "", "path_sha256": self.path_sha256,
        }


# -- worker side ------------------------------------------------------------

def _run_cell(args) -> list[TrialRecord]:
    """All planners on one (scenario, trial index): the map is generated once."""
    name, index, seed, planners, params, sensor, omniscient = args
    label, _ = scenario_source(name)
    sc = make_scenario(name, seed)
    h = scenario_hash(sc)
    out = []
    for p in planners:
        o = run_trial(sc, p, params, sensor, seed=seed, omniscient=omniscient)
        out.append(TrialRecord(label, p, index, seed, h, o))
    return out


def _tasks(cfg: BenchConfig):
    for name in cfg.scenarios:
        for i in range(cfg.trials_per_cell):
            yield (name, i, cfg.seed(i), tuple(p.lower() for p in cfg.planners), cfg.params, cfg.sensor,
                   cfg.omniscient)


@dataclass
class BenchResult:
    config: BenchConfig
    records: list[TrialRecord]
    summaries: list[BatchSummary]

    def cell(self, planner: str, scenario: str) -> BatchSummary:
        for s in self.summaries:
            if s.planner == planner and s.scenario == scenario:
                return s
        raise KeyError((planner, scenario))

    def outcomes(self, planner: str, scenario: str) -> list[TrialOutcome]:
        return [r.outcome for r in self.records if r.planner == planner and r.scenario == scenario]


def run_bench(cfg: BenchConfig, progress: Callable[[int, int], None] | None = None) -> BenchResult:
    """Run every (scenario, trial, planner) combination; records come back in task order."""
    tasks = list(_tasks(cfg))
    records: list[TrialRecord] = []
    if cfg.workers == 1:
        warmup()
        for k, t in enumerate(tasks):
            records.extend(_run_cell(t))
            if progress:
                progress(k + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=warmup) as pool:
            # map preserves task order, so the collector sees a deterministic sequence
            for k, recs in enumerate(pool.map(_run_cell, tasks, chunksize=4)):
                records.extend(recs)
                if progress:
                    progress(k + 1, len(tasks))
    summaries = []
    for name in cfg.scenarios:
        label, _ = scenario_source(name)
        for p in cfg.planners:
            p = p.lower()
            outs = [r.outcome for r in records if r.scenario == label and r.planner == p]
            summaries.append(summarize(outs, p, label))
    return BenchResult(cfg, records, summaries)


# -- files --------------------------------------------------------------------

def trials_csv(records: Iterable[TrialRecord], with_time: bool = True) -> str:
    cols = [c for c in TRIAL_COLUMNS if with_time or "time" not in c]
    buf = io.StringIO()
    buf.write(f"# {TRIALS_SCHEMA}\n")
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def manifest(result: BenchResult) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "config": result.config.to_dict(),
        "trials": [
            {"scenario": r.scenario, "planner": r.planner, "index": r.index, "seed": r.seed,
             "scenario_hash": r.scenario_hash, "status": r.outcome.status.value,
             "path_sha256": r.path_sha256}
            for r in result.records
        ],
    }


def write_outputs(result: BenchResult, out_dir) -> dict[str, FsPath]:
    d = FsPath(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    files = {
        "summary_csv": d / "summary.csv",
        "summary_txt": d / "summary.txt",
        "trials_csv": d / "trials.csv",
        "manifest": d / "manifest.json",
    }
    files["summary_csv"].write_text(to_csv(result.summaries), encoding="utf-8")
    files["summary_txt"].write_text(format_table(result.summaries) + "\n", encoding="utf-8")
    files["trials_csv"].write_text(trials_csv(result.records), encoding="utf-8")
    files["manifest"].write_text(json.dumps(manifest(result), indent=1), encoding="utf-8")
    return files


def replay(manifest_data: dict, workers: int = 1) -> tuple[BenchResult, list[str]]:
    """Re-run a bench from its manifest; returns the new result and every mismatch found."""
    if manifest_data.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unsupported manifest schema {manifest_data.get('schema')!r}")
    cfg = BenchConfig.from_dict(manifest_data["config"], workers=workers)
    result = run_bench(cfg)
    got = {(r.scenario, r.planner, r.index): r for r in result.records}
    problems = []
    for t in manifest_data["trials"]:
        key = (t["scenario"], t["planner"], t["index"])
        r = got.get(key)
        if r is None:
            problems.append(f"{key}: missing")
            continue
        if r.seed != t["seed"] or r.scenario_hash != t["scenario_hash"]:
            problems.append(f"{key}: seed or scenario differs")
        if r.outcome.status.value != t["status"]:
            problems.append(f"{key}: status {r.outcome.status.value} != {t['status']}")
        if r.path_sha256 != t["path_sha256"]:
            problems.append(f"{key}: walked path differs")
    return result, problems


# -- gates --------------------------------------------------------------------

def _metric(s: BatchSummary, name: str):
    if not hasattr(s, name):
        raise GateError(f"unknown metric {name!r}")
    return getattr(s, name)


def check_gates(result: BenchResult, gates: Sequence[dict]) -> list[tuple[str, bool, str]]:
    """Evaluate gate definitions against the summaries.

    Gate kinds (``scenario`` may be ``"*"`` for every benched scenario):

    * ``order``: ``metric`` strictly decreasing along ``planners``;
    * ``min`` / ``max``: ``metric`` of ``planner`` against ``value``;
    * ``ratio_max`` / ``ratio_min``: ``metric`` of ``num`` over ``den`` against ``value``;
    * ``diff_min``: ``metric`` of ``num`` minus ``den`` at least ``value``.

    An undefined metric (no successful trial) fails its gate.
    """
    labels = [scenario_source(s)[0] for s in result.config.scenarios]
    out = []
    for g in gates:
        kind = g.get("type")
        metric = g.get("metric", "reachability")
        scen = g.get("scenario", "*")
        for sc in (labels if scen == "*" else [scen]):
            name = g.get("name", kind) + f"[{sc}]"
            try:
                if kind == "order":
                    vals = [_metric(result.cell(p, sc), metric) for p in g["planners"]]
                    ok = None not in vals and all(a > b for a, b in zip(vals, vals[1:]))
                    out.append((name, ok, f"{metric}: " + " > ".join(f"{p}={v}" for p, v in zip(g["planners"], vals))))
                elif kind in ("min", "max"):
                    v = _metric(result.cell(g["planner"], sc), metric)
                    ok = v is not None and (v >= g["value"] if kind == "min" else v <= g["value"])
                    out.append((name, ok, f"{g['planner']} {metric}={v} ({kind} {g['value']})"))
                elif kind in ("ratio_max", "ratio_min", "diff_min"):
                    a = _metric(result.cell(g["num"], sc), metric)
                    b = _metric(result.cell(g["den"], sc), metric)
                    if a is None or b is None or (kind != "diff_min" and b == 0):
                        out.append((name, False, f"{metric} undefined ({g['num']}={a}, {g['den']}={b})"))
                        continue
                    v = a - b if kind == "diff_min" else a / b
                    ok = v <= g["value"] if kind == "ratio_max" else v >= g["value"]
                    out.append((name, ok, f"{g['num']}/{g['den']} {metric} {kind} -> {v:.4g} (limit {g['value']})"))
                else:
                    raise GateError(f"unknown gate type {kind!r}")
            except KeyError as e:
                raise GateError(f"gate {g} refers to a cell that was not benched: {e}") from None
    return out


def load_gates(path) -> list[dict]:
    data = json.loads(FsPath(path).read_text(encoding="utf-8"))
    gates = data.get("gates") if isinstance(data, dict) else data
    if not isinstance(gates, list):
        raise GateError("gate file must hold a list or an object with a 'gates' list")
    return gates


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))
