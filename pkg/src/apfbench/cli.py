"""apfbench command line: generate, run, bench, export-map.

Exit codes: 0 success, 1 usage error, 2 gate failure, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path as FsPath

from . import bench
from .core import ObstacleKind, PlannerParams
from .planners import PLANNERS, warmup
from .potentials import write_potential_map
from .sensor_sim import SensorModel, run_trial, write_trace
from .terrain import coverage, generate_scenario, preset

EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _params(path: str | None) -> PlannerParams:
    if not path:
        return PlannerParams()
    try:
        data = json.loads(FsPath(path).read_text(encoding="utf-8"))
        return PlannerParams.from_dict(data)
    except (OSError, ValueError, TypeError) as e:
        raise UsageError(f"bad --params file {path}: {e}") from None


def _sensor(a) -> SensorModel:
    try:
        return SensorModel(range=a.sensor_range, fov=math.radians(a.fov_deg), edge=not a.center_detect)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _planner(name: str) -> str:
    if name.lower() not in PLANNERS:
        raise UsageError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}")
    return name.lower()


def _scenario(name: str, seed: int):
    try:
        return bench.make_scenario(name, seed)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot load scenario {name!r}: {e}") from None


def cmd_generate(a) -> int:
    try:
        spec = preset(a.preset)
    except ValueError as e:
        raise UsageError(str(e)) from None
    sc = generate_scenario(spec, a.seed)
    FsPath(a.out).write_text(sc.to_json(), encoding="utf-8")
    rocks = sum(o.kind is ObstacleKind.ROCK for o in sc.obstacles)
    craters = sum(o.kind is ObstacleKind.CRATER for o in sc.obstacles)
    print(f"scenario {spec.name} seed {a.seed} -> {a.out}")
    print(f"rocks {rocks}  craters {craters}  rock coverage {100 * coverage(sc, ObstacleKind.ROCK):.3f}%  "
          f"crater coverage {100 * coverage(sc, ObstacleKind.CRATER):.3f}%")
    return EXIT_OK


def _export_map(sc, params, out: str, cell: float, walked=None) -> None:
    b = sc.bounds
    cols = int(round((b.xmax - b.xmin) / cell)) + 1
    rows = int(round((b.ymax - b.ymin) / cell)) + 1
    write_potential_map(out, b.xmin, b.ymin, cell, rows, cols, sc.goal_center, sc.obstacles, params)
    if walked is not None:
        p = FsPath(out)
        with open(p.with_name(p.stem + "_path.csv"), "w", encoding="utf-8") as fh:
            fh.write("x,y\n")
            for x, y in walked:
                fh.write(f"{x:.6f},{y:.6f}\n")


def cmd_run(a) -> int:
    planner = _planner(a.planner)
    params = _params(a.params)
    sc = _scenario(a.scenario, a.seed)
    warmup()
    o = run_trial(sc, planner, params, _sensor(a), seed=a.seed, omniscient=a.omniscient,
                  record_trace=bool(a.trace))
    print(f"planner {planner}  status {o.status.value}  walked {o.walked_length:.3f} m  "
          f"planning {1e3 * o.planning_time_total:.2f} ms over {o.replan_count} plans  "
          f"evals {o.potential_evals}  artificial {o.artificial_count}")
    if a.trace:
        write_trace(o, a.trace)
        print(f"trace -> {a.trace}")
    if a.export_potential_map:
        _export_map(sc, params, a.export_potential_map, a.cell, o.walked)
        print(f"potential map -> {a.export_potential_map}")
    return EXIT_OK


def cmd_export_map(a) -> int:
    sc = _scenario(a.scenario, a.seed)
    if not a.cell > 0:
        raise UsageError("--cell must be positive")
    _export_map(sc, _params(a.params), a.out, a.cell)
    print(f"potential map -> {a.out}")
    return EXIT_OK


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        print(f"  {done}/{total} maps", file=sys.stderr, flush=True)


def cmd_bench(a) -> int:
    gates = None
    if a.gate:
        try:
            gates = bench.load_gates(a.gate)
        except (OSError, ValueError) as e:
            raise UsageError(f"bad --gate file: {e}") from None
    if a.from_manifest:
        try:
            data = json.loads(FsPath(a.from_manifest).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise UsageError(f"bad manifest: {e}") from None
        result, problems = bench.replay(data, workers=a.workers)
        for p in problems:
            print(f"MISMATCH {p}")
        print(f"replayed {len(result.records)} trials, {len(problems)} mismatches")
        if problems:
            return EXIT_GATE
    else:
        trials = a.trials if a.trials is not None else (bench.FULL_TRIALS if a.full else bench.DEFAULT_TRIALS)
        try:
            cfg = bench.BenchConfig(
                scenarios=tuple(s for s in a.scenarios.split(",") if s),
                planners=tuple(_planner(p) for p in a.planners.split(",") if p),
                trials_per_cell=trials, base_seed=a.base_seed, params=_params(a.params),
                sensor=_sensor(a), workers=a.workers, output_dir=a.out, omniscient=a.omniscient)
        except ValueError as e:
            raise UsageError(str(e)) from None
        result = bench.run_bench(cfg, progress=None if a.quiet else _progress)
    print(bench.format_table(result.summaries))
    if a.out:
        files = bench.write_outputs(result, a.out)
        print(f"results -> {files['summary_csv'].parent}")
    if gates:
        checks = bench.check_gates(result, gates)
        for name, ok, detail in checks:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not all(ok for _, ok, _ in checks):
            return EXIT_GATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="apfbench", description="Potential-field planner benchmark on synthetic planetary terrain.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("scenario", help="preset name (A, B, C, ...) or scenario JSON file")
            p.add_argument("--seed", type=int, default=bench.DEFAULT_BASE_SEED)
        p.add_argument("--params", help="JSON file of PlannerParams overrides")

    def sensing(p):
        p.add_argument("--omniscient", action="store_true", help="know every obstacle from the start")
        p.add_argument("--sensor-range", type=float, default=SensorModel.range)
        p.add_argument("--fov-deg", type=float, default=math.degrees(SensorModel.fov))
        p.add_argument("--center-detect", action="store_true",
                       help="detect an obstacle only when its center is inside the sector")

    g = sub.add_parser("generate", help="write a random scenario file")
    g.add_argument("--preset", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    r = sub.add_parser("run", help="one closed-loop trial")
    common(r)
    sensing(r)
    r.add_argument("--planner", required=True)
    r.add_argument("--trace", help="per-step CSV output")
    r.add_argument("--export-potential-map", help="Gaussian potential grid output; the walked path goes to <name>_path.csv")
    r.add_argument("--cell", type=float, default=0.1, help="potential map resolution [m]")
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("bench", help="Monte Carlo comparison")
    common(b, scenario=False)
    sensing(b)
    b.add_argument("--scenarios", default="A,B,C")
    b.add_argument("--planners", default=",".join(bench.DEFAULT_PLANNERS))
    b.add_argument("--trials", type=int, help=f"trials per cell (default {bench.DEFAULT_TRIALS})")
    b.add_argument("--full", action="store_true", help=f"{bench.FULL_TRIALS} trials per cell")
    b.add_argument("--base-seed", type=int, default=bench.DEFAULT_BASE_SEED)
    b.add_argument("--workers", type=int, default=bench.default_workers())
    b.add_argument("--out", help="output directory for CSVs and the seed manifest")
    b.add_argument("--gate", help="JSON gate definitions; exit 2 when one fails")
    b.add_argument("--from-manifest", help="re-run a previous bench and compare statuses and paths")
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(fn=cmd_bench)

    e = sub.add_parser("export-map", help="write the Gaussian potential grid of a scenario")
    common(e)
    e.add_argument("--out", required=True)
    e.add_argument("--cell", type=float, default=0.1)
    e.set_defaults(fn=cmd_export_map)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.fn(a)
    except UsageError as e:
        print(f"apfbench: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except bench.GateError as e:
        print(f"apfbench: gate error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"apfbench: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
