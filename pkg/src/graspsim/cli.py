"""Command line front end.

Three subcommands:

  run       simulate one scenario, write trace.csv and metrics.txt
  sweep     rerun a scenario across a list of values for one config key
  validate  check numerical invariants, optionally against a scenario file

Exit codes: 0 success, 1 runtime or validation failure, 2 bad configuration
or usage, 3 numerical divergence during a run.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config
from .backend import get_backend
from .errors import ConfigError, GraspSimError, NumericalDivergenceError
from .simulator import Metrics, Trace, compute_metrics, run

# Column layout of trace.csv.  This is a stable external contract: tools
# downstream parse the header by name, so the order never changes.  The
# wrench columns carry the measured (sensor) wrench, the quantity a real
# force-torque logger would record.
CSV_HEADER = (
    "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,"
    "fx,fy,fz,mx,my,mz,gate,contact,align_angle"
)

_METRIC_KEYS = (
    "settling_time_velocity",
    "settling_time_force",
    "settling_time_alignment",
    "steady_state_force_error",
    "max_penetration",
    "final_alignment_angle",
)


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def trace_to_csv(trace: Trace) -> str:
    """Render a trace in the fixed CSV layout, numbers at 9 significant digits."""
    lines = [CSV_HEADER]
    for k in range(len(trace)):
        cells = [_fmt(trace.times[k])]
        cells += [_fmt(v) for v in trace.positions[k]]
        cells += [_fmt(v) for v in trace.quaternions[k]]
        cells += [_fmt(v) for v in trace.twists[k]]
        cells += [_fmt(v) for v in trace.measured_wrenches[k]]
        cells.append(_fmt(trace.gates[k]))
        cells.append(str(int(trace.contacts[k])))
        cells.append(_fmt(trace.alignment_angles[k]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def metrics_to_text(metrics: Metrics) -> str:
    lines = []
    for key in _METRIC_KEYS:
        value = getattr(metrics, key)
        lines.append(f"{key} = {'none' if value is None else _fmt(value)}")
    return "\n".join(lines) + "\n"


def _write_atomic(path: Path, text: str):
    # write-then-rename so readers never observe a half-written file
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(out_dir: Path, trace: Trace, metrics: Metrics):
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "trace.csv", trace_to_csv(trace))
    _write_atomic(out_dir / "metrics.txt", metrics_to_text(metrics))


def _resolve_scenario(spec: str):
    """Accept either a file path or the name of a bundled scenario."""
    path = Path(spec)
    if path.exists():
        return config.load_scenario(path)
    if spec in config.list_bundled():
        return config.load_bundled(spec)
    raise ConfigError(
        f"scenario {spec!r} is neither a file nor a bundled name "
        f"({', '.join(config.list_bundled())})",
        path=spec,
    )


# run ------------------------------------------------------------------


def cmd_run(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    backend = get_backend(args.backend)
    trace = run(scenario, backend=backend)
    metrics = compute_metrics(trace, scenario)
    if args.out is not None:
        write_outputs(Path(args.out), trace, metrics)
    print(f"{scenario.name}: {len(trace)} rows, backend {backend.BACKEND_NAME}")
    sys.stdout.write(metrics_to_text(metrics))
    return 0


# sweep ----------------------------------------------------------------


def _set_by_path(data, dotted: str, value: float):
    """Overwrite one scalar leaf of the config mapping, named by dots."""
    keys = dotted.split(".")
    cur = data
    trail = []
    for key in keys[:-1]:
        trail.append(key)
        if isinstance(cur, list) and key.isdigit() and int(key) < len(cur):
            cur = cur[int(key)]
        elif isinstance(cur, dict) and key in cur:
            cur = cur[key]
        else:
            raise ConfigError(f"no config section {'.'.join(trail)!r}", key=dotted)
    last = keys[-1]
    if isinstance(cur, list) and last.isdigit() and int(last) < len(cur):
        cur[int(last)] = value
    elif isinstance(cur, dict) and last in cur:
        if isinstance(cur[last], (dict, list)):
            raise ConfigError(f"sweep target {dotted!r} is not a scalar", key=dotted)
        cur[last] = value
    else:
        raise ConfigError(f"no config key {dotted!r}", key=dotted)


def derive_sweep_seed(base_seed: int, index: int) -> int:
    """Independent noise stream per sweep point, stable across worker counts."""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _sweep_job(job):
    data, out_dir, backend_name = job
    scenario = config.scenario_from_dict(data, path="<sweep>")
    trace = run(scenario, backend=get_backend(backend_name))
    metrics = compute_metrics(trace, scenario)
    write_outputs(Path(out_dir), trace, metrics)
    return metrics


def _max_workers(n_jobs: int) -> int:
    env = os.environ.get("GRASPSIM_MAX_WORKERS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"GRASPSIM_MAX_WORKERS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("GRASPSIM_MAX_WORKERS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return min(cap, n_jobs)


def cmd_sweep(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}")
    if not values:
        raise ConfigError("--values is empty")
    get_backend(args.backend)  # fail fast before spawning workers

    out_root = Path(args.out)
    jobs = []
    for index, value in enumerate(values):
        data = config.scenario_to_dict(scenario)  # fresh copy per point
        _set_by_path(data, args.param, value)
        data["run"]["seed"] = derive_sweep_seed(scenario.seed, index)
        jobs.append((data, str(out_root / f"value_{_fmt(value)}"), args.backend))
    # validate every point up front so a bad value fails before any run
    for data, _, _ in jobs:
        config.scenario_from_dict(data, path=f"<sweep {args.param}>")

    workers = _max_workers(len(jobs))
    if workers == 1:
        results = [_sweep_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))

    lines = ["value," + ",".join(_METRIC_KEYS)]
    for value, metrics in zip(values, results):
        cells = [_fmt(value)]
        for key in _METRIC_KEYS:
            v = getattr(metrics, key)
            cells.append("none" if v is None else _fmt(v))
        lines.append(",".join(cells))
    out_root.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_root / "summary.csv", "\n".join(lines) + "\n")
    print(f"{scenario.name}: swept {args.param} over {len(values)} values, {workers} workers")
    return 0


# validate --------------------------------------------------------------


def cmd_validate(args) -> int:
    from .validate import CheckResult, run_checks

    scenario = None
    config_failure = None
    if args.scenario is not None:
        try:
            scenario = _resolve_scenario(args.scenario)
        except ConfigError as exc:
            config_failure = exc.diagnostic()
    results = run_checks(scenario)
    if config_failure is not None:
        results.append(CheckResult("scenario-config", False, config_failure))
    failed = 0
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        failed += not res.passed
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 2 if config_failure is not None else 1
    print(f"all {len(results)} checks passed")
    return 0


# entry point ------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspsim",
        description="Closed-loop contact alignment simulator for ring-shaped grippers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("scenario", help="scenario YAML path or bundled name")
    p_run.add_argument("--out", help="directory for trace.csv and metrics.txt")
    p_run.add_argument("--backend", help="auto (default), python or cython")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="rerun a scenario across parameter values")
    p_sweep.add_argument("scenario", help="scenario YAML path or bundled name")
    p_sweep.add_argument("--param", required=True, help="dotted config key, e.g. policy.gate_gain")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out", required=True, help="output directory root")
    p_sweep.add_argument("--backend", help="auto (default), python or cython")
    p_sweep.add_argument("--seed", type=int, help="override the base seed")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the numerical invariant checks")
    p_val.add_argument("scenario", nargs="?", help="optional scenario to check and smoke-run")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return 2
    except NumericalDivergenceError as exc:
        print(f"numerical divergence: {exc} (t={exc.time:g} s)", file=sys.stderr)
        return 3
    except GraspSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
