"""Command-line front end.

Subcommands: gen-trace, simulate, sweep, train, predict, schedule, report.
Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 a result
carried a constraint-violation flag.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import STT_400US, System, homogeneous_system, sram_system
from .configfile import ConfigError, ExperimentConfig, default_config, load_config
from .constraints import KINDS, NO_CONSTRAINT, Constraint
from .engine import RunResult, exhaustive_sweep, pareto_flags, simulate_run
from .features import profile_application
from .predictor import (TrainingSet, label_oracle, load_model, save_model,
                        train_tree)
from .scheduler import HistoryTable, Scheduler
from .trace import (BimodalGaps, SynthParams, UniformGaps, gen_synthetic,
                    load_trace, write_trace)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_FLAGGED = 3

RUN_COLUMNS = [
    "trace", "core", "freq_ghz", "instructions", "cycles", "wall_time_s",
    "cache_dynamic_j", "cache_leakage_j", "core_dynamic_j", "core_static_j",
    "total_energy_j", "edp_js", "read_hits", "write_hits", "read_misses",
    "write_misses", "expiration_misses", "early_writebacks", "writebacks",
    "evictions", "bus_read_requests", "bus_write_requests",
    "mem_busy_read_cycles", "mem_busy_write_cycles", "mem_idle_cycles",
    "mem_read_hits",
]

DECISION_COLUMNS = [
    "trace", "app", "constraint", "core", "freq_ghz", "path", "ranking",
    "from_history", "profiling_instructions", "profiling_time_s",
    "profiling_energy_j", "prediction_time_s", "prediction_energy_j",
    "migrations", "migration_time_s", "migration_energy_j", "total_energy_j",
    "wall_time_s", "run_wall_time_s", "base_energy_j", "deadline_s",
    "deadline_met", "violation",
]


def _run_row(run: RunResult, trace_path: str) -> list:
    st = run.stats
    return [
        trace_path, run.core_id, repr(run.freq_ghz), run.instructions,
        repr(run.cycles), repr(run.wall_time_s), repr(run.cache_dynamic_j),
        repr(run.cache_leakage_j), repr(run.core_dynamic_j),
        repr(run.core_static_j), repr(run.total_energy_j), repr(run.edp_js),
        st.read_hits, st.write_hits, st.read_misses, st.write_misses,
        st.expiration_misses, st.early_writebacks, st.writebacks, st.evictions,
        st.bus_read_requests, st.bus_write_requests, st.mem_busy_read_cycles,
        st.mem_busy_write_cycles, st.mem_idle_cycles, st.mem_read_hits,
    ]


def _open_csv(path: Path, columns, no_timestamp: bool, append: bool = False):
    exists = path.exists() and append
    fh = open(path, "a" if append else "w", newline="")
    writer = csv.writer(fh)
    if not exists:
        if not no_timestamp:
            fh.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
        writer.writerow(columns)
    return fh, writer


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(rows))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="experiment config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (required for synthetic generation)")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory")
    parser.add_argument("--constraint", choices=KINDS, default=NO_CONSTRAINT)
    parser.add_argument("--baseline", choices=("sram", "homog-400us", "self"),
                        default="homog-400us")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit timestamp comments so reruns are byte-identical")


def _load_cfg(args) -> ExperimentConfig:
    if args.config:
        return load_config(args.config)
    return default_config()


def _scheduler(cfg: ExperimentConfig, models) -> Scheduler:
    return Scheduler(cfg.system, cfg.power, models,
                     history=HistoryTable(cfg.history_capacity),
                     profiling_interval=cfg.profiling_interval,
                     prediction_time_s=cfg.prediction_time_s,
                     migration_time_s=cfg.migration_time_s)


def _parse_gaps(spec: str):
    kind, _, rest = spec.partition(":")
    try:
        nums = [float(x) for x in rest.split(":")] if rest else []
        if kind == "uniform" and len(nums) == 2:
            return UniformGaps(int(nums[0]), int(nums[1]))
        if kind == "bimodal" and len(nums) == 5:
            return BimodalGaps(int(nums[0]), int(nums[1]), int(nums[2]),
                               int(nums[3]), nums[4])
    except ValueError as exc:
        raise ConfigError(None, f"bad --gaps value {spec!r}: {exc}") from exc
    raise ConfigError(None, f"--gaps must be uniform:LO:HI or "
                            f"bimodal:SL:SH:LL:LH:W, got {spec!r}")


# -- subcommands --------------------------------------------------------------

def cmd_gen_trace(args) -> int:
    if args.seed is None:
        raise ConfigError(None, "synthetic generation requires an explicit --seed")
    params = SynthParams.for_rate(
        reuse_gaps=_parse_gaps(args.gaps),
        memory_op_fraction=args.mem_fraction,
        write_fraction=args.write_fraction,
        total_instructions=args.total,
        seed=args.seed,
    )
    trace = gen_synthetic(params, name=args.name or f"synth-{args.seed}")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{trace.name}.trace"
    header = list(params.describe())
    if not args.no_timestamp:
        header.insert(0, f"generated {datetime.now(timezone.utc).isoformat()}")
    write_trace(trace, path, header=header)
    print(f"wrote {path} ({len(trace)} events, {trace.instructions} instructions)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    trace = load_trace(args.trace)
    core = cfg.system.core(args.core)
    freq = args.freq if args.freq is not None else core.operating_freq_ghz
    run = simulate_run(trace, core, freq, cfg.power)
    args.out.mkdir(parents=True, exist_ok=True)
    fh, writer = _open_csv(args.out / "simulate.csv", RUN_COLUMNS,
                           args.no_timestamp, append=args.append)
    writer.writerow(_run_row(run, str(args.trace)))
    fh.close()
    print(f"core={run.core_id} freq_ghz={run.freq_ghz} "
          f"wall_time_s={run.wall_time_s!r} total_energy_j={run.total_energy_j!r} "
          f"expiration_misses={run.stats.expiration_misses}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    trace = load_trace(args.trace)
    sweep = exhaustive_sweep(trace, cfg.system, cfg.power,
                             Constraint(args.constraint),
                             deadline_s=args.deadline)
    args.out.mkdir(parents=True, exist_ok=True)
    columns = RUN_COLUMNS + ["pareto", "best"]
    fh, writer = _open_csv(args.out / "sweep.csv", columns, args.no_timestamp)
    flags = pareto_flags(sweep.rows)
    for row, pareto in zip(sweep.rows, flags):
        writer.writerow(_run_row(row, str(args.trace))
                        + [int(pareto), int(row is sweep.best)])
    fh.close()
    print(f"best core={sweep.best.core_id} freq_ghz={sweep.best.freq_ghz} "
          f"energy_j={sweep.best.total_energy_j!r} "
          f"deadline_s={sweep.deadline_s!r} violation={sweep.violation}")
    return EXIT_FLAGGED if sweep.violation else EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    traces = [load_trace(p) for p in args.traces]
    if not traces:
        raise ConfigError(None, "train needs at least one trace")
    kinds = KINDS if args.constraint == "all" else (args.constraint,)
    args.out.mkdir(parents=True, exist_ok=True)
    labels = tuple(cfg.system.labels())
    # One sweep and one profiling run per trace serve every constraint.
    profiled = []
    for trace in traces:
        feats, _ = profile_application(trace, cfg.system, cfg.power,
                                       cfg.profiling_interval)
        profiled.append((trace, feats))
    for kind in kinds:
        constraint = Constraint(kind)
        rows = tuple(
            (feats, label_oracle(trace, cfg.system, cfg.power, constraint))
            for trace, feats in profiled)
        data = TrainingSet(rows=rows, constraint=constraint, label_order=labels,
                           provenance=f"profiling_core={cfg.system.profiling_core} "
                                      f"interval={cfg.profiling_interval}")
        model = train_tree(data, max_depth=args.max_depth,
                           min_samples_leaf=args.min_samples_leaf)
        path = args.out / f"model-{kind}.txt"
        save_model(model, constraint, path)
        print(f"wrote {path} (depth={model.depth()} leaves={model.leaf_count()})")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _load_cfg(args)
    model, constraint = load_model(args.model)
    trace = load_trace(args.trace)
    feats, _ = profile_application(trace, cfg.system, cfg.power,
                                   cfg.profiling_interval)
    label = model.predict_one(feats)
    ranking = model.rank_labels(feats)
    print(f"constraint={constraint.kind} predicted={label} "
          f"ranking={' '.join(ranking)}")
    return EXIT_OK


def _load_models(model_dir: Path, kinds):
    models = {}
    for kind in kinds:
        path = model_dir / f"model-{kind}.txt"
        if path.exists():
            model, constraint = load_model(path)
            models[constraint.kind] = model
    if not models:
        raise ConfigError(None, f"no model files under {model_dir}")
    return models


def cmd_schedule(args) -> int:
    cfg = _load_cfg(args)
    models = _load_models(args.models, KINDS)
    sched = _scheduler(cfg, models)
    constraint = Constraint(args.constraint)
    traces = [load_trace(p) for p in args.traces]
    args.out.mkdir(parents=True, exist_ok=True)
    fh, writer = _open_csv(args.out / "decisions.csv", DECISION_COLUMNS,
                           args.no_timestamp, append=True)
    flagged = False
    decisions = []
    if args.dispatch:
        assignment = sched.dispatch_workload(traces, constraint,
                                             deadline_s=args.deadline)
        decisions = [p.decision for p in assignment.placements]
        flagged = assignment.any_violation and constraint.bounded
        print(f"dispatched {len(decisions)} apps "
              f"total_energy_j={assignment.total_energy_j!r}")
        for p in assignment.placements:
            print(f"  {p.app}: cluster={p.cluster} core={p.core} "
                  f"freq_ghz={p.freq_ghz} energy_j={p.energy_j!r}")
    else:
        for trace in traces:
            d = sched.run_application(trace, constraint, deadline_s=args.deadline)
            decisions.append(d)
            flagged = flagged or d.violation
            print(f"{d.app}: core={d.core} freq_ghz={d.freq_ghz} "
                  f"energy_j={d.energy_j!r} deadline_met={d.deadline_met} "
                  f"path={'>'.join(f'{c}:{r}' for c, r in d.path)}")
    by_name = {t.name: p for t, p in zip(traces, args.traces)}
    for d in decisions:
        writer.writerow([
            by_name.get(d.app, ""), d.app, d.constraint_kind, d.core,
            repr(d.freq_ghz), ">".join(f"{c}:{r}" for c, r in d.path),
            " ".join(d.ranking), int(d.from_history), d.profiling_instructions,
            repr(d.profiling_time_s), repr(d.profiling_energy_j),
            repr(d.prediction_time_s), repr(d.prediction_energy_j),
            d.migrations, repr(d.migration_time_s), repr(d.migration_energy_j),
            repr(d.energy_j), repr(d.time_s), repr(d.run_wall_time_s),
            repr(d.base_energy_j), repr(d.deadline_s), int(d.deadline_met),
            int(d.violation),
        ])
    fh.close()
    return EXIT_FLAGGED if flagged else EXIT_OK


def _baseline_system(name: str) -> System:
    if name == "sram":
        return sram_system()
    if name == "homog-400us":
        return homogeneous_system(STT_400US)
    raise ConfigError(None, f"unknown baseline {name!r}")


def cmd_report(args) -> int:
    cfg = _load_cfg(args)
    rows = _read_csv(args.runs)
    if not rows:
        raise ConfigError(None, f"{args.runs} has no data rows")
    args.out.mkdir(parents=True, exist_ok=True)
    columns = ["trace", "core", "energy_j", "baseline_energy_j", "energy_ratio",
               "wall_time_s", "baseline_wall_time_s", "latency_ratio",
               "exceeds_baseline"]
    fh, writer = _open_csv(args.out / "report.csv", columns, args.no_timestamp)
    flagged = False
    baseline_cache: dict[str, tuple[float, float]] = {}
    for row in rows:
        energy = float(row.get("total_energy_j") or row["energy_j"])
        wall = float(row["wall_time_s"])
        trace_path = row["trace"]
        if args.baseline == "self":
            base_e, base_t = energy, wall
        else:
            if trace_path not in baseline_cache:
                system = _baseline_system(args.baseline)
                core = system.cores[0]
                trace = load_trace(trace_path)
                base = simulate_run(trace, core, core.operating_freq_ghz,
                                    cfg.power)
                baseline_cache[trace_path] = (base.total_energy_j,
                                              base.wall_time_s)
            base_e, base_t = baseline_cache[trace_path]
        ratio = energy / base_e if base_e else math.inf
        exceeds = ratio > 1.0
        flagged = flagged or exceeds
        writer.writerow([trace_path, row.get("core", ""), repr(energy),
                         repr(base_e), repr(ratio), repr(wall), repr(base_t),
                         repr(wall / base_t if base_t else math.inf),
                         int(exceeds)])
    fh.close()
    print(f"wrote {args.out / 'report.csv'} ({len(rows)} rows, "
          f"baseline={args.baseline})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sttsim",
        description="Relaxed-retention STT-RAM multicore cache simulator "
                    "and core scheduler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="generate a synthetic trace")
    _add_common(p)
    p.add_argument("--gaps", default="uniform:2000:6000",
                   help="reuse-gap distribution: uniform:LO:HI or "
                        "bimodal:SL:SH:LL:LH:W (instructions)")
    p.add_argument("--mem-fraction", type=float, default=0.05)
    p.add_argument("--write-fraction", type=float, default=0.3)
    p.add_argument("--total", type=int, default=1_000_000)
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", help="one trace x one core x one frequency")
    _add_common(p)
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--core", required=True)
    p.add_argument("--freq", type=float, default=None)
    p.add_argument("--append", action="store_true",
                   help="append to an existing simulate.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="exhaustive (core, frequency) table")
    _add_common(p)
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--deadline", type=float, default=None,
                   help="explicit deadline in seconds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="label traces via the oracle and train "
                                     "per-constraint models")
    _add_common(p)
    p.add_argument("--traces", type=Path, nargs="+", required=True)
    p.add_argument("--all-constraints", dest="constraint", action="store_const",
                   const="all", help="train every constraint's model")
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="profile a trace and predict its core")
    _add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--trace", type=Path, required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("schedule", help="run the feedback loop or a "
                                        "multiprogrammed dispatch")
    _add_common(p)
    p.add_argument("--models", type=Path, required=True,
                   help="directory holding model-<constraint>.txt files")
    p.add_argument("--traces", type=Path, nargs="+", required=True)
    p.add_argument("--deadline", type=float, default=None)
    p.add_argument("--dispatch", action="store_true",
                   help="place all traces together, one per core")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("report", help="normalize run CSVs against a baseline")
    _add_common(p)
    p.add_argument("--runs", type=Path, required=True,
                   help="CSV produced by simulate/sweep/schedule")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
