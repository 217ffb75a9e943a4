"""Command-line entry point: ``evoperc {pattern,evolve,benchmark,replay}``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import config as cfg
from .arena import Color, DifficultyError, problem_difficulty
from .evolution import ConfigError, run_evolution
from .mechanisms import make_mechanism
from .metrics import (
    benchmark_seeds,
    records_from_result,
    run_benchmark,
    write_fractions,
    write_results,
    write_summary,
)
from .neural import GenomeError
from .simulation import Scenario, resolve_jobs, simulate


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _load_config(args) -> cfg.ExperimentConfig:
    base = cfg.load(args.config) if args.config else cfg.ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    for key, value in getattr(args, "overrides", lambda: {})().items():
        if value is not None:
            changes[key] = value
    return base.with_values(**changes) if changes else base


def _out_dir(config) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------


def cmd_pattern(args) -> int:
    config = _load_config(args)
    majority = Color.parse(args.majority)
    difficulty = args.difficulty if args.difficulty is not None else config.evolution_difficulty
    scenario = Scenario.from_seed(difficulty, majority, config.seed)
    path = Path(args.out) if args.out else _out_dir(config) / f"pattern-{config.seed}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    scenario.grid.save(path)
    print(f"wrote {path}: rho* = {problem_difficulty(scenario.grid):.6f}, "
          f"{scenario.grid.count(Color.BLACK)} B / {scenario.grid.count(Color.WHITE)} W")
    return 0


def cmd_evolve(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    cfg.dump(config, out / "config.txt")
    evo = config.evo_config()
    print(f"evolving {evo.fitness_kind} at rho* = {evo.difficulty}: population {evo.population_size}, "
          f"{evo.generations} generations, {resolve_jobs(evo.jobs)} job(s)")

    def report(stats):
        print(f"generation {stats.generation:4d}  best {stats.best_fitness:.4f}  "
              f"mean {stats.mean_fitness:.4f}", flush=True)

    result = run_evolution(evo, config.seed, out_dir=out, progress=report)
    print(f"best fitness {result.best_fitness:.4f}; genome in {out / 'best.genome'}")
    if args.svg:
        from .plotting import plot_history
        h = result.history
        plot_history([s.generation for s in h], [s.best_fitness for s in h], [s.mean_fitness for s in h],
                     out / "evolution-history.svg", title=f"F_{evo.fitness_kind}, rho* = {evo.difficulty}")
    return 0


def cmd_benchmark(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    cfg.dump(config, out / "config.txt")
    mechanisms = [make_mechanism(spec, config.hidden) for spec in config.mechanisms]
    result = run_benchmark(mechanisms, config.benchmark_difficulties, config.benchmark_runs,
                           config.benchmark_length, config.seed, config.sim_params(), jobs=config.jobs)
    write_results(result.records, out / "benchmark-results.csv")
    write_summary(result.summary, out / "benchmark-summary.csv")
    write_fractions(result.fractions, out / "benchmark-fractions.csv")
    for row in result.summary:
        t = "NA" if row.t_bar is None else f"{row.t_bar:.1f} s"
        print(f"{row.mechanism:>12}  rho* = {row.difficulty:.2f}  runs {row.runs}  T_bar {t}  E_N {row.e_n:.1f} %")
    if args.svg:
        from .plotting import plot_benchmark
        plot_benchmark(result.summary, out / "benchmark-summary.svg")
    return 0


def cmd_replay(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    spec = args.mechanism
    if args.genome:
        spec = f"ann:{args.genome}"
    mechanism = make_mechanism(spec, config.hidden)
    difficulty = config.replay_difficulty
    if args.scenario_seed is not None:
        seed = args.scenario_seed
    else:
        seed = benchmark_seeds(config.seed, difficulty, args.run + 1)[args.run]
    scenario = Scenario.from_seed(difficulty, Color.parse(args.majority), seed)
    result = simulate([scenario], mechanism, config.replay_length, config.sim_params(), record_trajectory=True)

    with open(out / "replay-trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tick", "robot_id", "x", "y", "heading", "opinion"))
        for k, frame in enumerate(result.trajectory[:, 0]):
            t = k
            for i, (x, y, h, o) in enumerate(frame):
                w.writerow((t, i, f"{x:.6f}", f"{y:.6f}", f"{h:.6f}", int(o)))
    with open(out / "replay-opinions.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time_s", "robot_id", "opinion"))
        for t, row in zip(result.times, result.opinions[0]):
            for i, o in enumerate(row):
                w.writerow((f"{t:g}", i, int(o)))
    records = records_from_result(result, [scenario], mechanism.name, difficulty)
    write_results(records, out / "replay-summary.csv")
    rec = records[0]
    if rec.consensus_time is None:
        print(f"seed {seed}: no consensus within {config.replay_length:g} s")
    else:
        print(f"seed {seed}: consensus on {rec.consensus_color.name} at {rec.consensus_time:g} s "
              f"({'correct' if rec.correct else 'wrong'})")
    if args.svg:
        from .plotting import plot_replay
        plot_replay(scenario.grid, result.trajectory[:, 0], result.times, result.opinions[0],
                    out / "replay-overview.svg", title=f"{mechanism.name}, seed {seed}, rho* = {difficulty}")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (evoperc-config v1)")
    common.add_argument("--seed", type=int, help="master seed (default from config)")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes (fallback: EVOPERC_JOBS, then 1)")
    common.add_argument("--svg", action="store_true", help="also render SVG figures")

    parser = argparse.ArgumentParser(prog="evoperc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", parents=[common], help="write a tile pattern")
    p.add_argument("--difficulty", type=float)
    p.add_argument("--majority", default="black")
    p.add_argument("--out", help="grid file path")
    p.set_defaults(func=cmd_pattern)

    e = sub.add_parser("evolve", parents=[common], help="run one evolutionary run")
    e.add_argument("--fitness", choices=("TS", "MS", "HB"))
    e.add_argument("--difficulty", type=float)
    e.add_argument("--population", type=int)
    e.add_argument("--generations", type=int)
    e.set_defaults(func=cmd_evolve)

    b = sub.add_parser("benchmark", parents=[common], help="compare mechanisms on shared scenarios")
    b.add_argument("--mechanisms", help="comma list: voter, majority, ann:<genome-file>")
    b.add_argument("--difficulty", help="comma list of difficulties")
    b.add_argument("--runs", type=int, help="runs per mechanism and difficulty")
    b.add_argument("--length", type=float, help="run length in seconds")
    b.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("replay", parents=[common], help="one fully logged run")
    r.add_argument("--mechanism", default="voter", help="voter, majority or ann:<genome-file>")
    r.add_argument("--genome", help="genome file (shorthand for --mechanism ann:<file>)")
    r.add_argument("--difficulty", type=float)
    r.add_argument("--majority", default="black")
    r.add_argument("--run", type=int, default=0, help="benchmark run index under the master seed")
    r.add_argument("--scenario-seed", type=int, help="explicit scenario seed (overrides --run)")
    r.add_argument("--length", type=float, help="run length in seconds")
    r.set_defaults(func=cmd_replay)
    return parser


def _overrides(args):
    if args.command == "evolve":
        return {"fitness": args.fitness, "evolution_difficulty": args.difficulty,
                "population_size": args.population, "max_generations": args.generations}
    if args.command == "benchmark":
        return {
            "mechanisms": tuple(s.strip() for s in args.mechanisms.split(",")) if args.mechanisms else None,
            "benchmark_difficulties": _floats(args.difficulty) if args.difficulty else None,
            "benchmark_runs": args.runs, "benchmark_length": args.length,
        }
    if args.command == "replay":
        return {"replay_difficulty": args.difficulty, "replay_length": args.length}
    return {}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.overrides = lambda: _overrides(args)
    try:
        return args.func(args)
    except (ConfigError, DifficultyError, GenomeError) as exc:
        print(f"evoperc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"evoperc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
