"""Consensus detection, benchmark aggregation and the shared-seed harness."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import seeding
from .arena import Color
from .mechanisms import Mechanism
from .simulation import Scenario, SimParams, SimResult, simulate_many

BENCHMARK_DIFFICULTIES = (0.25, 0.52, 0.67, 0.82)
BENCHMARK_LENGTH = 400.0

RESULT_COLUMNS = ("mechanism", "difficulty", "seed", "consensus_time_s", "consensus_color", "correct")
SUMMARY_COLUMNS = ("mechanism", "difficulty", "runs", "T_bar_s", "E_N_percent")


def consensus_time(trace, times=None):
    """First ``(time, Color)`` at which every opinion agrees, else ``None``.

    ``trace`` has one row of opinions per sample; ``times`` defaults to one
    second per sample.
    """
    trace = np.asarray(trace)
    if trace.ndim != 2 or trace.shape[0] == 0:
        return None
    unanimous = np.all(trace == trace[:, :1], axis=1)
    hits = np.flatnonzero(unanimous)
    if hits.size == 0:
        return None
    k = int(hits[0])
    t = float(k) if times is None else float(times[k])
    return t, Color(int(trace[k, 0]))


@dataclass(frozen=True)
class RunRecord:
    mechanism: str
    difficulty: float
    seed: int
    consensus_time: float | None
    consensus_color: Color | None
    majority: Color = Color.BLACK

    def __post_init__(self):
        if (self.consensus_time is None) != (self.consensus_color is None):
            raise ValueError("consensus time and color must be both present or both absent")

    @property
    def correct(self) -> bool:
        return self.consensus_color is not None and self.consensus_color == self.majority


@dataclass(frozen=True)
class SummaryRow:
    mechanism: str
    difficulty: float
    runs: int
    t_bar: float | None
    e_n: float


def aggregate(records: Sequence[RunRecord]) -> SummaryRow:
    """Mean time over every run that reached any consensus; E_N over all runs."""
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    keys = {(r.mechanism, r.difficulty) for r in records}
    if len(keys) != 1:
        raise ValueError(f"records span several cells: {sorted(keys)}")
    mechanism, difficulty = keys.pop()
    times = sorted(r.consensus_time for r in records if r.consensus_time is not None)
    t_bar = math.fsum(times) / len(times) if times else None
    e_n = 100.0 * sum(r.correct for r in records) / len(records)
    return SummaryRow(mechanism, difficulty, len(records), t_bar, e_n)


def records_from_result(result: SimResult, scenarios: Sequence[Scenario], mechanism: str,
                        difficulty: float) -> list[RunRecord]:
    out = []
    for k, sc in enumerate(scenarios):
        hit = consensus_time(result.opinions[k], result.times)
        t, color = hit if hit is not None else (None, None)
        out.append(RunRecord(mechanism, difficulty, sc.seed, t, color, sc.majority))
    return out


def consensus_fractions(result: SimResult, scenarios: Sequence[Scenario]) -> np.ndarray:
    """Share of each swarm holding the majority color, shape ``(runs, samples)``."""
    majors = np.array([int(s.majority) for s in scenarios])[:, None, None]
    return (result.opinions == majors).mean(axis=2)


def benchmark_seeds(master_seed: int, difficulty: float, runs: int) -> list[int]:
    label = round(difficulty * 100)
    return [seeding.derive_seed(master_seed, seeding.BENCHMARK, label, k) for k in range(runs)]


def benchmark_scenarios(master_seed: int, difficulty: float, runs: int) -> list[Scenario]:
    """Cell scenarios, Black majority, shared by every mechanism."""
    return [Scenario.from_seed(difficulty, Color.BLACK, s) for s in benchmark_seeds(master_seed, difficulty, runs)]


@dataclass
class BenchmarkResult:
    records: list[RunRecord]
    summary: list[SummaryRow]
    fractions: dict  # (mechanism, difficulty) -> (times, mean majority share)

    def row(self, mechanism: str, difficulty: float) -> SummaryRow:
        for r in self.summary:
            if r.mechanism == mechanism and r.difficulty == difficulty:
                return r
        raise KeyError((mechanism, difficulty))

    def cell(self, mechanism: str, difficulty: float) -> list[RunRecord]:
        return [r for r in self.records if r.mechanism == mechanism and r.difficulty == difficulty]


def run_benchmark(mechanisms: Sequence[Mechanism], difficulties: Iterable[float] = BENCHMARK_DIFFICULTIES,
                  runs_per_cell: int = 100, run_length: float = BENCHMARK_LENGTH, master_seed: int = 0,
                  params: SimParams = SimParams(), jobs: int | None = None) -> BenchmarkResult:
    records, summary, fractions = [], [], {}
    for difficulty in difficulties:
        scenarios = benchmark_scenarios(master_seed, difficulty, runs_per_cell)
        for mech in mechanisms:
            result = simulate_many(scenarios, mech, run_length, params, jobs=jobs)
            cell = records_from_result(result, scenarios, mech.name, difficulty)
            records.extend(cell)
            summary.append(aggregate(cell))
            fractions[(mech.name, difficulty)] = (result.times, consensus_fractions(result, scenarios).mean(axis=0))
    return BenchmarkResult(records, summary, fractions)


# -- statistics --------------------------------------------------------------


def bootstrap_order_confidence(cells: Sequence[Sequence[RunRecord]], statistic: str, increasing: bool,
                               resamples: int = 2000, seed: int = 0) -> float:
    """Share of bootstrap resamples in which the cell statistic is strictly ordered.

    ``statistic`` is ``"t_bar"`` or ``"e_n"``; each cell is resampled
    independently with replacement.
    """
    rng = np.random.default_rng(seed)
    columns = []
    for cell in cells:
        t = np.array([np.nan if r.consensus_time is None else r.consensus_time for r in cell])
        ok = np.array([r.correct for r in cell], dtype=float)
        idx = rng.integers(0, len(cell), size=(resamples, len(cell)))
        if statistic == "t_bar":
            sample = t[idx]
            hit = ~np.isnan(sample)
            total = np.where(hit, sample, 0.0).sum(axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                columns.append(total / hit.sum(axis=1))
        elif statistic == "e_n":
            columns.append(100.0 * ok[idx].mean(axis=1))
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
    values = np.stack(columns, axis=1)
    diffs = np.diff(values, axis=1)
    ordered = np.all(diffs > 0, axis=1) if increasing else np.all(diffs < 0, axis=1)
    return float(ordered.mean())


# -- output ------------------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "NA" if value is None else f"{value:.6f}".rstrip("0").rstrip(".")


def _difficulty(d: float) -> str:
    return f"{d:.2f}"


def write_results(records: Sequence[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in records:
            w.writerow([
                r.mechanism, _difficulty(r.difficulty), r.seed, _fmt(r.consensus_time),
                "NA" if r.consensus_color is None else r.consensus_color.name, str(r.correct).lower(),
            ])


def write_summary(rows: Sequence[SummaryRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([r.mechanism, _difficulty(r.difficulty), r.runs, _fmt(r.t_bar), _fmt(r.e_n)])


def write_fractions(fractions: dict, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("mechanism", "difficulty", "time_s", "majority_fraction"))
        for (mech, d), (times, share) in fractions.items():
            for t, s in zip(times, share):
                w.writerow([mech, _difficulty(d), _fmt(float(t)), _fmt(float(s))])
