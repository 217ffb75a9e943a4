"""Experiment configuration in a versioned ``key = value`` text format.

The file starts with the line ``# evoperc-config v1``.  Other lines starting
with ``#`` and blank lines are ignored.  Lists are comma separated; ``auto``
stands for a value chosen at run time (generation count from the fitness
kind, worker count from ``EVOPERC_JOBS``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .arena import DifficultyError, minority_cells
from .comms import COMM_RANGE
from .decision import (
    BROADCAST_PERIOD,
    EXPLORE_MEAN,
    LISTEN_MODES,
    RECEIVE_WINDOW,
    T_SEND,
    DecisionParams,
)
from .evolution import FITNESS_KINDS, ConfigError, EvoConfig
from .metrics import BENCHMARK_DIFFICULTIES, BENCHMARK_LENGTH
from .motion import OMEGA_ROT, ROTATION_MAX, STRAIGHT_MEAN
from .neural import DEFAULT_HIDDEN, MUTATION_SIGMA, WEIGHT_BOUND
from .simulation import SimParams
from .world import DT

HEADER = "# evoperc-config v1"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    # simulation
    dt: float = DT
    n_robots: int = 20
    omega_rot: float = OMEGA_ROT
    straight_mean: float = STRAIGHT_MEAN
    rotation_max: float = ROTATION_MAX
    comm_range: float = COMM_RANGE
    explore_mean: float = EXPLORE_MEAN
    t_send: float = T_SEND
    receive_window: float = RECEIVE_WINDOW
    broadcast_period: float = BROADCAST_PERIOD
    listen: str = DecisionParams.listen
    # networks and evolution
    hidden: int = DEFAULT_HIDDEN
    fitness: str = "TS"
    population_size: int = 50
    max_generations: int | None = None
    evaluations_per_genome: int = 6
    evaluation_length: float = 200.0
    elitism: int = 1
    mutation_rate: float = 0.2
    mutation_sigma: float = MUTATION_SIGMA
    weight_bound: float = WEIGHT_BOUND
    kappa: float = 2.0
    evolution_difficulty: float = 0.25
    # benchmarks
    mechanisms: tuple[str, ...] = ("voter", "majority")
    benchmark_difficulties: tuple[float, ...] = BENCHMARK_DIFFICULTIES
    benchmark_runs: int = 1000
    benchmark_length: float = BENCHMARK_LENGTH
    # replay and output
    replay_difficulty: float = 0.25
    replay_length: float = BENCHMARK_LENGTH
    out_dir: str = "results"
    jobs: int | None = None
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = ("dt", "omega_rot", "straight_mean", "rotation_max", "comm_range", "explore_mean",
                    "receive_window", "broadcast_period", "evaluation_length", "benchmark_length",
                    "replay_length", "mutation_sigma", "weight_bound")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.t_send < 0:
            raise ConfigError("t_send must be non-negative")
        if self.n_robots < 1 or self.benchmark_runs < 1 or self.hidden < 1:
            raise ConfigError("n_robots, benchmark_runs and hidden must be positive")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError("jobs must be positive or auto")
        if self.listen not in LISTEN_MODES:
            raise ConfigError(f"listen must be one of {LISTEN_MODES}")
        for d in (*self.benchmark_difficulties, self.evolution_difficulty, self.replay_difficulty):
            try:
                minority_cells(d)
            except DifficultyError as exc:
                raise ConfigError(str(exc)) from exc
        for spec in self.mechanisms:
            if spec not in ("voter", "majority") and not spec.startswith("ann:"):
                raise ConfigError(f"unknown mechanism {spec!r}")
        if self.fitness not in FITNESS_KINDS:
            raise ConfigError(f"fitness must be one of {FITNESS_KINDS}")
        for name in ("evaluation_length", "benchmark_length", "replay_length"):
            ticks = getattr(self, name) / self.dt
            if abs(ticks - round(ticks)) > 1e-6:
                raise ConfigError(f"{name} must be a multiple of dt")
        self.evo_config()  # evolution-specific checks

    def sim_params(self) -> SimParams:
        return SimParams(
            dt=self.dt, n_robots=self.n_robots, omega_rot=self.omega_rot,
            straight_mean=self.straight_mean, rotation_max=self.rotation_max,
            comm_range=self.comm_range,
            decision=DecisionParams(self.explore_mean, self.t_send, self.receive_window,
                                    self.broadcast_period, self.listen),
        )

    def evo_config(self) -> EvoConfig:
        return EvoConfig(
            population_size=self.population_size, max_generations=self.max_generations,
            evaluations_per_genome=self.evaluations_per_genome,
            evaluation_length=self.evaluation_length, elitism=self.elitism,
            mutation_rate=self.mutation_rate, mutation_sigma=self.mutation_sigma,
            weight_bound=self.weight_bound, fitness_kind=self.fitness, kappa=self.kappa,
            difficulty=self.evolution_difficulty, sim=self.sim_params(), hidden=self.hidden,
            jobs=self.jobs,
        )

    def with_values(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


_KEYS = [f for f in fields(ExperimentConfig) if f.name != "extras"]


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            kind = type(default[0]) if default else str
            return tuple(kind(s) for s in items)
        if name in ("max_generations", "jobs"):
            return None if raw == "auto" else int(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def dumps(config: ExperimentConfig) -> str:
    lines = [HEADER]
    lines += [f"{f.name} = {_format(getattr(config, f.name))}" for f in _KEYS]
    return "\n".join(lines) + "\n"


def loads(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ConfigError(f"config must start with {HEADER!r}")
    known = {f.name: getattr(base, f.name) for f in _KEYS}
    values = {}
    for number, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        values[key] = _parse(key, raw, known[key])
    return replace(base, **values)


def load(path: str | Path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def dump(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(dumps(config))
