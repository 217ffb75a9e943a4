"""Generational evolution of decision (and prediction) networks.

Fitness-proportionate parent selection, one elite, Gaussian mutation and no
crossover.  Every genome is scored on six scenarios, three patterns and their
inverses, and keeps the worst of the six.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import seeding
from .arena import Color, generate_pattern, invert
from .mechanisms import EvolvedANN, PredictionLog
from .neural import DEFAULT_HIDDEN, MUTATION_SIGMA, WEIGHT_BOUND, mutate, random_genome, save_genome
from .simulation import Scenario, SimParams, SimResult, simulate_many

FITNESS_KINDS = ("TS", "MS", "HB")
EVOLUTION_DIFFICULTIES = (0.25, 0.52)
SELECTION_EPS = 1e-6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvoConfig:
    population_size: int = 50
    max_generations: int | None = None  # None: 300 under MS, 600 otherwise
    evaluations_per_genome: int = 6
    evaluation_length: float = 200.0
    elitism: int = 1
    mutation_rate: float = 0.2
    mutation_sigma: float = MUTATION_SIGMA
    weight_bound: float = WEIGHT_BOUND
    fitness_kind: str = "TS"
    kappa: float = 2.0
    difficulty: float = 0.25
    sim: SimParams = field(default_factory=SimParams)
    sensors: int = 3
    hidden: int = DEFAULT_HIDDEN
    jobs: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.fitness_kind not in FITNESS_KINDS:
            raise ConfigError(f"fitness_kind must be one of {FITNESS_KINDS}, got {self.fitness_kind!r}")
        if self.kappa <= 1:
            raise ConfigError(f"kappa must exceed 1, got {self.kappa}")
        if self.population_size < 1:
            raise ConfigError("population_size must be positive")
        if self.elitism != 1:
            raise ConfigError("only elitism 1 is supported")
        if self.evaluations_per_genome < 2 or self.evaluations_per_genome % 2:
            raise ConfigError("evaluations_per_genome must be a positive even number (pattern/inverse pairs)")
        if self.max_generations is not None and self.max_generations < 1:
            raise ConfigError("max_generations must be positive")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if self.evaluation_length <= 0:
            raise ConfigError("evaluation_length must be positive")
        if self.hidden < 1:
            raise ConfigError("hidden must be positive")

    @property
    def generations(self) -> int:
        if self.max_generations is not None:
            return self.max_generations
        return 300 if self.fitness_kind == "MS" else 600

    @property
    def with_predictor(self) -> bool:
        return self.fitness_kind != "TS"


# -- fitness functions -------------------------------------------------------


def fitness_ts(final_opinions, majority, n: int | None = None) -> float:
    """Share of the swarm holding the majority color at the last sample."""
    final_opinions = np.asarray(final_opinions, dtype=np.int64)
    n = final_opinions.size if n is None else n
    if final_opinions.size != n:
        raise ValueError(f"expected {n} opinions, got {final_opinions.size}")
    return float(np.count_nonzero(final_opinions == int(majority)) / n)


def fitness_ms(logs: Sequence[PredictionLog], sensors: int = 3) -> float:
    """Mean prediction accuracy over every scored pair of every robot.

    Returns 0 with a warning when no prediction could be scored.
    """
    total, pairs = 0.0, 0
    for log in logs:
        for predicted, actual in log.pairs():
            total += float(np.sum(1.0 - np.abs(np.asarray(predicted) - np.asarray(actual))))
            pairs += 1
    if pairs == 0:
        warnings.warn("no scored predictions: degenerate run, F_MS set to 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return total / (sensors * pairs)


def fitness_hb(f_ts, f_ms, kappa: float = 2.0):
    if kappa <= 1:
        raise ValueError("kappa must exceed 1")
    return ((1.0 - f_ts) / kappa + f_ts) * f_ms


# -- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationSet:
    scenarios: tuple[Scenario, ...]

    def __post_init__(self):
        majors = [s.majority for s in self.scenarios]
        if majors.count(Color.BLACK) != majors.count(Color.WHITE):
            raise ValueError("evaluation set must balance Black and White majorities")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)


def make_evaluation_set(seed: int, difficulty: float, evaluations: int = 6) -> EvaluationSet:
    """Patterns and their inverses; both members of a pair share pose/opinion seeds."""
    scenarios = []
    for k in range(evaluations // 2):
        scen_seed = seeding.derive_seed(seed, k)
        grid = generate_pattern(difficulty, Color.BLACK, seeding.derive_seed(scen_seed, seeding.PATTERN))
        scenarios.append(Scenario(grid, scen_seed))
        scenarios.append(Scenario(invert(grid), scen_seed))
    return EvaluationSet(tuple(scenarios))


@dataclass(frozen=True)
class FitnessRecord:
    values: tuple[float, ...]
    f_ts: tuple[float, ...] | None = None
    f_ms: tuple[float, ...] | None = None

    @property
    def aggregate(self) -> float:
        return min(self.values)


def _records(result: SimResult, scenarios: Sequence[Scenario], config: EvoConfig,
             per_genome: int) -> list[FitnessRecord]:
    ts = np.array([
        fitness_ts(result.final_opinions[k], sc.majority, config.sim.n_robots)
        for k, sc in enumerate(scenarios)
    ])
    ms = result.prediction_fitness(config.sensors) if config.with_predictor else None
    if config.fitness_kind == "TS":
        values = ts
    elif config.fitness_kind == "MS":
        values = ms
    else:
        values = fitness_hb(ts, ms, config.kappa)
    records = []
    for g in range(len(scenarios) // per_genome):
        part = slice(g * per_genome, (g + 1) * per_genome)
        records.append(FitnessRecord(
            values=tuple(float(v) for v in values[part]),
            f_ts=tuple(float(v) for v in ts[part]),
            f_ms=tuple(float(v) for v in ms[part]) if ms is not None else None,
        ))
    return records


def evaluate_population(genomes, eval_set: EvaluationSet, config: EvoConfig) -> list[FitnessRecord]:
    """Score each genome on every scenario of ``eval_set`` (one batched simulation)."""
    genomes = np.atleast_2d(np.asarray(genomes, dtype=float))
    per = len(eval_set)
    scenarios = [sc for _ in range(len(genomes)) for sc in eval_set]
    stack = np.repeat(genomes, per, axis=0)
    mechanism = EvolvedANN(stack, hidden=config.hidden)
    result = simulate_many(scenarios, mechanism, config.evaluation_length, config.sim, jobs=config.jobs)
    return _records(result, scenarios, config, per)


def evaluate_genome(genome, eval_set: EvaluationSet, config: EvoConfig) -> FitnessRecord:
    return evaluate_population(np.asarray(genome, dtype=float)[None, :], eval_set, config)[0]


# -- variation and selection -------------------------------------------------


def select_parent(fitnesses, rng: np.random.Generator) -> int:
    """Roulette wheel over ``fitness + eps``."""
    weights = np.asarray(fitnesses, dtype=float) + SELECTION_EPS
    if weights.size == 0:
        raise ValueError("empty population")
    if np.any(weights < 0):
        raise ValueError("fitness must be non-negative")
    cumulative = np.cumsum(weights)
    pick = rng.random() * cumulative[-1]
    return int(min(np.searchsorted(cumulative, pick, side="right"), weights.size - 1))


def elite_index(fitnesses) -> int:
    return int(np.argmax(np.asarray(fitnesses, dtype=float)))


def next_generation(population, fitnesses, select_rng: np.random.Generator,
                    mutate_rng: np.random.Generator, config: EvoConfig):
    """Elite copied at slot 0, the rest mutated roulette picks.

    Returns ``(population, parents)`` where ``parents[k]`` is the index of the
    old genome slot ``k`` descends from.
    """
    population = np.asarray(population, dtype=float)
    elite = elite_index(fitnesses)
    children = [population[elite].copy()]
    parents = [elite]
    for _ in range(config.population_size - 1):
        p = select_parent(fitnesses, select_rng)
        parents.append(p)
        children.append(mutate(population[p], config.mutation_rate, mutate_rng,
                               config.mutation_sigma, config.weight_bound))
    return np.stack(children), np.array(parents)


# -- driver ------------------------------------------------------------------


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_genome_id: int


@dataclass
class EvolutionResult:
    history: list[GenerationStats]
    best_genome: np.ndarray
    best_fitness: float
    best_per_generation: list[np.ndarray]

    @property
    def best_trace(self) -> np.ndarray:
        return np.array([h.best_fitness for h in self.history])


HISTORY_COLUMNS = ("generation", "best_fitness", "mean_fitness", "best_genome_id")


def run_evolution(config: EvoConfig, master_seed: int, out_dir: str | Path | None = None,
                  progress: Callable[[GenerationStats], None] | None = None) -> EvolutionResult:
    """Evolve for ``config.generations`` generations.

    Scenarios are redrawn each generation and shared by all its genomes.  The
    elite keeps its recorded fitness instead of being re-evaluated.
    """
    if config.difficulty not in EVOLUTION_DIFFICULTIES:
        warnings.warn(f"difficulty {config.difficulty} is outside the evolution set "
                      f"{EVOLUTION_DIFFICULTIES}", RuntimeWarning, stacklevel=2)
    size = config.population_size
    init_rng = seeding.generator(master_seed, seeding.EVOLUTION_INIT)
    population = random_genome(init_rng, config.with_predictor, config.hidden, size=size)
    ids = np.arange(size)
    next_id = size
    carried: float | None = None

    history, best_per_gen = [], []
    for gen in range(config.generations):
        eval_set = make_evaluation_set(
            seeding.derive_seed(master_seed, seeding.EVOLUTION_SCENARIOS, gen),
            config.difficulty, config.evaluations_per_genome,
        )
        start = 0 if carried is None else 1
        records = evaluate_population(population[start:], eval_set, config)
        fitness = np.array([r.aggregate for r in records])
        if carried is not None:
            fitness = np.r_[carried, fitness]

        elite = elite_index(fitness)
        stats = GenerationStats(gen, float(fitness[elite]), float(fitness.mean()), int(ids[elite]))
        history.append(stats)
        best_per_gen.append(population[elite].copy())
        if progress is not None:
            progress(stats)

        if gen + 1 < config.generations:
            population, parents = next_generation(
                population, fitness,
                seeding.generator(master_seed, seeding.EVOLUTION_SELECT, gen),
                seeding.generator(master_seed, seeding.EVOLUTION_MUTATE, gen),
                config,
            )
            carried = float(fitness[elite])
            ids = np.r_[ids[elite], np.arange(next_id, next_id + size - 1)]
            next_id += size - 1

    result = EvolutionResult(history, best_per_gen[-1], history[-1].best_fitness, best_per_gen)
    if out_dir is not None:
        write_evolution(result, out_dir, config.hidden)
    return result


def write_history(history: Sequence[GenerationStats], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for h in history:
            writer.writerow([h.generation, repr(h.best_fitness), repr(h.mean_fitness), h.best_genome_id])


def write_evolution(result: EvolutionResult, out_dir: str | Path, hidden: int = DEFAULT_HIDDEN) -> None:
    out = Path(out_dir)
    archive = out / "genomes"
    archive.mkdir(parents=True, exist_ok=True)
    write_history(result.history, out / "evolution-history.csv")
    for h, genome in zip(result.history, result.best_per_generation):
        save_genome(archive / f"gen-{h.generation:04d}.genome", genome, hidden)
    save_genome(out / "best.genome", result.best_genome, hidden)


def with_overrides(config: EvoConfig, **changes) -> EvoConfig:
    return replace(config, **changes)
