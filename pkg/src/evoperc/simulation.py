"""Batched simulation of complete collective-perception runs."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import seeding
from .arena import Color, TileGrid, generate_pattern
from .comms import COMM_RANGE, Inbox
from .decision import DecisionParams, DecisionState, step_decision
from .mechanisms import EvolvedANN, Mechanism
from .motion import OMEGA_ROT, ROTATION_MAX, STRAIGHT_MEAN, MotionState, step_motion
from .world import DT, period_ticks, refresh_sensors, spawn_swarm, step

TRACE_PERIOD = 1.0


@dataclass(frozen=True)
class SimParams:
    dt: float = DT
    n_robots: int = 20
    omega_rot: float = OMEGA_ROT
    straight_mean: float = STRAIGHT_MEAN
    rotation_max: float = ROTATION_MAX
    comm_range: float = COMM_RANGE
    decision: DecisionParams = field(default_factory=DecisionParams)


@dataclass(frozen=True)
class Scenario:
    """Everything that fixes a run apart from the mechanism."""

    grid: TileGrid
    seed: int

    @property
    def majority(self) -> Color:
        return self.grid.majority

    @classmethod
    def from_seed(cls, difficulty: float, majority: Color, seed: int) -> "Scenario":
        pattern_seed = seeding.derive_seed(seed, seeding.PATTERN)
        return cls(generate_pattern(difficulty, majority, pattern_seed), int(seed))


def initial_opinions(seed: int, n: int) -> np.ndarray:
    """Balanced split, seeded shuffle; odd swarms get the extra robot white."""
    base = np.array([0] * (n // 2) + [1] * (n - n // 2), dtype=np.uint8)
    return seeding.generator(seed, seeding.OPINIONS).permutation(base)


@dataclass
class SimResult:
    times: np.ndarray  # (S,)
    opinions: np.ndarray  # (runs, S, N)
    propagations: np.ndarray  # (runs, N)
    score_sum: np.ndarray | None = None
    score_pairs: np.ndarray | None = None
    trajectory: np.ndarray | None = None  # (ticks + 1, runs, N, 4): x, y, heading, opinion

    @property
    def final_opinions(self) -> np.ndarray:
        return self.opinions[:, -1, :]

    def prediction_fitness(self, sensors: int = 3) -> np.ndarray:
        if self.score_sum is None:
            raise ValueError("run used no prediction network")
        pairs = self.score_pairs
        return np.where(pairs > 0, self.score_sum / (sensors * np.maximum(pairs, 1)), 0.0)

    @staticmethod
    def concat(parts: Sequence["SimResult"]) -> "SimResult":
        def cat(name, axis):
            values = [getattr(p, name) for p in parts]
            if any(v is None for v in values):
                return None
            return np.concatenate(values, axis=axis)

        return SimResult(
            times=parts[0].times,
            opinions=cat("opinions", 0),
            propagations=cat("propagations", 0),
            score_sum=cat("score_sum", 0),
            score_pairs=cat("score_pairs", 0),
            trajectory=cat("trajectory", 1),
        )


def simulate(
    scenarios: Sequence[Scenario],
    mechanism: Mechanism,
    duration: float,
    params: SimParams = SimParams(),
    record_trajectory: bool = False,
) -> SimResult:
    """Run every scenario for ``duration`` seconds with one mechanism."""
    dt, n = params.dt, params.n_robots
    seeds = [s.seed for s in scenarios]
    runs = len(seeds)
    ticks = round(duration / dt)
    if abs(ticks * dt - duration) > 1e-9:
        raise ValueError(f"duration {duration} s is not a multiple of dt={dt} s")
    sample_ticks = period_ticks(TRACE_PERIOD, dt)

    world = spawn_swarm(
        [s.grid for s in scenarios], n, [seeding.derive_seed(s, seeding.PLACEMENT) for s in seeds], dt=dt
    )
    motion_stream = seeding.Streams.for_runs(seeds, n, seeding.MOTION)
    decision_stream = seeding.Streams.for_runs(seeds, n, seeding.DECISION)
    mech_stream = seeding.Streams.for_runs(seeds, n, seeding.MECHANISM)
    motion = MotionState.initial(motion_stream, params.straight_mean)
    opinions0 = np.stack([initial_opinions(s, n) for s in seeds])
    decision = DecisionState.initial(opinions0, decision_stream, params.decision.explore_mean)
    inbox = Inbox.empty(runs, n)
    mechanism.bind(runs, n)

    trace = []
    trajectory = [] if record_trajectory else None

    def deliver(senders, receive_open):
        if receive_open.any():
            inbox.deliver(world.x, world.y, senders, receive_open, decision.opinion,
                          world.tick, params.comm_range)

    for tick in range(ticks):
        refresh_sensors(world)
        if tick % sample_ticks == 0:
            trace.append(decision.opinion.copy())
        if trajectory is not None:
            trajectory.append(_pose_snapshot(world, decision))
        world.v, world.omega = step_motion(
            motion, world.prox, motion_stream, dt, params.omega_rot,
            params.straight_mean, params.rotation_max,
        )
        step_decision(decision, world.ground_held, inbox, mechanism, decision_stream,
                      mech_stream, dt, params.decision, deliver)
        step(world)
    trace.append(decision.opinion.copy())
    if trajectory is not None:
        trajectory.append(_pose_snapshot(world, decision))

    samples = len(trace)
    result = SimResult(
        times=np.arange(samples - 1, dtype=float) * TRACE_PERIOD,
        opinions=np.stack(trace, axis=1),
        propagations=decision.propagations.copy(),
        trajectory=np.stack(trajectory) if trajectory is not None else None,
    )
    result.times = np.append(result.times, duration)
    if isinstance(mechanism, EvolvedANN) and mechanism.has_predictor:
        result.score_sum = mechanism.score_sum.copy()
        result.score_pairs = mechanism.score_pairs.copy()
    return result


def _pose_snapshot(world, decision):
    return np.stack([world.x, world.y, world.heading, decision.opinion.astype(float)], axis=-1)


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("EVOPERC_JOBS", "1") or 1)
    return max(1, int(jobs))


def _simulate_chunk(args):
    scenarios, mechanism, duration, params = args
    return simulate(scenarios, mechanism, duration, params)


def simulate_many(
    scenarios: Sequence[Scenario],
    mechanism: Mechanism,
    duration: float,
    params: SimParams = SimParams(),
    jobs: int | None = None,
    chunk_size: int = 256,
) -> SimResult:
    """Split scenarios into chunks and run them serially or across processes.

    Results do not depend on chunking or on the number of processes.
    """
    jobs = resolve_jobs(jobs)
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("no scenarios to simulate")
    per_chunk = max(1, min(chunk_size, -(-len(scenarios) // jobs)))
    bounds = [(i, min(i + per_chunk, len(scenarios))) for i in range(0, len(scenarios), per_chunk)]
    tasks = [
        (scenarios[a:b], mechanism.subset(np.arange(a, b)), duration, params) for a, b in bounds
    ]
    if jobs == 1 or len(tasks) == 1:
        parts = [_simulate_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_simulate_chunk, tasks))
    return SimResult.concat(parts)
