"""Decision-making mechanisms: voter model, majority rule and evolved networks.

Each mechanism has a scalar reference function operating on one robot's
:class:`DecisionContext` and a batched class used by the simulator, which
decides for many robots at once from a :class:`BatchContext`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arena import Color
from .comms import MessageQueue, virtual_sensors
from .neural import (
    DEFAULT_HIDDEN,
    DecisionNet,
    PredictionNet,
    decode,
    forward_decision,
    forward_prediction,
    load_genome,
)


@dataclass
class DecisionContext:
    own_opinion: Color
    queue: MessageQueue
    s2: float
    rng: object  # anything with .random()
    s0: float | None = None
    s1: float | None = None

    def __post_init__(self):
        sensed = virtual_sensors(self.queue)
        if self.s0 is None:
            self.s0 = sensed.s0
        if self.s1 is None:
            self.s1 = sensed.s1


@dataclass
class PredictionLog:
    """One robot's (actual, prediction) record per propagation.

    The prediction made at propagation ``i`` is scored against the actuals of
    propagation ``i + 1``; the last prediction has no partner.
    """

    actuals: list = field(default_factory=list)
    predictions: list = field(default_factory=list)

    def record(self, actual, prediction) -> None:
        self.actuals.append(np.asarray(actual, dtype=float))
        self.predictions.append(np.asarray(prediction, dtype=float))

    def __len__(self):
        return len(self.actuals)

    def pairs(self):
        return list(zip(self.predictions[:-1], self.actuals[1:]))


def voter_decide(ctx: DecisionContext) -> Color:
    entries = ctx.queue.entries
    u = ctx.rng.random()
    if not entries:
        return Color(ctx.own_opinion)
    return Color(entries[int(u * len(entries))].opinion)


def majority_decide(ctx: DecisionContext) -> Color:
    votes = [Color(ctx.own_opinion)] + ctx.queue.opinions()
    whites = sum(1 for v in votes if v == Color.WHITE)
    blacks = len(votes) - whites
    if whites > blacks:
        return Color.WHITE
    if blacks > whites:
        return Color.BLACK
    return Color(ctx.own_opinion)


def ann_decide(nets, ctx: DecisionContext, log: PredictionLog | None = None, state=None):
    """Evolved-network decision; returns ``(opinion, predictor_state)``."""
    decision, predictor = nets
    ctx.rng.random()
    x = np.array([ctx.s0, ctx.s1, ctx.s2, float(ctx.own_opinion)])
    new = Color.WHITE if forward_decision(decision, x) >= 0.5 else Color.BLACK
    if predictor is None:
        return new, state
    if state is None:
        state = np.zeros(predictor.hidden)
    p, state = forward_prediction(predictor, np.array([ctx.s0, ctx.s1, ctx.s2, float(new)]), state)
    if log is not None:
        log.record([ctx.s0, ctx.s1, ctx.s2], p)
    return new, state


@dataclass
class BatchContext:
    """Contexts of the ``k`` robots deciding in one tick."""

    run: np.ndarray
    robot: np.ndarray
    own: np.ndarray
    member: np.ndarray  # (k, N) bool
    opinion: np.ndarray  # (k, N)
    arrival: np.ndarray  # (k, N)
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    u: np.ndarray

    def __len__(self):
        return self.run.size


class Mechanism:
    name = "mechanism"

    def bind(self, runs: int, n: int) -> None:
        """Allocate per-robot state before a simulation."""

    def decide(self, ctx: BatchContext) -> np.ndarray:
        raise NotImplementedError

    def subset(self, index) -> "Mechanism":
        return self

    def __repr__(self):
        return f"{type(self).__name__}()"


class VoterModel(Mechanism):
    name = "voter"

    def decide(self, ctx):
        count = ctx.member.sum(axis=1)
        pick = np.minimum((ctx.u * count).astype(np.int64), np.maximum(count - 1, 0))
        keys = np.where(ctx.member, ctx.arrival, np.iinfo(np.int64).max)
        order = np.argsort(keys, axis=1, kind="stable")
        rows = np.arange(len(ctx))
        chosen = ctx.opinion[rows, order[rows, pick]]
        return np.where(count > 0, chosen, ctx.own).astype(np.uint8)


class MajorityRule(Mechanism):
    name = "majority"

    def decide(self, ctx):
        count = ctx.member.sum(axis=1)
        whites = (ctx.member & (ctx.opinion == 1)).sum(axis=1) + (ctx.own == 1)
        blacks = count + 1 - whites
        out = np.where(whites > blacks, 1, np.where(blacks > whites, 0, ctx.own))
        return out.astype(np.uint8)


class EvolvedANN(Mechanism):
    """Decision network per run; optional predictor scored online.

    ``genomes`` is one genome shared by all runs or a ``(runs, L)`` stack.
    """

    name = "ann"

    def __init__(self, genomes, hidden: int = DEFAULT_HIDDEN, record_logs: bool = False,
                 label: str | None = None):
        self.genomes = np.asarray(genomes, dtype=float)
        self.hidden = hidden
        self.record_logs = record_logs
        if label:
            self.name = label
        self.decision, self.predictor = decode(self.genomes, hidden)

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "EvolvedANN":
        genome, hidden = load_genome(path)
        kwargs.setdefault("label", f"ann:{path}")
        return cls(genome, hidden=hidden, **kwargs)

    @property
    def has_predictor(self) -> bool:
        return self.predictor is not None

    def subset(self, index):
        if self.genomes.ndim == 1:
            return self
        return EvolvedANN(self.genomes[index], self.hidden, self.record_logs, self.name)

    def bind(self, runs, n):
        if self.genomes.ndim == 2 and self.genomes.shape[0] != runs:
            raise ValueError(f"{self.genomes.shape[0]} genomes for {runs} runs")
        self.runs, self.n = runs, n
        self.state = np.zeros((runs, n, self.hidden))
        self.last_prediction = np.zeros((runs, n, 3))
        self.has_prediction = np.zeros((runs, n), dtype=bool)
        self.score_sum = np.zeros(runs)
        self.score_pairs = np.zeros(runs, dtype=np.int64)
        self.logs = {} if self.record_logs else None

    def _nets(self, run):
        def pick(net):
            if self.genomes.ndim == 1:
                return net
            return type(net)(**{k: getattr(net, k)[run] for k in net.__dataclass_fields__})
        return pick(self.decision), (pick(self.predictor) if self.predictor is not None else None)

    def decide(self, ctx):
        decision, predictor = self._nets(ctx.run)
        own = ctx.own.astype(float)
        x = np.stack([ctx.s0, ctx.s1, ctx.s2, own], axis=-1)
        new = (forward_decision(decision, x) >= 0.5).astype(np.uint8)
        if predictor is None:
            return new
        actual = np.stack([ctx.s0, ctx.s1, ctx.s2], axis=-1)
        scored = self.has_prediction[ctx.run, ctx.robot]
        if scored.any():
            prev = self.last_prediction[ctx.run[scored], ctx.robot[scored]]
            terms = (1.0 - np.abs(prev - actual[scored])).sum(axis=1)
            np.add.at(self.score_sum, ctx.run[scored], terms)
            np.add.at(self.score_pairs, ctx.run[scored], 1)
        xp = np.stack([ctx.s0, ctx.s1, ctx.s2, new.astype(float)], axis=-1)
        p, h = forward_prediction(predictor, xp, self.state[ctx.run, ctx.robot])
        self.state[ctx.run, ctx.robot] = h
        self.last_prediction[ctx.run, ctx.robot] = p
        self.has_prediction[ctx.run, ctx.robot] = True
        if self.logs is not None:
            for j in range(len(ctx)):
                key = (int(ctx.run[j]), int(ctx.robot[j]))
                self.logs.setdefault(key, PredictionLog()).record(actual[j], p[j])
        return new

    def run_logs(self, run: int) -> list[PredictionLog]:
        return [self.logs.get((run, i), PredictionLog()) for i in range(self.n)]


def make_mechanism(spec: str, hidden: int = DEFAULT_HIDDEN) -> Mechanism:
    """Parse ``voter`` | ``majority`` | ``ann:<genome-file>``."""
    key = spec.strip()
    if key == "voter":
        return VoterModel()
    if key == "majority":
        return MajorityRule()
    if key.startswith("ann:"):
        return EvolvedANN.from_file(key[4:], label=key)
    raise ValueError(f"unknown mechanism {spec!r}; use voter, majority or ann:<genome-file>")


__all__ = [
    "DecisionContext",
    "BatchContext",
    "PredictionLog",
    "Mechanism",
    "VoterModel",
    "MajorityRule",
    "EvolvedANN",
    "voter_decide",
    "majority_decide",
    "ann_decide",
    "make_mechanism",
    "DecisionNet",
    "PredictionNet",
]
