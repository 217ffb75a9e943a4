"""Seed fan-out and counter-based per-robot random streams.

A master seed is split into child seeds with :class:`numpy.random.SeedSequence`
spawn keys, so every (run, purpose) pair gets an isolated stream and adding a
new consumer never shifts an existing one.  Per-robot draws inside the batched
simulator use a splitmix64 counter generator: draw ``k`` of a robot is a pure
function of ``(key, k)``, which keeps a run's randomness independent of the
batch it happens to be simulated in.
"""

from __future__ import annotations

import numpy as np

# Purpose tags for spawn keys.
PATTERN = 1
PLACEMENT = 2
OPINIONS = 3
MOTION = 10
DECISION = 11
MECHANISM = 12
EVOLUTION_INIT = 20
EVOLUTION_SELECT = 21
EVOLUTION_MUTATE = 22
EVOLUTION_SCENARIOS = 23
BENCHMARK = 30
VALIDATION = 31

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def derive_seed(master_seed: int, *path: int) -> int:
    """64-bit child seed for ``path`` under ``master_seed``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])


def generator(master_seed: int, *path: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(seq)


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniform(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) value number ``counters`` of each stream ``keys``."""
    with np.errstate(over="ignore"):
        state = keys + (counters + np.uint64(1)) * _GOLDEN
    bits = mix64(state) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


class Streams:
    """One counter stream per robot for a single purpose, shape ``(runs, robots)``."""

    def __init__(self, keys: np.ndarray):
        self.keys = np.asarray(keys, dtype=np.uint64)
        self.counters = np.zeros(self.keys.shape, dtype=np.uint64)

    @classmethod
    def for_runs(cls, run_seeds, n_robots: int, purpose: int) -> "Streams":
        run_keys = np.array([derive_seed(s, purpose) for s in run_seeds], dtype=np.uint64)
        robot_salt = mix64(np.arange(1, n_robots + 1, dtype=np.uint64) * _GOLDEN)
        return cls(mix64(run_keys[:, None] ^ robot_salt[None, :]))

    @property
    def shape(self):
        return self.keys.shape

    def draw(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Next uniform of each stream selected by ``mask`` (zeros elsewhere).

        Counters advance only where ``mask`` is set.
        """
        if mask is None:
            values = counter_uniform(self.keys, self.counters)
            self.counters += np.uint64(1)
            return values
        values = np.zeros(self.keys.shape)
        where = np.nonzero(mask)
        if where[0].size:
            values[where] = counter_uniform(self.keys[where], self.counters[where])
            self.counters[where] += np.uint64(1)
        return values

    def subset(self, index) -> "Streams":
        out = Streams(self.keys[index])
        out.counters = self.counters[index].copy()
        return out


class _ScalarStream:
    """Adapter giving one robot's counter stream a ``random()`` method."""

    def __init__(self, streams: Streams, run: int, robot: int):
        self._streams = streams
        self._at = (run, robot)

    def random(self) -> float:
        key = self._streams.keys[self._at]
        value = counter_uniform(np.array([key]), np.array([self._streams.counters[self._at]]))[0]
        self._streams.counters[self._at] += np.uint64(1)
        return float(value)


def robot_stream(streams: Streams, run: int, robot: int) -> _ScalarStream:
    return _ScalarStream(streams, run, robot)
