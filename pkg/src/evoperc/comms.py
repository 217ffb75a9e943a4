"""Local opinion broadcast, bounded unique-sender queues and virtual sensors.

:class:`MessageQueue` is the plain reference structure.  The simulator uses
:class:`Inbox`, a batched membership form of the same rules: a sender is
admitted if it is new and the queue has room (simultaneous arrivals admitted
in ascending sender id), and a known sender's stored opinion is overwritten.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .arena import Color

QUEUE_CAPACITY = 4
COMM_RANGE = 0.70


class OpinionMessage(NamedTuple):
    sender_id: int
    opinion: Color


@dataclass
class MessageQueue:
    entries: list[OpinionMessage] = field(default_factory=list)
    capacity: int = QUEUE_CAPACITY

    def __len__(self):
        return len(self.entries)

    def opinions(self) -> list[Color]:
        return [m.opinion for m in self.entries]


class VirtualSensors(NamedTuple):
    s0: float
    s1: float


def enqueue(queue: MessageQueue, msg: OpinionMessage) -> MessageQueue:
    """Freshest opinion wins for known senders; new senders dropped when full."""
    entries = list(queue.entries)
    for pos, old in enumerate(entries):
        if old.sender_id == msg.sender_id:
            entries[pos] = OpinionMessage(msg.sender_id, Color(msg.opinion))
            return MessageQueue(entries, queue.capacity)
    if len(entries) < queue.capacity:
        entries.append(OpinionMessage(msg.sender_id, Color(msg.opinion)))
    return MessageQueue(entries, queue.capacity)


def virtual_sensors(queue: MessageQueue) -> VirtualSensors:
    n = len(queue.entries)
    if n == 0:
        return VirtualSensors(0.0, 0.0)
    whites = sum(1 for m in queue.entries if m.opinion == Color.WHITE)
    return VirtualSensors(whites / n, n / queue.capacity)


def broadcast(world, sender_id: int, receive_open: np.ndarray, run: int = 0,
              comm_range: float = COMM_RANGE) -> list[int]:
    """Receiver ids (ascending) reached by one broadcast in ``run``."""
    dist = np.hypot(world.x[run] - world.x[run, sender_id], world.y[run] - world.y[run, sender_id])
    reach = (dist <= comm_range) & np.asarray(receive_open, dtype=bool)
    reach[sender_id] = False
    return [int(i) for i in np.flatnonzero(reach)]


@dataclass
class Inbox:
    """Batched queues: ``member[b, receiver, sender]`` plus stored opinions."""

    member: np.ndarray
    opinion: np.ndarray
    arrival: np.ndarray
    count: np.ndarray
    capacity: int = QUEUE_CAPACITY

    @classmethod
    def empty(cls, runs: int, n: int, capacity: int = QUEUE_CAPACITY) -> "Inbox":
        return cls(
            member=np.zeros((runs, n, n), dtype=bool),
            opinion=np.zeros((runs, n, n), dtype=np.uint8),
            arrival=np.zeros((runs, n, n), dtype=np.int64),
            count=np.zeros((runs, n), dtype=np.int64),
            capacity=capacity,
        )

    def clear(self, mask: np.ndarray) -> None:
        b, i = np.nonzero(mask)
        if b.size:
            self.member[b, i] = False
            self.count[b, i] = 0

    def deliver(self, x: np.ndarray, y: np.ndarray, senders: np.ndarray, receive_open: np.ndarray,
                opinions: np.ndarray, tick: int, comm_range: float = COMM_RANGE) -> None:
        """Apply one tick of broadcasts from the ``senders`` mask."""
        n = senders.shape[1]
        sb, sj = np.nonzero(senders)
        if sb.size == 0:
            return
        b = np.repeat(sb, n)
        j = np.repeat(sj, n)
        i = np.tile(np.arange(n), sb.size)
        dx = x[b, i] - x[b, j]
        dy = y[b, i] - y[b, j]
        reach = (dx * dx + dy * dy <= comm_range**2) & receive_open[b, i] & (i != j)
        if not reach.any():
            return
        b, i, j = b[reach], i[reach], j[reach]
        # process per receiver in ascending sender id
        order = np.lexsort((j, i, b))
        b, i, j = b[order], i[order], j[order]
        fresh = ~self.member[b, i, j]
        group = b * n + i
        starts = np.r_[True, group[1:] != group[:-1]]
        csum = np.cumsum(fresh)
        first = np.maximum.accumulate(np.where(starts, np.arange(b.size), 0))
        rank = csum - csum[first] + fresh[first]
        admit = fresh & (self.count[b, i] + rank <= self.capacity)
        ab, ai, aj = b[admit], i[admit], j[admit]
        self.member[ab, ai, aj] = True
        self.arrival[ab, ai, aj] = tick * n + aj
        np.add.at(self.count, (ab, ai), 1)
        keep = self.member[b, i, j]
        self.opinion[b[keep], i[keep], j[keep]] = opinions[b[keep], j[keep]]

    def sensors_at(self, run: np.ndarray, robot: np.ndarray):
        """``(s0, s1)`` for the listed robots."""
        member = self.member[run, robot]
        count = self.count[run, robot]
        whites = (member & (self.opinion[run, robot] == 1)).sum(axis=1)
        s0 = np.where(count > 0, whites / np.maximum(count, 1), 0.0)
        return s0, count / self.capacity

    def sensors(self):
        """``(s0, s1)`` arrays of shape ``(runs, robots)``."""
        whites = (self.member & (self.opinion == 1)).sum(axis=2)
        s0 = np.where(self.count > 0, whites / np.maximum(self.count, 1), 0.0)
        return s0, self.count / self.capacity

    def queue(self, run: int, robot: int) -> MessageQueue:
        """The ordered reference queue for one robot."""
        senders = np.flatnonzero(self.member[run, robot])
        order = senders[np.argsort(self.arrival[run, robot, senders], kind="stable")]
        entries = [OpinionMessage(int(s), Color(int(self.opinion[run, robot, s]))) for s in order]
        return MessageQueue(entries, self.capacity)
