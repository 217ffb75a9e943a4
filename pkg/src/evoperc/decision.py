"""Exploration/dissemination PFSM with quality-modulated dissemination."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .comms import Inbox
from .mechanisms import BatchContext, Mechanism
from .seeding import Streams

EXPLORATION, SEND, RECEIVE = 0, 1, 2
PHASE_NAMES = ("Exploration", "DisseminationSend", "DisseminationReceive")

EXPLORE_MEAN = 10.0
EXPLORE_MIN = 0.2
T_SEND = 10.0
RECEIVE_WINDOW = 3.0
BROADCAST_PERIOD = 1.0
# "cycle": listen whenever not sending, queue cleared after each decision.
# "window": listen only during the receive window, queue cleared as it opens.
LISTEN_MODES = ("cycle", "window")
_EPS = 1e-9


def quality_estimate(match_time, elapsed):
    """Fraction of exploration time spent on the opinion's color."""
    match_time = np.asarray(match_time, dtype=float)
    elapsed = np.asarray(elapsed, dtype=float)
    if np.any(elapsed <= 0):
        raise ValueError("exploration time must be positive")
    return np.clip(match_time / elapsed, 0.0, 1.0)


def sample_explore_duration(u, mean: float = EXPLORE_MEAN):
    return np.maximum(EXPLORE_MIN, -mean * np.log1p(-np.asarray(u, dtype=float)))


def sample_send_duration(u, mean):
    """Exponential with the given mean; a zero mean is the point mass at 0."""
    mean = np.asarray(mean, dtype=float)
    return np.where(mean > 0, -mean * np.log1p(-np.asarray(u, dtype=float)), 0.0)


@dataclass
class DecisionParams:
    explore_mean: float = EXPLORE_MEAN
    t_send: float = T_SEND
    receive_window: float = RECEIVE_WINDOW
    broadcast_period: float = BROADCAST_PERIOD
    listen: str = "cycle"

    def __post_init__(self):
        if self.listen not in LISTEN_MODES:
            raise ValueError(f"listen must be one of {LISTEN_MODES}")


@dataclass
class DecisionState:
    phase: np.ndarray
    opinion: np.ndarray
    timer: np.ndarray
    explore_elapsed: np.ndarray
    explore_match: np.ndarray
    quality: np.ndarray
    countdown: np.ndarray
    propagations: np.ndarray

    @classmethod
    def initial(cls, opinions: np.ndarray, stream: Streams,
                explore_mean: float = EXPLORE_MEAN) -> "DecisionState":
        opinions = np.asarray(opinions, dtype=np.uint8)
        shape = opinions.shape
        return cls(
            phase=np.full(shape, EXPLORATION, dtype=np.int8),
            opinion=opinions.copy(),
            timer=sample_explore_duration(stream.draw(), explore_mean),
            explore_elapsed=np.zeros(shape),
            explore_match=np.zeros(shape),
            quality=np.zeros(shape),
            countdown=np.zeros(shape),
            propagations=np.zeros(shape, dtype=np.int64),
        )


def step_decision(
    state: DecisionState,
    ground: np.ndarray,
    inbox: Inbox,
    mechanism: Mechanism,
    decision_stream: Streams,
    mechanism_stream: Streams,
    dt: float,
    params: DecisionParams = DecisionParams(),
    deliver: Callable[[np.ndarray, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Advance every robot's PFSM by one tick in place.

    ``deliver(senders, receive_open)`` is called once per tick with the
    robots broadcasting this tick and the robots whose window is open.
    Returns the mask of robots that invoked the mechanism.
    """
    phase = state.phase.copy()
    exploring = phase == EXPLORATION
    sending = phase == SEND
    receiving = phase == RECEIVE

    state.explore_elapsed += np.where(exploring, dt, 0.0)
    state.explore_match += np.where(exploring & (ground == state.opinion), dt, 0.0)

    senders = sending & (state.countdown <= _EPS)
    state.countdown += np.where(senders, params.broadcast_period, 0.0) - np.where(sending, dt, 0.0)
    state.timer -= dt

    if deliver is not None:
        deliver(senders, receiving if params.listen == "window" else phase != SEND)

    explore_done = exploring & (state.timer <= _EPS)
    if explore_done.any():
        done = np.nonzero(explore_done)
        state.quality[done] = quality_estimate(state.explore_match[done], state.explore_elapsed[done])
        u_send = decision_stream.draw(explore_done)[done]
        state.timer[done] = sample_send_duration(u_send, params.t_send * state.quality[done])
        state.countdown[done] = 0.0
        phase[done] = SEND

    send_done = (phase == SEND) & (state.timer <= _EPS)
    if send_done.any():
        if params.listen == "window":
            inbox.clear(send_done)
        state.timer[send_done] = params.receive_window
        phase[send_done] = RECEIVE

    receive_done = receiving & (state.timer <= _EPS)
    if receive_done.any():
        u_mech = mechanism_stream.draw(receive_done)
        run, robot = np.nonzero(receive_done)
        s0, s1 = inbox.sensors_at(run, robot)
        ctx = BatchContext(
            run=run,
            robot=robot,
            own=state.opinion[run, robot],
            member=inbox.member[run, robot],
            opinion=inbox.opinion[run, robot],
            arrival=inbox.arrival[run, robot],
            s0=s0,
            s1=s1,
            s2=ground[run, robot].astype(float),
            u=u_mech[run, robot],
        )
        state.opinion[run, robot] = mechanism.decide(ctx)
        state.propagations[run, robot] += 1
        if params.listen != "window":
            inbox.clear(receive_done)
        u_exp = decision_stream.draw(receive_done)[run, robot]
        state.timer[run, robot] = sample_explore_duration(u_exp, params.explore_mean)
        state.explore_elapsed[run, robot] = 0.0
        state.explore_match[run, robot] = 0.0
        phase[run, robot] = EXPLORATION
    state.phase = phase
    return receive_done
