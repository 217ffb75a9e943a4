"""Random-walk motion controller: straight, rotation, avoidance and unstuck."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import Streams
from .world import MAX_SPEED

STRAIGHT, ROTATION, AVOIDANCE, UNSTUCK = 0, 1, 2, 3
MODE_NAMES = ("Straight", "Rotation", "Avoidance", "Unstuck")

STRAIGHT_MEAN = 40.0
ROTATION_MAX = 4.5
AVOID_JITTER = np.deg2rad(25.0)
ZETA_MAX = 7.5
OMEGA_ROT = np.pi / 2
_EPS = 1e-9


def sample_straight_duration(u, mean: float = STRAIGHT_MEAN):
    """Exponential straight-phase duration from uniforms in [0, 1)."""
    return -mean * np.log1p(-np.asarray(u, dtype=float))


def sample_rotation_duration(u, upper: float = ROTATION_MAX):
    return upper * np.asarray(u, dtype=float)


def sample_avoidance_angle(u):
    return np.pi + AVOID_JITTER * (2.0 * np.asarray(u, dtype=float) - 1.0)


@dataclass
class MotionState:
    """Per-robot motion state, all arrays of shape ``(runs, robots)``."""

    mode: np.ndarray
    timer: np.ndarray
    avoid_remaining: np.ndarray
    direction: np.ndarray  # +1 counter-clockwise, -1 clockwise
    zeta: np.ndarray

    @classmethod
    def initial(cls, stream: Streams, straight_mean: float = STRAIGHT_MEAN) -> "MotionState":
        shape = stream.shape
        return cls(
            mode=np.full(shape, STRAIGHT, dtype=np.int8),
            timer=sample_straight_duration(stream.draw(), straight_mean),
            avoid_remaining=np.zeros(shape),
            direction=np.ones(shape),
            zeta=np.full(shape, ZETA_MAX),
        )


def step_motion(
    state: MotionState,
    prox: np.ndarray,
    stream: Streams,
    dt: float,
    omega_rot: float = OMEGA_ROT,
    straight_mean: float = STRAIGHT_MEAN,
    rotation_max: float = ROTATION_MAX,
):
    """Advance the controller one tick in place and return ``(v, omega)``.

    ``prox`` has shape ``(runs, robots, 5)`` with rays ordered right to left.
    """
    obstacle = (prox > 0).any(axis=-1)
    mode = state.mode.copy()

    straight = mode == STRAIGHT
    to_avoid = straight & obstacle
    to_rotate = straight & ~obstacle & (state.timer <= _EPS)
    to_straight = (
        ((mode == ROTATION) & (state.timer <= _EPS))
        | ((mode == AVOIDANCE) & (state.avoid_remaining <= _EPS))
        | ((mode == UNSTUCK) & ~obstacle)
    )
    changing = to_avoid | to_rotate | to_straight
    if changing.any():
        u_first = stream.draw(changing)
        if to_avoid.any():
            # turn away from the side with more proximity signal; ties turn left
            right = prox[..., :2].sum(axis=-1)
            left = prox[..., 3:].sum(axis=-1)
            state.direction[to_avoid] = np.where(left > right, -1.0, 1.0)[to_avoid]
            state.avoid_remaining[to_avoid] = sample_avoidance_angle(u_first[to_avoid])
            mode[to_avoid] = AVOIDANCE
        if to_rotate.any():
            u_second = stream.draw(to_rotate)
            state.timer[to_rotate] = sample_rotation_duration(u_first[to_rotate], rotation_max)
            state.direction[to_rotate] = np.where(u_second[to_rotate] < 0.5, -1.0, 1.0)
            mode[to_rotate] = ROTATION
        if to_straight.any():
            state.zeta[to_straight & (mode == UNSTUCK)] = ZETA_MAX
            state.timer[to_straight] = sample_straight_duration(u_first[to_straight], straight_mean)
            mode[to_straight] = STRAIGHT

    moving = mode == STRAIGHT
    avoiding = mode == AVOIDANCE
    turning = avoiding | (mode == ROTATION)
    v = np.where(moving, MAX_SPEED, 0.0)
    omega = np.where(moving, 0.0, state.direction * omega_rot)

    state.timer = np.maximum(state.timer - np.where(moving | (mode == ROTATION), dt, 0.0), 0.0)
    state.avoid_remaining = np.maximum(state.avoid_remaining - np.where(avoiding, omega_rot * dt, 0.0), 0.0)
    state.zeta += np.where(moving, dt, np.where(turning, -dt, 0.0))
    np.clip(state.zeta, -ZETA_MAX, ZETA_MAX, out=state.zeta)

    trapped = turning & (state.zeta < 0)
    if trapped.any():
        u_unstuck = stream.draw(trapped)
        state.direction[trapped] = np.where(u_unstuck[trapped] < 0.5, -1.0, 1.0)
        mode[trapped] = UNSTUCK
    state.mode = mode
    return v, omega
