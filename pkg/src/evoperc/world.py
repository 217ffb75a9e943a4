"""Kinematic 2D world: differential-drive bodies, collisions and sensors.

All state is batched as ``(runs, robots)`` arrays so many independent runs can
be advanced with one set of numpy operations.  Every operation is elementwise
per run; no run ever influences another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arena import Color, TileGrid

ROBOT_RADIUS = 0.035
MAX_SPEED = 0.10
PROX_RANGE = 0.10
PROX_ANGLES = np.deg2rad([-60.0, -30.0, 0.0, 30.0, 60.0])
DT = 0.05
PROX_PERIOD = 0.15
GROUND_PERIOD = 0.2
COLLISION_TOL = 1e-12
MAX_COLLISION_ITERS = 200
# Candidate pairs cover proximity range plus contact, with a displacement skin.
INTERACTION_RANGE = PROX_RANGE + 2 * ROBOT_RADIUS + 1e-6
CANDIDATE_SKIN = 0.10
_RAY_COS = np.cos(PROX_ANGLES)
_RAY_SIN = np.sin(PROX_ANGLES)


class SetupError(RuntimeError):
    pass


def period_ticks(period: float, dt: float) -> int:
    ticks = round(period / dt)
    if ticks < 1 or abs(ticks * dt - period) > 1e-9:
        raise ValueError(f"period {period} s is not an integer multiple of dt={dt} s")
    return ticks


@dataclass
class ProximityReadings:
    values: np.ndarray
    obstacle_detected: bool


@dataclass
class World:
    grids: np.ndarray  # (runs, rows, cols) uint8
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    dt: float = DT
    radius: float = ROBOT_RADIUS
    extent: float = 2.0
    tile_size: float = 0.10
    tick: int = 0
    prox: np.ndarray = field(default=None)
    ground_held: np.ndarray = field(default=None)

    def __post_init__(self):
        self.prox_ticks = period_ticks(PROX_PERIOD, self.dt)
        self.ground_ticks = period_ticks(GROUND_PERIOD, self.dt)
        if self.prox is None:
            self.prox = np.zeros(self.x.shape + (len(PROX_ANGLES),))
        if self.ground_held is None:
            self.ground_held = np.zeros(self.x.shape, dtype=np.uint8)
        rebuild_candidates(self)

    @property
    def runs(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def elapsed(self) -> float:
        return self.tick * self.dt

    def pair_distances(self) -> np.ndarray:
        dx = self.x[:, :, None] - self.x[:, None, :]
        dy = self.y[:, :, None] - self.y[:, None, :]
        return np.hypot(dx, dy)



def _place(rng: np.random.Generator, n: int, radius: float, extent: float, retries: int):
    xs, ys = [], []
    for _ in range(n):
        for _attempt in range(retries):
            px, py = rng.uniform(radius, extent - radius, size=2)
            if all((px - qx) ** 2 + (py - qy) ** 2 >= (2 * radius) ** 2 for qx, qy in zip(xs, ys)):
                xs.append(px)
                ys.append(py)
                break
        else:
            raise SetupError(f"could not place {n} robots without overlap")
    return np.array(xs), np.array(ys)


def spawn_swarm(
    grids: TileGrid | Sequence[TileGrid],
    n: int,
    seeds: int | Sequence[int],
    dt: float = DT,
    retries: int = 10_000,
) -> World:
    """Uniform random non-overlapping poses, one seeded generator per run."""
    if isinstance(grids, TileGrid):
        grids = [grids]
    if np.isscalar(seeds):
        seeds = [seeds]
    if len(grids) != len(seeds):
        raise ValueError("need one seed per grid")
    shapes = {g.cells.shape for g in grids}
    if len(shapes) != 1:
        raise ValueError("all grids in a batch must share a shape")
    extent = grids[0].extent
    xs, ys, hs = [], [], []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        px, py = _place(rng, n, ROBOT_RADIUS, extent, retries)
        xs.append(px)
        ys.append(py)
        hs.append(rng.uniform(-np.pi, np.pi, size=n))
    x = np.array(xs)
    world = World(
        grids=np.stack([g.cells for g in grids]),
        x=x,
        y=np.array(ys),
        heading=np.array(hs),
        v=np.zeros_like(x),
        omega=np.zeros_like(x),
        dt=dt,
        extent=extent,
        tile_size=grids[0].tile_size,
    )
    refresh_sensors(world, force=True)
    return world


def swarm_density(n: int, radius: float = ROBOT_RADIUS, extent: float = 2.0) -> float:
    return n * np.pi * radius**2 / extent**2


def integrate_pose(x, y, heading, v, omega, dt):
    """Exact differential-drive arc integration."""
    turning = np.abs(omega) >= 1e-9
    nx = x + v * np.cos(heading) * dt
    ny = y + v * np.sin(heading) * dt
    arc = turning & (v != 0)
    if arc.any():
        safe_w = np.where(arc, omega, 1.0)
        h1 = heading + omega * dt
        nx = np.where(arc, x + (v / safe_w) * (np.sin(h1) - np.sin(heading)), nx)
        ny = np.where(arc, y - (v / safe_w) * (np.cos(h1) - np.cos(heading)), ny)
    wrapped = (heading + omega * dt + np.pi) % (2 * np.pi) - np.pi
    return nx, ny, np.where(turning, wrapped, heading)


def rebuild_candidates(world: World) -> None:
    """Pairs that may come within interaction range before the next rebuild."""
    dx = world.x[:, :, None] - world.x[:, None, :]
    dy = world.y[:, :, None] - world.y[:, None, :]
    close = dx * dx + dy * dy < (INTERACTION_RANGE + CANDIDATE_SKIN) ** 2
    idx = np.arange(world.n)
    close[:, idx, idx] = False
    world.cand_b, world.cand_i, world.cand_j = np.nonzero(close)
    world.anchor_x = world.x.copy()
    world.anchor_y = world.y.copy()


def _maybe_rebuild(world: World) -> None:
    moved = (world.x - world.anchor_x) ** 2 + (world.y - world.anchor_y) ** 2
    if moved.max(initial=0.0) > (0.5 * CANDIDATE_SKIN) ** 2:
        rebuild_candidates(world)


def _candidate_offsets(world: World):
    b, i, j = world.cand_b, world.cand_i, world.cand_j
    dx = world.x[b, i] - world.x[b, j]
    dy = world.y[b, i] - world.y[b, j]
    return dx, dy, dx * dx + dy * dy


def resolve_collisions(world: World) -> int:
    """Remove wall and robot overlaps by minimal projection; returns iterations used."""
    r, lo, hi = world.radius, world.radius, world.extent - world.radius
    np.clip(world.x, lo, hi, out=world.x)
    np.clip(world.y, lo, hi, out=world.y)
    if world.n < 2:
        return 0
    _maybe_rebuild(world)
    limit = (2 * r - COLLISION_TOL) ** 2
    for iteration in range(MAX_COLLISION_ITERS):
        dx, dy, d2 = _candidate_offsets(world)
        hit = d2 < limit
        if not hit.any():
            return iteration
        b, i, j = world.cand_b[hit], world.cand_i[hit], world.cand_j[hit]
        dist = np.sqrt(d2[hit])
        safe = np.where(dist > 0, dist, 1.0)
        # coincident centers: the higher index moves towards +x
        ux = np.where(dist > 0, dx[hit] / safe, np.where(i > j, 1.0, -1.0))
        uy = np.where(dist > 0, dy[hit] / safe, 0.0)
        push = 0.5 * (2 * r - dist)
        shift_x = np.zeros_like(world.x)
        shift_y = np.zeros_like(world.y)
        np.add.at(shift_x, (b, i), push * ux)
        np.add.at(shift_y, (b, i), push * uy)
        world.x += shift_x
        world.y += shift_y
        np.clip(world.x, lo, hi, out=world.x)
        np.clip(world.y, lo, hi, out=world.y)
        _maybe_rebuild(world)
    return MAX_COLLISION_ITERS


def step(world: World) -> World:
    """Advance every body by one tick under its current wheel command."""
    world.x, world.y, world.heading = integrate_pose(
        world.x, world.y, world.heading, world.v, world.omega, world.dt
    )
    resolve_collisions(world)
    world.tick += 1
    return world


def cast_proximity(world: World) -> np.ndarray:
    """Instantaneous readings, shape ``(runs, robots, 5)``; 1 at contact, 0 beyond range."""
    r = world.radius
    reach = PROX_RANGE + r + 1e-9
    readings = np.zeros(world.x.shape + (len(PROX_ANGLES),))
    near_wall = (
        (world.x < reach) | (world.x > world.extent - reach)
        | (world.y < reach) | (world.y > world.extent - reach)
    )
    if world.n > 1:
        _maybe_rebuild(world)
        _, _, d2 = _candidate_offsets(world)
        near = d2 < (PROX_RANGE + 2 * r + 1e-9) ** 2
        pb, pi, pj = world.cand_b[near], world.cand_i[near], world.cand_j[near]
    else:
        pb = pi = pj = np.zeros(0, dtype=np.int64)
    active = near_wall.copy()
    active[pb, pi] = True
    b, i = np.nonzero(active)
    if b.size == 0:
        return readings
    slot = np.full(world.x.shape, -1, dtype=np.int64)
    slot[b, i] = np.arange(b.size)
    h = world.heading[b, i][:, None]
    ch, sh = np.cos(h), np.sin(h)
    ux = ch * _RAY_COS - sh * _RAY_SIN
    uy = sh * _RAY_COS + ch * _RAY_SIN
    x, y = world.x[b, i][:, None], world.y[b, i][:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(ux > 1e-12, (world.extent - x) / ux, np.where(ux < -1e-12, -x / ux, np.inf))
        ty = np.where(uy > 1e-12, (world.extent - y) / uy, np.where(uy < -1e-12, -y / uy, np.inf))
    t_hit = np.minimum(tx, ty)
    if pb.size:
        rows = slot[pb, pi]
        wx = (world.x[pb, pj] - world.x[pb, pi])[:, None]
        wy = (world.y[pb, pj] - world.y[pb, pi])[:, None]
        tca = wx * ux[rows] + wy * uy[rows]
        disc = r**2 - (wx**2 + wy**2 - tca**2)
        hits = (disc >= 0) & (tca > 0)
        t_robot = np.where(hits, tca - np.sqrt(np.maximum(disc, 0.0)), np.inf)
        np.minimum.at(t_hit, rows, t_robot)
    rim = np.maximum(t_hit - r, 0.0)
    readings[b, i] = np.maximum(0.0, 1.0 - rim / PROX_RANGE)
    return readings


def sense_ground(world: World) -> np.ndarray:
    ix, iy = tile_index_arrays(world)
    runs = np.arange(world.runs)[:, None]
    return world.grids[runs, iy, ix]


def tile_index_arrays(world: World):
    inv = 1.0 / world.tile_size
    cols, rows = world.grids.shape[2], world.grids.shape[1]
    ix = np.clip(np.floor(world.x * inv).astype(np.int64), 0, cols - 1)
    iy = np.clip(np.floor(world.y * inv).astype(np.int64), 0, rows - 1)
    return ix, iy


def refresh_sensors(world: World, force: bool = False) -> None:
    """Sample-and-hold refresh on the proximity and ground cadences."""
    if force or world.tick % world.prox_ticks == 0:
        world.prox = cast_proximity(world)
    if force or world.tick % world.ground_ticks == 0:
        world.ground_held = sense_ground(world)


def proximity(world: World, robot_id: int, run: int = 0) -> ProximityReadings:
    values = world.prox[run, robot_id].copy()
    return ProximityReadings(values=values, obstacle_detected=bool((values > 0).any()))


def ground(world: World, robot_id: int, run: int = 0) -> Color:
    return Color(int(world.ground_held[run, robot_id]))


__all__ = [
    "World",
    "ProximityReadings",
    "SetupError",
    "spawn_swarm",
    "swarm_density",
    "integrate_pose",
    "resolve_collisions",
    "step",
    "cast_proximity",
    "refresh_sensors",
    "proximity",
    "ground",
    "period_ticks",
]
