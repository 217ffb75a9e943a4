"""Tiled black/white arena and the problem difficulty it defines."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

WIDTH_TILES = 20
HEIGHT_TILES = 20
TILE_SIZE = 0.10
EXTENT = WIDTH_TILES * TILE_SIZE

# Minority-cell counts (of 400) behind the rounded difficulty labels.
LABEL_MINORITY_CELLS = {0.25: 80, 0.52: 136, 0.67: 160, 0.82: 180, 1.0: 200}


class Color(IntEnum):
    BLACK = 0
    WHITE = 1

    @property
    def letter(self) -> str:
        return "B" if self is Color.BLACK else "W"

    @classmethod
    def parse(cls, text: str | "Color") -> "Color":
        if isinstance(text, Color):
            return text
        key = str(text).strip().lower()
        if key in ("b", "black", "0"):
            return cls.BLACK
        if key in ("w", "white", "1"):
            return cls.WHITE
        raise ValueError(f"unknown color {text!r}")


class DifficultyError(ValueError):
    """Raised when a difficulty is undefined or cannot be realized on the grid."""


@dataclass(frozen=True, eq=False)
class TileGrid:
    """Immutable tile pattern; ``cells[iy, ix]`` holds a Color value (0/1)."""

    cells: np.ndarray
    tile_size: float = TILE_SIZE

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2D array")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError("cells must hold 0 (black) or 1 (white)")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def height_tiles(self) -> int:
        return self.cells.shape[0]

    @property
    def width_tiles(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> float:
        return self.width_tiles * self.tile_size

    def count(self, color: Color) -> int:
        return int(np.count_nonzero(self.cells == int(color)))

    @property
    def majority(self) -> Color | None:
        black, white = self.count(Color.BLACK), self.count(Color.WHITE)
        if black == white:
            return None
        return Color.BLACK if black > white else Color.WHITE

    def __eq__(self, other):
        if not isinstance(other, TileGrid):
            return NotImplemented
        return self.tile_size == other.tile_size and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.cells.tobytes(), self.cells.shape, self.tile_size))

    def to_text(self) -> str:
        rows = ["".join("W" if c else "B" for c in row) for row in self.cells]
        return f"{self.width_tiles} {self.height_tiles}\n" + "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TileGrid":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        try:
            width, height = (int(v) for v in lines[0].split())
        except (IndexError, ValueError) as exc:
            raise ValueError("grid header must be 'width height'") from exc
        rows = lines[1:]
        if len(rows) != height or any(len(r) != width for r in rows):
            raise ValueError(f"expected {height} rows of {width} characters")
        table = {"B": 0, "W": 1}
        try:
            cells = [[table[ch] for ch in row] for row in rows]
        except KeyError as exc:
            raise ValueError(f"invalid tile character {exc.args[0]!r}") from exc
        return cls(np.array(cells, dtype=np.uint8))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "TileGrid":
        return cls.from_text(Path(path).read_text())


def problem_difficulty(grid: TileGrid) -> float:
    """Ratio of the less frequent to the more frequent feature, in (0, 1]."""
    total = grid.cells.size
    rho_white = grid.count(Color.WHITE) / total
    rho_black = grid.count(Color.BLACK) / total
    if rho_white == 0 or rho_black == 0:
        raise DifficultyError("difficulty is undefined for a single-color grid")
    return min(rho_white / rho_black, rho_black / rho_white)


def minority_cells(difficulty: float, total: int = WIDTH_TILES * HEIGHT_TILES) -> int:
    """Number of minority tiles realizing ``difficulty`` exactly."""
    for label, count in LABEL_MINORITY_CELLS.items():
        if abs(difficulty - label) < 1e-9 and total == WIDTH_TILES * HEIGHT_TILES:
            return count
    if not 0 < difficulty <= 1:
        raise DifficultyError(f"difficulty must lie in (0, 1], got {difficulty}")
    k = round(total * difficulty / (1 + difficulty))
    if k < 1 or abs(k / (total - k) - difficulty) > 1e-9:
        raise DifficultyError(
            f"difficulty {difficulty} is not expressible as k/({total}-k) on a {total}-cell grid"
        )
    return k


def generate_pattern(
    difficulty: float,
    majority: Color = Color.BLACK,
    seed: int = 0,
    width: int = WIDTH_TILES,
    height: int = HEIGHT_TILES,
) -> TileGrid:
    """Uniformly scattered minority tiles with exact cell counts."""
    majority = Color.parse(majority)
    total = width * height
    k = minority_cells(difficulty, total)
    rng = np.random.default_rng(seed)
    flat = np.full(total, int(majority), dtype=np.uint8)
    flat[rng.choice(total, size=k, replace=False)] = 1 - int(majority)
    return TileGrid(flat.reshape(height, width))


def invert(grid: TileGrid) -> TileGrid:
    return TileGrid(1 - grid.cells, tile_size=grid.tile_size)


def tile_index(grid: TileGrid, x, y):
    """Tile column/row for points inside the arena (half-open tiles, far edge included)."""
    inv = 1.0 / grid.tile_size
    ix = np.minimum(np.floor(np.asarray(x) * inv).astype(np.int64), grid.width_tiles - 1)
    iy = np.minimum(np.floor(np.asarray(y) * inv).astype(np.int64), grid.height_tiles - 1)
    return ix, iy


def color_at(grid: TileGrid, position) -> Color:
    x, y = float(position[0]), float(position[1])
    if not (0.0 <= x <= grid.extent and 0.0 <= y <= grid.extent):
        raise ValueError(f"position {position} lies outside the arena")
    ix, iy = tile_index(grid, x, y)
    return Color(int(grid.cells[iy, ix]))
