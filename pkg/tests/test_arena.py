import numpy as np
import pytest
from hypothesis import given, strategies as st

from evoperc.arena import (
    Color,
    DifficultyError,
    TileGrid,
    color_at,
    generate_pattern,
    invert,
    minority_cells,
    problem_difficulty,
)


def grid_with(black: int) -> TileGrid:
    cells = np.ones(400, dtype=np.uint8)
    cells[:black] = 0
    return TileGrid(cells.reshape(20, 20))


# problem_difficulty

def test_difficulty_80_of_400():
    assert problem_difficulty(grid_with(80)) == pytest.approx(0.25, abs=1e-12)


def test_difficulty_even_split():
    assert problem_difficulty(grid_with(200)) == 1.0


@pytest.mark.parametrize("minority, label, exact", [
    (136, 0.52, 136 / 264),
    (160, 0.67, 160 / 240),
    (180, 0.82, 180 / 220),
])
def test_difficulty_labels(minority, label, exact):
    rho = problem_difficulty(grid_with(minority))
    assert rho == pytest.approx(exact, abs=1e-12)
    assert round(rho, 2) == label


def test_single_color_has_no_difficulty():
    with pytest.raises(DifficultyError):
        problem_difficulty(grid_with(0))


def test_unrealizable_label():
    with pytest.raises(DifficultyError):
        minority_cells(0.3)


# generate_pattern

def test_pattern_seed7_counts():
    g = generate_pattern(0.25, Color.BLACK, 7)
    assert g.count(Color.BLACK) == 320
    assert g.majority is Color.BLACK


def test_pattern_even():
    g = generate_pattern(1.0, Color.BLACK, 3)
    assert g.count(Color.BLACK) == g.count(Color.WHITE) == 200


def test_pattern_deterministic():
    assert generate_pattern(0.52, Color.WHITE, 11) == generate_pattern(0.52, Color.WHITE, 11)
    assert generate_pattern(0.52, Color.WHITE, 11) != generate_pattern(0.52, Color.WHITE, 12)


@given(st.integers(1, 200), st.sampled_from(list(Color)), st.integers(0, 2**32))
def test_pattern_realizes_ratio(k, majority, seed):
    rho = k / (400 - k)
    g = generate_pattern(rho, majority, seed)
    assert g.count(Color(1 - majority)) == k
    assert abs(problem_difficulty(g) - rho) < 1e-12


# invert

@pytest.mark.parametrize("seed", range(5))
def test_invert_involution_and_symmetry(seed):
    g = generate_pattern(0.25, Color.BLACK, seed)
    inv = invert(g)
    assert invert(inv) == g
    assert inv.count(Color.WHITE) == 320
    assert problem_difficulty(inv) == problem_difficulty(g)
    assert inv.majority is Color.WHITE


# color_at

def test_color_at_cells():
    cells = np.zeros((20, 20), dtype=np.uint8)
    cells[0, 1] = 1
    cells[19, 19] = 1
    g = TileGrid(cells)
    assert color_at(g, (0.05, 0.05)) is Color.BLACK
    assert color_at(g, (0.10, 0.05)) is Color.WHITE  # half-open: belongs to cell (1, 0)
    assert color_at(g, (1.95, 1.95)) is Color.WHITE
    assert color_at(g, (2.0, 2.0)) is Color.WHITE  # far wall folds onto the last cell


def test_color_at_out_of_bounds():
    g = grid_with(80)
    with pytest.raises(ValueError):
        color_at(g, (2.01, 0.5))
    with pytest.raises(ValueError):
        color_at(g, (-0.001, 0.5))


def test_text_roundtrip(tmp_path):
    g = generate_pattern(0.67, Color.BLACK, 5)
    assert TileGrid.from_text(g.to_text()) == g
    g.save(tmp_path / "g.txt")
    assert TileGrid.load(tmp_path / "g.txt") == g
    first = (tmp_path / "g.txt").read_text().splitlines()
    assert first[0] == "20 20" and len(first) == 21


def test_text_rejects_bad_chars():
    with pytest.raises(ValueError):
        TileGrid.from_text("2 1\nBX\n")
