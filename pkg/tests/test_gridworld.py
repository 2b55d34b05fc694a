import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infosearch.gridworld import (
    GridDims,
    GridDomainError,
    OccupancyGrid,
    Pose,
    binary_entropy,
    cell_entropy,
    decay_to_unknown,
    fov_at_cell,
    fov_cells,
    observe,
    to_graymap,
    total_entropy,
)


def entropy_oracle(p):
    """High-precision binary entropy in bits."""
    mpmath.mp.dps = 50
    p = mpmath.mpf(p)
    terms = [x * mpmath.log(x, 2) for x in (p, 1 - p) if x > 0]
    return float(-mpmath.fsum(terms))


def square_oracle(ci, cj, r, w, h):
    return {(i, j) for i in range(ci - r, ci + r + 1) for j in range(cj - r, cj + r + 1) if 0 <= i < w and 0 <= j < h}


def test_cell_entropy_examples():
    assert cell_entropy(0.5) == 1.0
    assert cell_entropy(0.0) == 0.0
    assert cell_entropy(1.0) == 0.0
    assert cell_entropy(0.9) == pytest.approx(entropy_oracle(0.9), abs=1e-15)
    assert round(cell_entropy(0.9), 6) == 0.468996


@pytest.mark.parametrize("p", [-0.1, 1.0001, math.nan])
def test_cell_entropy_domain(p):
    with pytest.raises(GridDomainError):
        cell_entropy(p)


def test_binary_entropy_matches_scalar():
    ps = np.linspace(0, 1, 101)
    np.testing.assert_allclose(binary_entropy(ps), [cell_entropy(p) for p in ps], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0))
def test_entropy_symmetric_and_bounded(p):
    h = cell_entropy(p)
    assert 0.0 <= h <= 1.0
    assert abs(h - cell_entropy(1.0 - p)) < 1e-12


def test_fov_examples():
    d5 = GridDims(5, 5)
    assert len(fov_cells(Pose(2.5, 2.5, 0.0), 1, d5)) == 9
    assert len(fov_cells(Pose(0.1, 0.1, 0.0), 1, d5)) == 4
    d7 = GridDims(7, 7)
    assert fov_cells(Pose(3.5, 3.5, 0.0), 2, d7).cells == square_oracle(3, 3, 2, 7, 7)
    assert len(fov_cells(Pose(3.5, 3.5, 0.0), 2, d7)) == 25


def test_fov_matches_enumeration_everywhere():
    dims = GridDims(6, 4)
    for i, j, r in itertools.product(range(6), range(4), range(4)):
        assert fov_at_cell((i, j), r, dims).cells == square_oracle(i, j, r, 6, 4)


def test_fov_out_of_bounds():
    with pytest.raises(GridDomainError):
        fov_cells(Pose(5.2, 1.0, 0.0), 1, GridDims(5, 5))
    with pytest.raises(GridDomainError):
        fov_cells(Pose(-0.1, 1.0, 0.0), 1, GridDims(5, 5))


def test_fov_respects_resolution():
    dims = GridDims(10, 10, resolution=0.5)
    fov = fov_cells(Pose(2.6, 1.1, 0.0), 1, dims)
    assert fov.cells == square_oracle(5, 2, 1, 10, 10)


def test_observe_examples():
    g = OccupancyGrid.unknown(5, 5)
    fov = fov_at_cell((2, 2), 1, g.dims)
    seen = observe(g, fov, set())
    assert all(seen[c] == 0.0 for c in fov.cells)
    assert int((seen.cells == 0.5).sum()) == 16
    assert g.cells.min() == 0.5  # input untouched

    seen = observe(g, fov, {(1, 1), (4, 4)})
    assert seen[(1, 1)] == 1.0
    assert seen[(4, 4)] == 0.5  # outside the fov
    assert sum(seen[c] == 0.0 for c in fov.cells) == 8

    assert observe(seen, fov, {(1, 1), (4, 4)}) == seen


def test_observe_frame_property():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = OccupancyGrid(GridDims(8, 6), rng.choice([0.0, 0.5, 1.0], size=(8, 6)))
        truth = rng.random((8, 6)) < 0.3
        fov = fov_at_cell((int(rng.integers(8)), int(rng.integers(6))), int(rng.integers(0, 3)), g.dims)
        out = observe(g, fov, truth)
        inside = fov.mask(g.dims)
        np.testing.assert_array_equal(out.cells[~inside], g.cells[~inside])
        np.testing.assert_array_equal(out.cells[inside], truth[inside].astype(float))
        assert total_entropy(out) <= total_entropy(g)


def test_decay_examples():
    dims = GridDims(1, 1)
    g0 = OccupancyGrid(dims, np.array([[0.0]]))
    assert decay_to_unknown(g0, 0.0)[(0, 0)] == 0.0
    assert decay_to_unknown(g0, 1.0)[(0, 0)] == 0.5
    g = OccupancyGrid(dims, np.array([[0.2]]))
    assert decay_to_unknown(g, 0.5)[(0, 0)] == pytest.approx(0.2 + 0.5 * (0.5 - 0.2), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0, 1))
def test_decay_contracts_toward_unknown(ps, beta):
    g = OccupancyGrid(GridDims(len(ps), 1), np.array(ps).reshape(-1, 1))
    out = decay_to_unknown(g, beta)
    assert np.all(np.abs(out.cells - 0.5) <= np.abs(g.cells - 0.5) + 1e-15)
    assert total_entropy(out) >= total_entropy(g) - 1e-12


def test_total_entropy_examples():
    assert total_entropy(OccupancyGrid.unknown(13, 13)) == 169.0
    assert total_entropy(OccupancyGrid(GridDims(3, 3), np.zeros((3, 3)))) == 0.0
    half = OccupancyGrid.unknown(4, 4)
    half.cells[:2, :] = 0.0
    assert total_entropy(half) == 8.0


def test_grid_rejects_bad_values():
    with pytest.raises(GridDomainError):
        OccupancyGrid(GridDims(2, 2), np.full((2, 2), 1.5))
    with pytest.raises(GridDomainError):
        GridDims(0, 3)
    with pytest.raises(GridDomainError):
        GridDims(3, 3, resolution=0.0)


def test_graymap_export():
    vals = np.array([[0.0, 1.0], [0.5, 0.25]])  # [x, y]
    text = to_graymap(vals).decode()
    lines = text.split()
    assert lines[:4] == ["P2", "2", "2", "255"]
    # first row printed is the top (y = 1)
    assert lines[4:] == ["255", "64", "0", "128"]
    raw = to_graymap(vals, binary=True)
    assert raw.startswith(b"P5\n2 2\n255\n")
    assert list(raw[-4:]) == [255, 64, 0, 128]
