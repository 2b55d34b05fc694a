"""Global waypoints from a vertical cell decomposition of unknown space,
local waypoints from frontier clusters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from infosearch.gridworld import OccupancyGrid

GLOBAL = "global"
LOCAL = "local"

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Waypoint:
    cell: tuple
    kind: str


@dataclass(frozen=True)
class Rect:
    """Half-open block of cells ``[x0, x1) x [y0, y1)``."""

    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def center(self) -> tuple:
        return (self.x0 + (self.x1 - self.x0) // 2, self.y0 + (self.y1 - self.y0) // 2)


@dataclass(frozen=True)
class FrontierCluster:
    cells: frozenset
    centroid_cell: tuple

    @property
    def waypoint(self) -> Waypoint:
        return Waypoint(self.centroid_cell, LOCAL)


def column_runs(col: np.ndarray) -> list:
    """Maximal runs of True in a 1-D mask as half-open ``(start, stop)``."""
    padded = np.concatenate(([False], col.astype(bool), [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def vertical_decomposition(mask: np.ndarray) -> list:
    """Partition a ``[x, y]`` mask into rectangles by a left-to-right sweep.

    A run in column x extends the rectangle coming from column x-1 only when
    the two runs span exactly the same rows; otherwise a new rectangle opens.
    """
    rects = []
    open_runs = {}  # (y0, y1) -> first column
    for x in range(mask.shape[0]):
        runs = column_runs(mask[x])
        for run in [r for r in open_runs if r not in runs]:
            rects.append(Rect(open_runs.pop(run), x, run[0], run[1]))
        for run in runs:
            open_runs.setdefault(run, x)
    for run, x0 in open_runs.items():
        rects.append(Rect(x0, mask.shape[0], run[0], run[1]))
    rects.sort(key=lambda r: (r.x0, r.y0))
    return rects


def sample_waypoints_vcd(grid: OccupancyGrid, min_cell_area: int = 4, tol: float = 0.0) -> list:
    rects = vertical_decomposition(grid.unknown_mask(tol))
    return [Waypoint(r.center, GLOBAL) for r in rects if r.area >= min_cell_area]


def frontier_mask(grid: OccupancyGrid, tol: float = 0.0) -> np.ndarray:
    """Known-free cells with at least one unknown 4-neighbour."""
    unknown = grid.unknown_mask(tol)
    near_unknown = ndimage.binary_dilation(unknown, structure=_FOUR)
    return grid.free_mask(tol) & near_unknown


def _centroid_cell(cells: np.ndarray) -> tuple:
    centre = cells.mean(axis=0)
    d2 = ((cells - centre) ** 2).sum(axis=1)
    best = np.flatnonzero(d2 <= d2.min() + 1e-12)
    # cells arrive in (x, y) order, so the first tie is the lowest index
    return (int(cells[best[0], 0]), int(cells[best[0], 1]))


def get_frontiers(grid: OccupancyGrid, min_cluster: int = 3, tol: float = 0.0) -> list:
    if min_cluster < 1:
        raise ValueError(f"min_cluster must be >= 1, got {min_cluster}")
    labels, n = ndimage.label(frontier_mask(grid, tol), structure=_EIGHT)
    clusters = []
    for k in range(1, n + 1):
        cells = np.argwhere(labels == k)
        if len(cells) < min_cluster:
            continue
        members = frozenset((int(i), int(j)) for i, j in cells)
        clusters.append(FrontierCluster(members, _centroid_cell(cells)))
    return clusters


def collect_waypoints(
    grid: OccupancyGrid, min_cluster: int = 3, min_cell_area: int = 4, tol: float = 0.0
) -> list:
    """Global then local waypoints, with known-occupied or duplicate cells removed."""
    found = sample_waypoints_vcd(grid, min_cell_area, tol)
    found += [c.waypoint for c in get_frontiers(grid, min_cluster, tol)]
    occupied = grid.occupied_mask(tol)
    out, seen = [], set()
    for wp in found:
        if occupied[wp.cell] or wp.cell in seen:
            continue
        seen.add(wp.cell)
        out.append(wp)
    return out
