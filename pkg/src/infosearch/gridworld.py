"""Occupancy grid, entropy view and square field-of-view geometry.

Cells are addressed as ``(x, y)`` integer pairs and the probability array is
stored with shape ``(width, height)`` so that ``cells[x, y]`` is the
occupancy probability of that cell.  Poses live in metric coordinates; cell
``(i, j)`` covers ``[i*res, (i+1)*res) x [j*res, (j+1)*res)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

UNKNOWN = 0.5
FREE = 0.0
OCCUPIED = 1.0


class GridDomainError(ValueError):
    """Raised for out-of-range probabilities, poses or cell indices."""


@dataclass(frozen=True)
class GridDims:
    width: int
    height: int
    resolution: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise GridDomainError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if not self.resolution > 0:
            raise GridDomainError(f"resolution must be positive, got {self.resolution}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def contains(self, cell) -> bool:
        i, j = cell
        return 0 <= i < self.width and 0 <= j < self.height

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution)))

    def cell_center(self, cell) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.resolution, (cell[1] + 0.5) * self.resolution)


@dataclass
class OccupancyGrid:
    dims: GridDims
    cells: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.full(self.dims.shape, UNKNOWN, dtype=float)
        else:
            self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.shape != self.dims.shape:
            raise GridDomainError(f"cell array shape {self.cells.shape} != {self.dims.shape}")
        if np.any(self.cells < 0.0) or np.any(self.cells > 1.0) or np.any(np.isnan(self.cells)):
            raise GridDomainError("occupancy probabilities must lie in [0, 1]")

    @classmethod
    def unknown(cls, width: int, height: int, resolution: float = 1.0) -> "OccupancyGrid":
        return cls(GridDims(width, height, resolution))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.dims, self.cells.copy())

    def __getitem__(self, cell) -> float:
        return float(self.cells[cell[0], cell[1]])

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.cells, other.cells)

    # Ternary classification.  ``tol`` widens the unknown band around 0.5 so
    # decayed maps still expose unknown space; with tol=0 the tests are exact.
    def unknown_mask(self, tol: float = 0.0) -> np.ndarray:
        return np.abs(self.cells - UNKNOWN) <= tol

    def free_mask(self, tol: float = 0.0) -> np.ndarray:
        return self.cells < UNKNOWN - tol

    def occupied_mask(self, tol: float = 0.0) -> np.ndarray:
        return self.cells > UNKNOWN + tol

    def entropy_map(self) -> np.ndarray:
        return binary_entropy(self.cells)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0


@dataclass(frozen=True)
class FovFootprint:
    """Axis-aligned square footprint, stored as half-open index bounds."""

    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def cells(self) -> frozenset:
        return frozenset((i, j) for i in range(self.x0, self.x1) for j in range(self.y0, self.y1))

    @property
    def slices(self) -> tuple[slice, slice]:
        return (slice(self.x0, self.x1), slice(self.y0, self.y1))

    def __len__(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def __contains__(self, cell) -> bool:
        return self.x0 <= cell[0] < self.x1 and self.y0 <= cell[1] < self.y1

    def __iter__(self):
        for i in range(self.x0, self.x1):
            for j in range(self.y0, self.y1):
                yield (i, j)

    def mask(self, dims: GridDims) -> np.ndarray:
        m = np.zeros(dims.shape, dtype=bool)
        m[self.slices] = True
        return m


def binary_entropy(p) -> np.ndarray:
    """Vectorized binary entropy in bits, with 0*log2(0) taken as 0."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        hp = np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
        hq = np.where(q > 0.0, -q * np.log2(np.where(q > 0.0, q, 1.0)), 0.0)
    return hp + hq


def cell_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise GridDomainError(f"occupancy probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def fov_at_cell(cell, fov_range: int, dims: GridDims) -> FovFootprint:
    if not dims.contains(cell):
        raise GridDomainError(f"cell {cell} outside {dims.width}x{dims.height} grid")
    if fov_range < 0:
        raise GridDomainError(f"fov range must be >= 0, got {fov_range}")
    i, j = int(cell[0]), int(cell[1])
    return FovFootprint(
        max(0, i - fov_range),
        min(dims.width, i + fov_range + 1),
        max(0, j - fov_range),
        min(dims.height, j + fov_range + 1),
    )


def fov_cells(pose: Pose, fov_range: int, dims: GridDims) -> FovFootprint:
    """Square footprint of side ``2*range+1`` centred on the pose's cell."""
    return fov_at_cell(dims.cell_of(pose.x, pose.y), fov_range, dims)


def obstacle_mask(truth, dims: GridDims) -> np.ndarray:
    """Normalize a ground-truth obstacle set (mask or iterable of cells)."""
    if isinstance(truth, np.ndarray):
        mask = truth.astype(bool)
        if mask.shape != dims.shape:
            raise GridDomainError(f"obstacle mask shape {mask.shape} != {dims.shape}")
        return mask
    mask = np.zeros(dims.shape, dtype=bool)
    for cell in truth or ():
        if not dims.contains(cell):
            raise GridDomainError(f"obstacle cell {cell} outside grid")
        mask[cell[0], cell[1]] = True
    return mask


def observe(grid: OccupancyGrid, fov: FovFootprint, truth) -> OccupancyGrid:
    """Noiseless occupancy sensing: cells in ``fov`` snap to 0.0 or 1.0."""
    truth = obstacle_mask(truth, grid.dims)
    out = grid.copy()
    sl = fov.slices
    out.cells[sl] = np.where(truth[sl], OCCUPIED, FREE)
    return out


def decay_to_unknown(grid: OccupancyGrid, beta: float) -> OccupancyGrid:
    if not 0.0 <= beta <= 1.0:
        raise GridDomainError(f"decay rate {beta} outside [0, 1]")
    out = grid.copy()
    out.cells += beta * (UNKNOWN - out.cells)
    return out


def total_entropy(grid: OccupancyGrid) -> float:
    return float(grid.entropy_map().sum())


def to_graymap(values: np.ndarray, binary: bool = False) -> bytes:
    """Encode an array in [0, 1] indexed ``[x, y]`` as a PGM image.

    Rows are written top to bottom from the highest y so the picture has
    y pointing up.
    """
    pix = np.rint(np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * 255).astype(np.uint8)
    img = pix.T[::-1]
    h, w = img.shape
    if binary:
        return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()
    lines = [f"P2\n{w} {h}\n255"]
    lines.extend(" ".join(str(v) for v in row) for row in img)
    return ("\n".join(lines) + "\n").encode("ascii")


def cells_to_mask(cells: Iterable, dims: GridDims) -> np.ndarray:
    mask = np.zeros(dims.shape, dtype=bool)
    for c in cells:
        mask[c[0], c[1]] = True
    return mask
