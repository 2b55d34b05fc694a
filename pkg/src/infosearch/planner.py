"""Shortest 4-connected paths and speed-aware viewpoint sampling."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from infosearch.gridworld import GridDomainError, OccupancyGrid


class NoPathError(RuntimeError):
    """The goal cannot be reached from the start."""


@dataclass(frozen=True)
class Path:
    cells: tuple

    def __post_init__(self):
        if not self.cells:
            raise ValueError("a path needs at least one cell")

    @property
    def steps(self) -> int:
        return len(self.cells) - 1

    @property
    def start(self):
        return self.cells[0]

    @property
    def goal(self):
        return self.cells[-1]

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class ReparamPath:
    source: Path
    indices: tuple  # positions of the viewpoints along ``source``
    ds: int
    steps: int  # path steps kept after horizon truncation

    @property
    def viewpoints(self) -> tuple:
        return tuple(self.source.cells[k] for k in self.indices)


def astar(grid: OccupancyGrid, start, goal, tol: float = 0.0) -> Path:
    """Minimum-step 4-connected path; unknown cells count as traversable.

    Unit step cost with the Manhattan heuristic.  Ties on f are expanded in
    increasing (x, y) order, which makes the result deterministic.
    """
    dims = grid.dims
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    blocked = grid.occupied_mask(tol)
    for name, c in (("start", start), ("goal", goal)):
        if not dims.contains(c):
            raise GridDomainError(f"{name} {c} outside grid")
        if blocked[c]:
            raise GridDomainError(f"{name} {c} is a known obstacle")
    if start == goal:
        return Path((start,))

    w, h = dims.width, dims.height
    gx, gy = goal
    g = {start: 0}
    parent = {start: None}
    closed = set()
    heap = [(abs(start[0] - gx) + abs(start[1] - gy), start[0], start[1])]
    while heap:
        _, x, y = heapq.heappop(heap)
        cur = (x, y)
        if cur in closed:
            continue
        if cur == goal:
            cells = []
            while cur is not None:
                cells.append(cur)
                cur = parent[cur]
            return Path(tuple(reversed(cells)))
        closed.add(cur)
        ng = g[cur] + 1
        for nx, ny in ((x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)):
            if nx < 0 or ny < 0 or nx >= w or ny >= h or blocked[nx, ny]:
                continue
            nb = (nx, ny)
            if nb in closed or ng >= g.get(nb, math.inf):
                continue
            g[nb] = ng
            parent[nb] = cur
            heapq.heappush(heap, (ng + abs(nx - gx) + abs(ny - gy), nx, ny))
    raise NoPathError(f"no path from {start} to {goal}")


def sampling_interval(speed: float, sample_period: float) -> int:
    return max(1, int(math.floor(speed * sample_period + 0.5)))


def reparameterize(path: Path, spec, horizon: float, sample_period: float = 2.0) -> ReparamPath:
    """Truncate ``path`` to what ``spec`` covers within ``horizon``, then
    keep every ``ds``-th cell starting with the first.

    ``spec.speed`` is in cells per planning step.  The trailing partial
    segment is dropped, so a 10-step path at ds=2 yields 5 viewpoints.
    """
    if spec.speed <= 0:
        raise ValueError(f"speed must be positive, got {spec.speed}")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    ds = sampling_interval(spec.speed, sample_period)
    reach = int(math.floor(spec.speed * horizon + 1e-9))
    steps = min(path.steps, reach)
    indices = tuple(range(0, steps, ds)) if steps > 0 else (0,)
    return ReparamPath(path, indices, ds, steps)
