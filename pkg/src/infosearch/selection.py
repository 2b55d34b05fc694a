"""Information gain, utility and the sequential leader-follower planning round.

Agents are processed in rank order.  Each one scores its candidate paths on
the entropy map with every cell already covered by a higher-ranked agent's
chosen path masked out, picks the best, and adds its own coverage to the
mask before the next agent plans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from infosearch.belief import SensorModel, TargetBelief
from infosearch.gridworld import GridDims, OccupancyGrid, Pose, fov_at_cell
from infosearch.planner import NoPathError, Path, ReparamPath, astar, reparameterize
from infosearch.waypoints import Waypoint, collect_waypoints

HOLD = "hold"
ENTROPY = "entropy"
BELIEF_WEIGHTED = "belief"


class NoCandidateError(ValueError):
    pass


@dataclass(frozen=True)
class AgentSpec:
    id: int
    rank: int
    speed: float  # cells per planning step
    fov_range: int
    sensor: SensorModel = field(default_factory=SensorModel)

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError(f"agent {self.id}: speed must be positive")
        if self.fov_range < 0:
            raise ValueError(f"agent {self.id}: fov_range must be >= 0")


@dataclass(frozen=True)
class Candidate:
    agent: int
    goal: tuple
    kind: str
    path: ReparamPath
    ig: float
    cost: float

    @property
    def utility(self) -> float:
        return self.ig - self.cost


class ClaimedCells:
    """Cells already covered by higher-ranked agents this round."""

    def __init__(self, dims: GridDims, mask: Optional[np.ndarray] = None):
        self.dims = dims
        self.mask = np.zeros(dims.shape, dtype=bool) if mask is None else mask.astype(bool).copy()

    @classmethod
    def from_cells(cls, dims: GridDims, cells) -> "ClaimedCells":
        claimed = cls(dims)
        for c in cells:
            claimed.mask[c[0], c[1]] = True
        return claimed

    @property
    def cells(self) -> frozenset:
        return frozenset((int(i), int(j)) for i, j in np.argwhere(self.mask))

    def add(self, mask: np.ndarray) -> None:
        self.mask |= mask

    def __len__(self):
        return int(self.mask.sum())


@dataclass(frozen=True)
class PlannerParams:
    lam: float = 0.1
    sample_period: float = 2.0
    min_cluster: int = 3
    min_cell_area: int = 4
    ig_union: bool = True
    weighting: str = ENTROPY
    unknown_tol: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.weighting not in (ENTROPY, BELIEF_WEIGHTED):
            raise ValueError(f"unknown IG weighting {self.weighting!r}")


@dataclass
class PlanRound:
    selections: list
    claimed: ClaimedCells
    candidates: list = field(default_factory=list)

    def for_agent(self, agent_id: int) -> Candidate:
        for sel in self.selections:
            if sel.agent == agent_id:
                return sel
        raise KeyError(agent_id)

    def records(self) -> list:
        """Flat audit records of every scored candidate."""
        chosen = {(s.agent, s.goal, s.kind) for s in self.selections}
        return [
            {
                "agent": c.agent,
                "goal": list(c.goal),
                "kind": c.kind,
                "ig": c.ig,
                "cost": c.cost,
                "utility": c.utility,
                "selected": (c.agent, c.goal, c.kind) in chosen,
            }
            for c in self.candidates
        ]


def coverage_mask(rp: ReparamPath, fov_range: int, dims: GridDims) -> np.ndarray:
    mask = np.zeros(dims.shape, dtype=bool)
    for vp in rp.viewpoints:
        mask[fov_at_cell(vp, fov_range, dims).slices] = True
    return mask


def information_gain(
    rp: ReparamPath,
    grid: OccupancyGrid,
    claimed: Optional[ClaimedCells],
    fov_range: int,
    union: bool = True,
    value_map: Optional[np.ndarray] = None,
) -> float:
    """Entropy (bits) of the cells seen from the path's viewpoints.

    Claimed cells contribute nothing.  With ``union`` each cell counts once
    however many viewpoints see it; otherwise footprints are summed one by
    one.  ``value_map`` replaces the per-cell entropy when given.
    """
    dims = grid.dims
    values = grid.entropy_map() if value_map is None else value_map
    if claimed is not None:
        values = np.where(claimed.mask, 0.0, values)
    if union:
        return float(values[coverage_mask(rp, fov_range, dims)].sum())
    return float(sum(values[fov_at_cell(vp, fov_range, dims).slices].sum() for vp in rp.viewpoints))


def belief_weighted_values(grid: OccupancyGrid, belief: TargetBelief) -> np.ndarray:
    peak = belief.mass.max()
    weight = belief.mass / peak if peak > 0 else np.zeros_like(belief.mass)
    return grid.entropy_map() * weight


def path_cost(rp: ReparamPath, spec: AgentSpec, lam: float) -> float:
    """Weighted travel time of the evaluated path prefix."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return lam * (rp.steps / spec.speed)


def select_path(spec: AgentSpec, candidates: Sequence[Candidate]) -> Candidate:
    if not candidates:
        raise NoCandidateError(f"agent {spec.id} has no candidate paths")
    best = min(range(len(candidates)), key=lambda k: (-candidates[k].utility, candidates[k].cost, k))
    return candidates[best]


def hold_candidate(spec: AgentSpec, cell) -> Candidate:
    path = Path((tuple(cell),))
    return Candidate(spec.id, tuple(cell), HOLD, ReparamPath(path, (0,), 1, 0), 0.0, 0.0)


def _as_cell(pose, dims: GridDims) -> tuple:
    if isinstance(pose, Pose):
        return dims.cell_of(pose.x, pose.y)
    return (int(pose[0]), int(pose[1]))


def plan_round(
    agents: Sequence[AgentSpec],
    poses: Sequence,
    grid: OccupancyGrid,
    horizon: float,
    params: PlannerParams = PlannerParams(),
    waypoints: Optional[Sequence[Waypoint]] = None,
    belief: Optional[TargetBelief] = None,
) -> PlanRound:
    """One round of sequential multi-agent path selection.

    ``poses`` is aligned with ``agents`` and may hold ``Pose`` objects or
    cells.  Waypoints are computed from ``grid`` unless supplied.
    """
    if not agents:
        raise ValueError("plan_round needs at least one agent")
    if len(poses) != len(agents):
        raise ValueError("poses must align with agents")
    dims = grid.dims
    if waypoints is None:
        waypoints = collect_waypoints(grid, params.min_cluster, params.min_cell_area, params.unknown_tol)

    if params.weighting == BELIEF_WEIGHTED and belief is not None:
        values = belief_weighted_values(grid, belief)
    else:
        values = grid.entropy_map()

    claimed = ClaimedCells(dims)
    selections, scored = [], []
    paths = {}
    order = sorted(range(len(agents)), key=lambda k: agents[k].rank)
    for k in order:
        spec = agents[k]
        start = _as_cell(poses[k], dims)
        open_values = np.where(claimed.mask, 0.0, values)
        candidates = []
        for wp in waypoints:
            key = (start, wp.cell)
            if key not in paths:
                try:
                    paths[key] = astar(grid, start, wp.cell, params.unknown_tol)
                except NoPathError:
                    paths[key] = None
            if paths[key] is None:
                continue
            rp = reparameterize(paths[key], spec, horizon, params.sample_period)
            ig = information_gain(rp, grid, None, spec.fov_range, params.ig_union, open_values)
            candidates.append(Candidate(spec.id, wp.cell, wp.kind, rp, ig, path_cost(rp, spec, params.lam)))
        scored.extend(candidates)
        best = select_path(spec, candidates) if candidates else hold_candidate(spec, start)
        selections.append(best)
        claimed.add(coverage_mask(best.path, spec.fov_range, dims))
    return PlanRound(selections, claimed, scored)
