"""Deterministic multi-robot search simulation.

Agents are unicycles driven by a dynamic-window controller along the grid
paths chosen by :func:`infosearch.selection.plan_round`.  All randomness
(start cells, target placement, detections) comes from one seeded
``numpy.random.Generator`` owned by the world.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from infosearch.belief import (
    DegeneratePosteriorError,
    MotionModel,
    Observation,
    SensorModel,
    TargetBelief,
    correct_all,
    predict,
    reset_uniform_unknown,
)
from infosearch.config import DwaConfig, ScenarioConfig
from infosearch.gridworld import (
    GridDims,
    OccupancyGrid,
    Pose,
    decay_to_unknown,
    fov_cells,
    obstacle_mask,
    observe,
    total_entropy,
)
from infosearch.selection import (
    HOLD,
    AgentSpec,
    Candidate,
    PlannerParams,
    information_gain,
    plan_round,
)

log = logging.getLogger(__name__)

SINGLE = "single"
CONTINUOUS = "continuous"
RESIDUAL_FRACTION = 0.1


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass
class AgentState:
    spec: AgentSpec
    pose: Pose
    max_speed: float  # m/s
    v: float = 0.0
    w: float = 0.0
    plan: Optional[Candidate] = None
    progress: int = 0  # index of the next path cell to reach

    @property
    def path_cells(self) -> tuple:
        return self.plan.path.source.cells if self.plan is not None else ()

    @property
    def at_goal(self) -> bool:
        return self.plan is not None and self.progress >= len(self.path_cells)


@dataclass
class TargetState:
    cell: Optional[tuple]
    model: MotionModel
    velocity: tuple = (0, 0)
    found: bool = False

    @property
    def present(self) -> bool:
        return self.cell is not None


@dataclass
class Metrics:
    entropy: list = field(default_factory=list)
    trajectories: list = field(default_factory=list)  # per agent, one Pose per step
    search_time: Optional[int] = None
    initial_entropy: float = 0.0
    replans: int = 0
    plan_latencies: list = field(default_factory=list, compare=False)

    @property
    def steps(self) -> int:
        return len(self.entropy)

    @property
    def entropy_reduction_rate(self) -> float:
        if not self.entropy:
            return 0.0
        return (self.initial_entropy - self.entropy[-1]) / len(self.entropy)


@dataclass
class World:
    config: ScenarioConfig
    grid: OccupancyGrid
    truth: np.ndarray
    belief: TargetBelief
    agents: list
    target: TargetState
    rng: np.random.Generator
    mode: str = SINGLE
    clock: int = 0
    since_replan: int = 0
    metrics: Metrics = field(default_factory=Metrics)
    on_round: Optional[Callable] = None  # called as on_round(world, PlanRound)

    @property
    def dims(self) -> GridDims:
        return self.grid.dims

    @property
    def params(self) -> PlannerParams:
        cfg = self.config
        return PlannerParams(
            lam=cfg.lam,
            sample_period=cfg.planner.sample_period,
            min_cluster=cfg.planner.min_cluster,
            min_cell_area=cfg.planner.min_cell_area,
            ig_union=cfg.planner.ig_union,
            weighting=cfg.planner.weighting,
            unknown_tol=cfg.planner.unknown_tol,
        )


# -- dynamic window ----------------------------------------------------------


def clearance_map(grid: OccupancyGrid, tol: float = 0.0) -> Optional[np.ndarray]:
    """Metric distance from each cell to the nearest known-occupied cell."""
    occ = grid.occupied_mask(tol)
    if not occ.any():
        return None
    return ndimage.distance_transform_edt(~occ) * grid.dims.resolution


def dwa_control(
    agent: AgentState,
    goal: tuple,
    grid: OccupancyGrid,
    dt: float,
    params: DwaConfig = DwaConfig(),
    clearance: Optional[np.ndarray] = ...,
    tol: float = 0.0,
) -> tuple:
    """Pick ``(v, w)`` from the reachable velocity window toward ``goal``.

    ``goal`` is a grid cell.  Each sampled pair is rolled out for
    ``params.sim_horizon`` seconds; rollouts touching a known-occupied cell
    or leaving the map are discarded.  The heading term rewards progress
    toward the goal cell's centre (distance closed over the rollout, scaled
    by the best achievable) and is maximal for rollouts that pass through
    the goal cell.  Ties go to the lowest sample index.
    """
    dims = grid.dims
    if clearance is ...:
        clearance = clearance_map(grid, tol)
    occupied = grid.occupied_mask(tol)
    vmax = agent.max_speed
    v_lo = max(0.0, agent.v - params.a_max * dt)
    v_hi = min(vmax, agent.v + params.a_max * dt)
    w_lo = max(-params.w_max, agent.w - params.alpha_max * dt)
    w_hi = min(params.w_max, agent.w + params.alpha_max * dt)
    vs = np.linspace(v_lo, v_hi, params.v_samples)
    ws = np.linspace(w_lo, w_hi, params.w_samples)
    V, W = (a.ravel() for a in np.meshgrid(vs, ws, indexing="ij"))

    n = max(1, int(round(params.sim_horizon / dt)))
    k = np.arange(n)
    # heading before each Euler sub-step, then positions after it
    theta = agent.pose.heading + np.outer(W, k) * dt
    xs = agent.pose.x + np.cumsum(V[:, None] * np.cos(theta) * dt, axis=1)
    ys = agent.pose.y + np.cumsum(V[:, None] * np.sin(theta) * dt, axis=1)

    ci = np.floor(xs / dims.resolution).astype(int)
    cj = np.floor(ys / dims.resolution).astype(int)
    inside = (ci >= 0) & (cj >= 0) & (ci < dims.width) & (cj < dims.height)
    ci_c = np.clip(ci, 0, dims.width - 1)
    cj_c = np.clip(cj, 0, dims.height - 1)
    collide = ~inside | occupied[ci_c, cj_c]
    valid = ~collide.any(axis=1)
    if not valid.any():
        return 0.0, params.alpha_max * dt

    gx, gy = dims.cell_center(goal)
    reach = max(vmax, 1e-9) * n * dt
    d0 = math.hypot(gx - agent.pose.x, gy - agent.pose.y)
    d1 = np.hypot(gx - xs[:, -1], gy - ys[:, -1])
    heading_score = 0.5 + 0.5 * np.clip((d0 - d1) / reach, -1.0, 1.0)
    reaches = ((ci == goal[0]) & (cj == goal[1])).any(axis=1)
    heading_score = np.where(reaches, 1.0, heading_score)
    if clearance is None:
        clear_score = np.ones_like(V)
    else:
        clear_score = np.minimum(clearance[ci_c, cj_c].min(axis=1), params.clearance_cap) / params.clearance_cap
    vel_score = V / vmax if vmax > 0 else np.zeros_like(V)
    score = (
        params.heading_weight * heading_score
        + params.clearance_weight * clear_score
        + params.velocity_weight * vel_score
    )
    score = np.where(valid, score, -np.inf)
    best = int(np.argmax(score))
    return float(V[best]), float(W[best])


# -- world construction ------------------------------------------------------


def _random_free_cell(rng: np.random.Generator, free: np.ndarray) -> tuple:
    cells = np.argwhere(free)
    i, j = cells[rng.integers(len(cells))]
    return (int(i), int(j))


def planner_speed(speed_mps: float, cfg: ScenarioConfig) -> float:
    """Convert m/s to cells per planning step."""
    return speed_mps * cfg.planner.plan_dt / cfg.resolution


def build_world(cfg: ScenarioConfig, seed: int) -> World:
    rng = np.random.default_rng(seed)
    dims = GridDims(cfg.width, cfg.height, cfg.resolution)
    truth = obstacle_mask(cfg.obstacle_cells(), dims)
    free = ~truth
    if not free.any():
        raise ValueError("scenario has no free cells")

    agents = []
    for idx, a in enumerate(cfg.agents):
        if a.start is None:
            cell = _random_free_cell(rng, free)
            x, y = dims.cell_center(cell)
            pose = Pose(x, y, wrap_angle(float(rng.uniform(-math.pi, math.pi))))
        else:
            pose = Pose(a.start.x, a.start.y, a.start.heading)
        spec = AgentSpec(
            id=idx,
            rank=a.rank,
            speed=planner_speed(a.speed, cfg),
            fov_range=a.fov_range,
            sensor=SensorModel(a.p_detect, a.p_false),
        )
        agents.append(AgentState(spec, pose, a.speed))

    t = cfg.target
    model = MotionModel(t.kind, tuple(t.velocity), t.sigma)
    cell = None
    if t.present:
        cell = tuple(t.cell) if t.cell is not None else _random_free_cell(rng, free)
    target = TargetState(cell, model, model.shift)

    grid = OccupancyGrid(dims)
    world = World(
        config=cfg,
        grid=grid,
        truth=truth,
        belief=reset_uniform_unknown(grid),
        agents=agents,
        target=target,
        rng=rng,
        mode=cfg.mode,
    )
    world.metrics.initial_entropy = total_entropy(grid)
    world.metrics.trajectories = [[] for _ in agents]
    return world


# -- stepping ----------------------------------------------------------------


def _record(world: World) -> None:
    m = world.metrics
    m.entropy.append(total_entropy(world.grid))
    for a, traj in zip(world.agents, m.trajectories):
        traj.append(a.pose)


def _sense(world: World) -> tuple:
    """Occupancy and target observations for every agent; returns
    (observations, true_positive)."""
    dims = world.dims
    observations = []
    hit = False
    for a in world.agents:
        fov = fov_cells(a.pose, a.spec.fov_range, dims)
        world.grid = observe(world.grid, fov, world.truth)
        sensor = a.spec.sensor
        detected = None
        tgt = world.target
        if tgt.present and tgt.cell in fov and world.rng.random() < sensor.p_detect:
            detected = tgt.cell
            hit = True
        elif world.rng.random() < sensor.p_false:
            cells = list(fov)
            detected = cells[int(world.rng.integers(len(cells)))]
        observations.append(Observation(a.spec.id, fov, detected))
    return observations, hit


def _advance_progress(world: World, a: AgentState) -> None:
    cells = a.path_cells
    if not cells:
        return
    dims = world.dims
    here = dims.cell_of(a.pose.x, a.pose.y)
    # entering a cell counts as reaching it; skip ahead when the agent
    # already stands on a later path cell
    for k in range(len(cells) - 1, a.progress - 1, -1):
        if cells[k] == here:
            a.progress = k + 1
            break


def _residual_ig(world: World, a: AgentState) -> float:
    rp = a.plan.path
    remaining = [i for i in rp.indices if i >= a.progress]
    if not remaining:
        return 0.0
    sub = type(rp)(rp.source, tuple(remaining), rp.ds, rp.steps)
    return information_gain(sub, world.grid, None, a.spec.fov_range, world.config.planner.ig_union)


def needs_replan(world: World) -> bool:
    if world.since_replan >= world.config.replan_interval:
        return True
    occupied = world.grid.occupied_mask(world.config.planner.unknown_tol)
    for a in world.agents:
        if a.plan is None:
            return True
        if a.plan.kind == HOLD:
            continue
        if a.at_goal:
            return True
        if any(occupied[c] for c in a.path_cells[a.progress:]):
            return True
        if a.plan.ig > 0 and _residual_ig(world, a) < RESIDUAL_FRACTION * a.plan.ig:
            return True
    return False


def replan(world: World) -> None:
    t0 = time.perf_counter()
    rnd = plan_round(
        [a.spec for a in world.agents],
        [a.pose for a in world.agents],
        world.grid,
        world.config.horizon,
        world.params,
        belief=world.belief,
    )
    world.metrics.plan_latencies.append(time.perf_counter() - t0)
    world.metrics.replans += 1
    if world.on_round is not None:
        world.on_round(world, rnd)
    for a in world.agents:
        a.plan = rnd.for_agent(a.spec.id)
        a.progress = 1 if len(a.path_cells) > 1 else 0
        _advance_progress(world, a)
    world.since_replan = 0


def _move_agents(world: World) -> None:
    dims = world.dims
    dw = world.config.dwa
    tol = world.config.planner.unknown_tol
    clearance = clearance_map(world.grid, tol)
    occupied = world.grid.occupied_mask(tol)
    for a in world.agents:
        cells = a.path_cells
        if not cells or a.progress >= len(cells):
            # hold: bleed off speed in place
            a.v = max(0.0, a.v - dw.a_max * dw.dt)
            a.w = 0.0
            if a.v == 0.0:
                continue
            v, w = a.v, 0.0
        else:
            goal = cells[min(a.progress + dw.lookahead, len(cells) - 1)]
            v, w = dwa_control(a, goal, world.grid, dw.dt, dw, clearance, tol)
        x = a.pose.x + v * math.cos(a.pose.heading) * dw.dt
        y = a.pose.y + v * math.sin(a.pose.heading) * dw.dt
        heading = wrap_angle(a.pose.heading + w * dw.dt)
        cell = dims.cell_of(x, y)
        if not dims.contains(cell) or world.truth[cell] or occupied[cell]:
            x, y, v = a.pose.x, a.pose.y, 0.0
        a.pose = Pose(x, y, heading)
        a.v, a.w = v, w
        _advance_progress(world, a)


def _move_target(world: World) -> None:
    tgt = world.target
    if not tgt.present or tgt.model.kind != "constvel":
        return
    dims = world.dims
    pos = list(tgt.cell)
    vel = list(tgt.velocity)
    for ax, n in ((0, dims.width), (1, dims.height)):
        nxt = pos[ax] + vel[ax]
        if nxt < 0 or nxt >= n:
            vel[ax] = -vel[ax]
            nxt = min(max(pos[ax] + vel[ax], 0), n - 1)
        pos[ax] = nxt
    if world.truth[pos[0], pos[1]]:
        vel = [-vel[0], -vel[1]]
        pos = list(tgt.cell)
    tgt.cell = (pos[0], pos[1])
    tgt.velocity = (vel[0], vel[1])


def step(world: World) -> World:
    """Advance the world by one control period (mutates and returns it)."""
    cfg = world.config
    if world.mode == SINGLE and world.target.found:
        _record(world)
        world.clock += 1
        return world

    observations, hit = _sense(world)
    sensors = {a.spec.id: a.spec.sensor for a in world.agents}
    motion_tick = (world.clock + 1) % cfg.motion_period == 0
    try:
        world.belief = correct_all(world.belief, observations, sensors)
    except DegeneratePosteriorError:
        log.debug("step %d: degenerate posterior, resetting belief", world.clock)
        world.belief = reset_uniform_unknown(world.grid, cfg.planner.unknown_tol)
    if motion_tick:
        world.belief = predict(world.belief, world.target.model)

    if world.mode == CONTINUOUS:
        world.grid = decay_to_unknown(world.grid, cfg.beta)

    if needs_replan(world):
        replan(world)
    _move_agents(world)
    if motion_tick:
        _move_target(world)

    if hit and not world.target.found:
        world.target.found = True
        world.metrics.search_time = world.clock + 1
    _record(world)
    world.since_replan += 1
    world.clock += 1
    return world


def run(
    cfg: ScenarioConfig,
    seed: int,
    world: Optional[World] = None,
    on_step: Optional[Callable] = None,
) -> Metrics:
    """Single mode stops at detection, at the entropy threshold or at
    ``max_steps``; continuous mode always runs ``max_steps`` steps."""
    world = world or build_world(cfg, seed)
    threshold = cfg.epsilon_h * world.metrics.initial_entropy
    while world.clock < cfg.max_steps:
        step(world)
        if on_step is not None:
            on_step(world)
        if world.mode == SINGLE:
            if world.target.found or world.metrics.entropy[-1] < threshold:
                break
    return world.metrics
