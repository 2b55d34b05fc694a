"""Histogram (grid) Bayes filter over the target position.

The motion step shifts mass by an integer velocity and blurs it with a
truncated discrete Gaussian.  Mass that would fall outside the map is kept
inside by renormalizing each source cell's clipped kernel, so the target
can never leave the search region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from infosearch.gridworld import FovFootprint, GridDims, GridDomainError, OccupancyGrid, to_graymap

STATIC = "static"
CONST_VEL = "constvel"


class DegeneratePosteriorError(ArithmeticError):
    """All posterior mass was eliminated by the observations."""


@dataclass
class TargetBelief:
    dims: GridDims
    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != self.dims.shape:
            raise GridDomainError(f"belief shape {self.mass.shape} != {self.dims.shape}")

    @classmethod
    def uniform(cls, dims: GridDims) -> "TargetBelief":
        return cls(dims, np.full(dims.shape, 1.0 / dims.n_cells))

    @classmethod
    def delta(cls, dims: GridDims, cell) -> "TargetBelief":
        m = np.zeros(dims.shape)
        m[cell[0], cell[1]] = 1.0
        return cls(dims, m)

    def copy(self) -> "TargetBelief":
        return TargetBelief(self.dims, self.mass.copy())

    def __getitem__(self, cell) -> float:
        return float(self.mass[cell[0], cell[1]])

    def to_graymap(self, binary: bool = False) -> bytes:
        peak = self.mass.max()
        return to_graymap(self.mass / peak if peak > 0 else self.mass, binary=binary)


@dataclass(frozen=True)
class MotionModel:
    kind: str = STATIC
    velocity: tuple = (0, 0)
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in (STATIC, CONST_VEL):
            raise ValueError(f"unknown motion model kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if any(int(v) != v for v in self.velocity):
            raise ValueError(f"velocity must be integer cells/step, got {self.velocity}")

    @property
    def shift(self) -> tuple[int, int]:
        if self.kind == STATIC:
            return (0, 0)
        return (int(self.velocity[0]), int(self.velocity[1]))


@dataclass(frozen=True)
class SensorModel:
    p_detect: float = 0.9
    p_false: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p_false < self.p_detect <= 1.0):
            raise ValueError(
                f"sensor model needs 0 <= p_false < p_detect <= 1, got "
                f"p_detect={self.p_detect}, p_false={self.p_false}"
            )


@dataclass(frozen=True)
class Observation:
    agent: int
    fov: FovFootprint
    detected: Optional[tuple] = None

    def __post_init__(self):
        if self.detected is not None and tuple(self.detected) not in self.fov:
            raise ValueError(f"detected cell {self.detected} lies outside the observation footprint")


def kernel_radius(sigma: float) -> int:
    return int(math.ceil(3.0 * sigma))


def axis_transition(n: int, shift: int, sigma: float) -> np.ndarray:
    """1-D transition matrix ``T[src, dst]`` for shift-then-blur on ``n`` cells."""
    T = np.zeros((n, n))
    r = kernel_radius(sigma)
    for src in range(n):
        c = min(max(src + shift, 0), n - 1)
        if sigma == 0.0:
            T[src, c] = 1.0
            continue
        dst = np.arange(max(0, c - r), min(n, c + r + 1))
        k = np.exp(-0.5 * ((dst - c) / sigma) ** 2)
        T[src, dst] = k / k.sum()
    return T


def predict(belief: TargetBelief, model: MotionModel) -> TargetBelief:
    sx, sy = model.shift
    if model.sigma == 0.0 and sx == 0 and sy == 0:
        return belief.copy()
    # The 2-D kernel is separable and its clipped support is a rectangle, so
    # the per-source renormalization factors into the two axes.
    tx = axis_transition(belief.dims.width, sx, model.sigma)
    ty = axis_transition(belief.dims.height, sy, model.sigma)
    mass = tx.T @ belief.mass @ ty
    return TargetBelief(belief.dims, mass / mass.sum())


def likelihood(obs: Observation, sensor: SensorModel, dims: GridDims) -> np.ndarray:
    """p(y | x) for every hypothesised target cell x."""
    if obs.detected is None:
        lik = np.full(dims.shape, 1.0 - sensor.p_false)
        lik[obs.fov.slices] = 1.0 - sensor.p_detect
    else:
        lik = np.full(dims.shape, sensor.p_false)
        lik[obs.detected[0], obs.detected[1]] = sensor.p_detect
    return lik


def _normalize(unnorm: np.ndarray, dims: GridDims) -> TargetBelief:
    total = unnorm.sum()
    if not total > 0.0:
        raise DegeneratePosteriorError("observations leave zero posterior mass")
    return TargetBelief(dims, unnorm / total)


def correct(belief: TargetBelief, obs: Observation, sensor: SensorModel) -> TargetBelief:
    return _normalize(belief.mass * likelihood(obs, sensor, belief.dims), belief.dims)


def correct_all(
    belief: TargetBelief,
    observations: Sequence[Observation],
    sensors: Mapping[int, SensorModel] | Sequence[SensorModel],
) -> TargetBelief:
    """Joint correction with the product of per-agent likelihoods.

    Equivalent to chaining ``correct`` in agent order, but normalizes once so
    the result does not depend on that order beyond float rounding.
    """
    if not observations:
        return belief.copy()
    lik = np.ones(belief.dims.shape)
    for obs in observations:
        lik = lik * likelihood(obs, sensors[obs.agent], belief.dims)
    return _normalize(belief.mass * lik, belief.dims)


def reset_uniform_unknown(grid: OccupancyGrid, tol: float = 0.0) -> TargetBelief:
    """Uniform belief over unknown cells, falling back to free cells."""
    support = grid.unknown_mask(tol)
    if not support.any():
        support = grid.free_mask(tol)
    if not support.any():
        raise GridDomainError("grid has neither unknown nor free cells to spread belief over")
    return TargetBelief(grid.dims, support / support.sum())
