"""Scenario files: JSON schema, defaults and validation.

Validation errors carry the dotted path of the offending field, e.g.
``agents[1].rank``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path as FsPath
from typing import Optional

SCHEMA_VERSION = 1
MODES = ("single", "continuous")
TARGET_KINDS = ("static", "constvel")


class ScenarioError(Exception):
    exit_code = 2


class ScenarioParseError(ScenarioError):
    exit_code = 4


class ScenarioValidationError(ScenarioError):
    exit_code = 2

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass
class Obstacle:
    x: int
    y: int
    w: int
    h: int

    def cells(self):
        for i in range(self.x, self.x + self.w):
            for j in range(self.y, self.y + self.h):
                yield (i, j)


@dataclass
class StartPose:
    x: float
    y: float
    heading: float = 0.0


@dataclass
class AgentConfig:
    rank: int
    speed: float = 1.0  # m/s
    fov_range: int = 2  # cells
    start: Optional[StartPose] = None  # None: random free cell
    p_detect: float = 0.9
    p_false: float = 0.0


@dataclass
class TargetConfig:
    present: bool = True
    cell: Optional[tuple] = None  # None: uniform over free cells
    kind: str = "static"
    velocity: tuple = (0, 0)  # cells per motion tick
    sigma: float = 0.0


@dataclass
class PlannerConfig:
    sample_period: float = 2.0
    min_cluster: int = 3
    min_cell_area: int = 4
    ig_union: bool = True
    weighting: str = "entropy"
    unknown_tol: float = 0.1
    plan_dt: float = 1.0


@dataclass
class DwaConfig:
    dt: float = 0.1
    a_max: float = 0.5
    alpha_max: float = math.pi
    w_max: float = 2.0
    heading_weight: float = 1.0
    clearance_weight: float = 0.2
    velocity_weight: float = 0.2
    sim_horizon: float = 1.0
    v_samples: int = 7
    w_samples: int = 11
    clearance_cap: float = 1.0
    lookahead: int = 2  # path cells ahead of the next one to steer at


@dataclass
class ScenarioConfig:
    width: int
    height: int
    agents: list
    target: TargetConfig = field(default_factory=TargetConfig)
    resolution: float = 1.0
    obstacles: list = field(default_factory=list)
    name: str = "scenario"
    schema_version: int = SCHEMA_VERSION
    mode: str = "single"
    horizon: float = 20.0
    max_steps: int = 2000
    lam: float = 0.1
    beta: float = 0.005
    epsilon_h: float = 0.05  # fraction of the initial map entropy
    replan_interval: int = 20
    motion_period: int = 10
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    dwa: DwaConfig = field(default_factory=DwaConfig)

    def obstacle_cells(self) -> set:
        return {c for ob in self.obstacles for c in ob.cells()}


# -- parsing ---------------------------------------------------------------


def _get(d: dict, key: str, path: str, kind, default=..., check=None, what=""):
    if key not in d:
        if default is ...:
            raise ScenarioValidationError(f"{path}{key}", "required field missing")
        return copy.deepcopy(default)
    value = d[key]
    fp = f"{path}{key}"
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioValidationError(fp, f"expected true/false, got {value!r}")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioValidationError(fp, f"expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ScenarioValidationError(fp, f"expected a number, got {value!r}")
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            raise ScenarioValidationError(fp, f"expected a string, got {value!r}")
    if check is not None and not check(value):
        raise ScenarioValidationError(fp, f"must be {what}, got {value!r}")
    return value


def _reject_unknown(d: dict, allowed, path: str):
    for key in d:
        if key not in allowed:
            raise ScenarioValidationError(f"{path}{key}", "unknown field")


def _section(d: dict, key: str, path: str) -> dict:
    sub = d.get(key, {})
    if not isinstance(sub, dict):
        raise ScenarioValidationError(f"{path}{key}", "expected an object")
    return sub


def _cell(value, fp: str) -> tuple:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ScenarioValidationError(fp, f"expected [x, y] integers, got {value!r}")
    return (value[0], value[1])


def _dataclass_section(cls, d: dict, path: str):
    defaults = cls()
    kinds = {bool: bool, int: int, float: float, str: str}
    _reject_unknown(d, {f.name for f in fields(cls)}, path)
    out = {}
    for f in fields(cls):
        dv = getattr(defaults, f.name)
        out[f.name] = _get(d, f.name, path, kinds[type(dv)], dv)
    return cls(**out)


def parse_scenario(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioValidationError("<root>", "expected an object")
    top = {
        "schema_version", "name", "map", "agents", "target", "mode", "horizon", "max_steps",
        "lambda", "beta", "epsilon_h", "replan_interval", "motion_period", "planner", "dwa",
    }
    _reject_unknown(data, top, "")
    version = _get(data, "schema_version", "", int, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioValidationError("schema_version", f"unsupported version {version}")

    m = _section(data, "map", "")
    if "map" not in data:
        raise ScenarioValidationError("map", "required field missing")
    _reject_unknown(m, {"width", "height", "resolution", "obstacles"}, "map.")
    width = _get(m, "width", "map.", int, check=lambda v: v >= 1, what=">= 1")
    height = _get(m, "height", "map.", int, check=lambda v: v >= 1, what=">= 1")
    resolution = _get(m, "resolution", "map.", float, 1.0, lambda v: v > 0, "> 0")
    raw_obs = m.get("obstacles", [])
    if not isinstance(raw_obs, list):
        raise ScenarioValidationError("map.obstacles", "expected a list")
    obstacles = []
    for k, ob in enumerate(raw_obs):
        p = f"map.obstacles[{k}]."
        if not isinstance(ob, dict):
            raise ScenarioValidationError(p[:-1], "expected an object")
        _reject_unknown(ob, {"x", "y", "w", "h"}, p)
        x = _get(ob, "x", p, int, check=lambda v: 0 <= v < width, what="inside the map")
        y = _get(ob, "y", p, int, check=lambda v: 0 <= v < height, what="inside the map")
        w = _get(ob, "w", p, int, check=lambda v: 1 <= v <= width - x, what="within the map")
        h = _get(ob, "h", p, int, check=lambda v: 1 <= v <= height - y, what="within the map")
        obstacles.append(Obstacle(x, y, w, h))
    blocked = {c for ob in obstacles for c in ob.cells()}

    raw_agents = data.get("agents")
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ScenarioValidationError("agents", "expected a non-empty list")
    agents = []
    seen_ranks = {}
    for k, a in enumerate(raw_agents):
        p = f"agents[{k}]."
        if not isinstance(a, dict):
            raise ScenarioValidationError(p[:-1], "expected an object")
        _reject_unknown(a, {"rank", "speed", "fov_range", "start", "p_detect", "p_false"}, p)
        rank = _get(a, "rank", p, int, k, lambda v: 0 <= v < len(raw_agents), f"in 0..{len(raw_agents) - 1}")
        if rank in seen_ranks:
            raise ScenarioValidationError(f"{p}rank", f"duplicates the rank of agents[{seen_ranks[rank]}]")
        seen_ranks[rank] = k
        speed = _get(a, "speed", p, float, 1.0, lambda v: v > 0, "> 0")
        fov_range = _get(a, "fov_range", p, int, 2, lambda v: v >= 0, ">= 0")
        p_detect = _get(a, "p_detect", p, float, 0.9, lambda v: 0 < v <= 1, "in (0, 1]")
        p_false = _get(a, "p_false", p, float, 0.0, lambda v: 0 <= v < p_detect, "in [0, p_detect)")
        start = None
        if a.get("start") is not None:
            s = a["start"]
            sp = f"{p}start."
            if not isinstance(s, dict):
                raise ScenarioValidationError(sp[:-1], "expected an object or null")
            _reject_unknown(s, {"x", "y", "heading"}, sp)
            sx = _get(s, "x", sp, float, check=lambda v: 0 <= v < width * resolution, what="inside the map")
            sy = _get(s, "y", sp, float, check=lambda v: 0 <= v < height * resolution, what="inside the map")
            sh = _get(s, "heading", sp, float, 0.0, lambda v: -math.pi < v <= math.pi, "in (-pi, pi]")
            cell = (int(math.floor(sx / resolution)), int(math.floor(sy / resolution)))
            if cell in blocked:
                raise ScenarioValidationError(sp[:-1], f"start cell {cell} is inside an obstacle")
            start = StartPose(sx, sy, sh)
        agents.append(AgentConfig(rank, speed, fov_range, start, p_detect, p_false))

    t = _section(data, "target", "")
    _reject_unknown(t, {"present", "cell", "kind", "velocity", "sigma"}, "target.")
    present = _get(t, "present", "target.", bool, True)
    cell = None
    if t.get("cell") is not None:
        cell = _cell(t["cell"], "target.cell")
        if not (0 <= cell[0] < width and 0 <= cell[1] < height):
            raise ScenarioValidationError("target.cell", "outside the map")
        if cell in blocked:
            raise ScenarioValidationError("target.cell", "inside an obstacle")
    kind = _get(t, "kind", "target.", str, "static", lambda v: v in TARGET_KINDS, f"one of {TARGET_KINDS}")
    velocity = _cell(t["velocity"], "target.velocity") if "velocity" in t else (0, 0)
    sigma = _get(t, "sigma", "target.", float, 0.0, lambda v: v >= 0, ">= 0")
    target = TargetConfig(present, cell, kind, velocity, sigma)

    cfg = ScenarioConfig(
        width=width,
        height=height,
        agents=agents,
        target=target,
        resolution=resolution,
        obstacles=obstacles,
        name=_get(data, "name", "", str, "scenario"),
        schema_version=version,
        mode=_get(data, "mode", "", str, "single", lambda v: v in MODES, f"one of {MODES}"),
        horizon=_get(data, "horizon", "", float, 20.0, lambda v: v > 0, "> 0"),
        max_steps=_get(data, "max_steps", "", int, 2000, lambda v: v >= 0, ">= 0"),
        lam=_get(data, "lambda", "", float, 0.1, lambda v: v >= 0, ">= 0"),
        beta=_get(data, "beta", "", float, 0.005, lambda v: 0 <= v <= 1, "in [0, 1]"),
        epsilon_h=_get(data, "epsilon_h", "", float, 0.05, lambda v: 0 <= v <= 1, "in [0, 1]"),
        replan_interval=_get(data, "replan_interval", "", int, 20, lambda v: v >= 1, ">= 1"),
        motion_period=_get(data, "motion_period", "", int, 10, lambda v: v >= 1, ">= 1"),
        planner=_dataclass_section(PlannerConfig, _section(data, "planner", ""), "planner."),
        dwa=_dataclass_section(DwaConfig, _section(data, "dwa", ""), "dwa."),
    )
    _check_tunables(cfg)
    return cfg


def _check_tunables(cfg: ScenarioConfig):
    pl, dw = cfg.planner, cfg.dwa
    checks = [
        ("planner.sample_period", pl.sample_period > 0, "> 0"),
        ("planner.min_cluster", pl.min_cluster >= 1, ">= 1"),
        ("planner.min_cell_area", pl.min_cell_area >= 1, ">= 1"),
        ("planner.weighting", pl.weighting in ("entropy", "belief"), "'entropy' or 'belief'"),
        ("planner.unknown_tol", 0 <= pl.unknown_tol < 0.5, "in [0, 0.5)"),
        ("planner.plan_dt", pl.plan_dt > 0, "> 0"),
        ("dwa.dt", dw.dt > 0, "> 0"),
        ("dwa.a_max", dw.a_max > 0, "> 0"),
        ("dwa.alpha_max", dw.alpha_max > 0, "> 0"),
        ("dwa.w_max", dw.w_max > 0, "> 0"),
        ("dwa.sim_horizon", dw.sim_horizon >= dw.dt, ">= dwa.dt"),
        ("dwa.v_samples", dw.v_samples >= 2, ">= 2"),
        ("dwa.w_samples", dw.w_samples >= 2, ">= 2"),
        ("dwa.clearance_cap", dw.clearance_cap > 0, "> 0"),
        ("dwa.lookahead", dw.lookahead >= 0, ">= 0"),
    ]
    for fp, ok, what in checks:
        if not ok:
            raise ScenarioValidationError(fp, f"must be {what}")


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of :func:`parse_scenario`; every default is written out."""
    return {
        "schema_version": cfg.schema_version,
        "name": cfg.name,
        "map": {
            "width": cfg.width,
            "height": cfg.height,
            "resolution": cfg.resolution,
            "obstacles": [asdict(ob) for ob in cfg.obstacles],
        },
        "agents": [
            {
                "rank": a.rank,
                "speed": a.speed,
                "fov_range": a.fov_range,
                "start": None if a.start is None else asdict(a.start),
                "p_detect": a.p_detect,
                "p_false": a.p_false,
            }
            for a in cfg.agents
        ],
        "target": {
            "present": cfg.target.present,
            "cell": None if cfg.target.cell is None else list(cfg.target.cell),
            "kind": cfg.target.kind,
            "velocity": list(cfg.target.velocity),
            "sigma": cfg.target.sigma,
        },
        "mode": cfg.mode,
        "horizon": cfg.horizon,
        "max_steps": cfg.max_steps,
        "lambda": cfg.lam,
        "beta": cfg.beta,
        "epsilon_h": cfg.epsilon_h,
        "replan_interval": cfg.replan_interval,
        "motion_period": cfg.motion_period,
        "planner": asdict(cfg.planner),
        "dwa": asdict(cfg.dwa),
    }


def builtin_scenarios() -> list:
    root = resources.files("infosearch") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name_or_path) -> FsPath:
    """Accept a file path or the name of a shipped scenario (``fig4``)."""
    p = FsPath(name_or_path)
    if p.exists():
        return p
    shipped = resources.files("infosearch") / "scenarios" / f"{p.stem}.json"
    if p.parent == FsPath(".") or p.parent.name == "scenarios":
        if shipped.is_file():
            return FsPath(str(shipped))
    raise FileNotFoundError(f"scenario not found: {name_or_path}")


def load_scenario(path) -> ScenarioConfig:
    path = resolve_scenario_path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: invalid JSON: {e}") from e
    return parse_scenario(data)


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario_to_dict(cfg), f, indent=2)
        f.write("\n")
