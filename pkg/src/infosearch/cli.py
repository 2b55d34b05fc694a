"""Command line front end: ``run``, ``batch`` and ``validate``.

Exit codes: 0 success, 2 invalid scenario, 3 runtime failure, 4 scenario
file that is not valid JSON.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath

import numpy as np

from infosearch import sim
from infosearch.config import (
    ScenarioConfig,
    ScenarioError,
    StartPose,
    builtin_scenarios,
    load_scenario,
    scenario_to_dict,
)

log = logging.getLogger("infosearch")

OUT_ENV = "INFOSEARCH_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


# -- scenario overrides --------------------------------------------------------


def with_agent_count(cfg: ScenarioConfig, n: int, seed: int = 0) -> ScenarioConfig:
    """Keep the ``n`` highest-ranked agents, or clone the lowest-ranked one
    at jittered start cells until there are ``n``."""
    if n < 1:
        raise ValueError("agent count must be >= 1")
    ordered = sorted(cfg.agents, key=lambda a: a.rank)
    if n <= len(ordered):
        agents = [dataclasses.replace(a, rank=k) for k, a in enumerate(ordered[:n])]
        return dataclasses.replace(cfg, agents=agents)

    rng = np.random.default_rng([seed, n])
    blocked = cfg.obstacle_cells()
    taken = set()
    for a in ordered:
        if a.start is not None:
            taken.add((int(a.start.x // cfg.resolution), int(a.start.y // cfg.resolution)))
    last = ordered[-1]
    agents = list(ordered)
    for rank in range(len(ordered), n):
        start = None
        if last.start is not None:
            cx = int(last.start.x // cfg.resolution)
            cy = int(last.start.y // cfg.resolution)
            for _ in range(50):
                i = cx + int(rng.integers(-2, 3))
                j = cy + int(rng.integers(-2, 3))
                if 0 <= i < cfg.width and 0 <= j < cfg.height and (i, j) not in blocked | taken:
                    taken.add((i, j))
                    start = StartPose((i + 0.5) * cfg.resolution, (j + 0.5) * cfg.resolution,
                                      float(rng.uniform(-math.pi, math.pi)))
                    break
        agents.append(dataclasses.replace(last, rank=rank, start=start))
    return dataclasses.replace(cfg, agents=agents)


def apply_overrides(cfg: ScenarioConfig, args, seed: int) -> ScenarioConfig:
    if getattr(args, "mode", None):
        cfg = dataclasses.replace(cfg, mode=args.mode)
    if getattr(args, "max_steps", None) is not None:
        cfg = dataclasses.replace(cfg, max_steps=args.max_steps)
    if getattr(args, "agents", None):
        cfg = with_agent_count(cfg, args.agents, seed)
    return cfg


# -- output helpers ------------------------------------------------------------


def _sha256(path: FsPath) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: FsPath, files: list) -> FsPath:
    entries = []
    for rel in sorted(files):
        p = out_dir / rel
        entries.append({"path": rel, "sha256": _sha256(p), "bytes": p.stat().st_size})
    path = out_dir / "manifest.json"
    path.write_text(json.dumps({"files": entries}, indent=2) + "\n", encoding="utf-8")
    return path


def _metrics_lines(metrics: sim.Metrics) -> str:
    buf = io.StringIO()
    for k, h in enumerate(metrics.entropy):
        poses = [[p.x, p.y, p.heading] for p in (tr[k] for tr in metrics.trajectories)]
        buf.write(json.dumps({"clock": k + 1, "total_entropy": h, "poses": poses}) + "\n")
    return buf.getvalue()


def _trajectory_csv(metrics: sim.Metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "agent", "x", "y", "theta"])
    for k in range(metrics.steps):
        for agent, tr in enumerate(metrics.trajectories):
            p = tr[k]
            w.writerow([k + 1, agent, repr(p.x), repr(p.y), repr(p.heading)])
    return buf.getvalue()


def summary_record(cfg: ScenarioConfig, seed: int, metrics: sim.Metrics) -> dict:
    return {
        "scenario": cfg.name,
        "seed": seed,
        "mode": cfg.mode,
        "agents": len(cfg.agents),
        "steps": metrics.steps,
        "found": metrics.search_time is not None,
        "search_time_steps": metrics.search_time,
        "search_time_s": None if metrics.search_time is None else metrics.search_time * cfg.dwa.dt,
        "initial_entropy": metrics.initial_entropy,
        "final_entropy": metrics.entropy[-1] if metrics.entropy else metrics.initial_entropy,
        "entropy_reduction_rate": metrics.entropy_reduction_rate,
        "replans": metrics.replans,
    }


def plot_trajectories(world: sim.World, path: FsPath) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "infosearch"
    dims = world.dims
    extent = (0, dims.width * dims.resolution, 0, dims.height * dims.resolution)
    fig, ax = plt.subplots(figsize=(6, 6 * dims.height / dims.width + 0.5))
    ax.imshow(world.truth.T, origin="lower", extent=extent, cmap="Greys", vmin=0, vmax=1.5)
    colors = plt.get_cmap("tab10")
    for k, tr in enumerate(world.metrics.trajectories):
        if not tr:
            continue
        ax.plot([p.x for p in tr], [p.y for p in tr], color=colors(k % 10), lw=1.4, label=f"agent {k}")
        ax.plot(tr[0].x, tr[0].y, "o", color=colors(k % 10), ms=4)
    if world.target.cell is not None:
        tx, ty = dims.cell_center(world.target.cell)
        ax.plot(tx, ty, "s", color="red", ms=7, label="target")
    ax.set_xlim(extent[0], extent[1])
    ax.set_ylim(extent[2], extent[3])
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper right", fontsize=7)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_run(
    cfg: ScenarioConfig,
    seed: int,
    out_dir,
    snapshot_every: int = 0,
    plot: bool = False,
    dump_rounds: bool = False,
) -> dict:
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    world = sim.build_world(cfg, seed)

    rounds = []
    if dump_rounds:
        world.on_round = lambda w, rnd: rounds.append({"clock": w.clock, "candidates": rnd.records()})

    def snapshot(w: sim.World):
        from infosearch.gridworld import to_graymap

        if snapshot_every and w.clock % snapshot_every == 0:
            snap = out_dir / "snapshots"
            snap.mkdir(exist_ok=True)
            for name, data in (("map", to_graymap(w.grid.cells)), ("belief", w.belief.to_graymap())):
                rel = f"snapshots/{name}_{w.clock:06d}.pgm"
                (out_dir / rel).write_bytes(data)
                files.append(rel)

    metrics = sim.run(cfg, seed, world, on_step=snapshot if snapshot_every else None)

    (out_dir / "metrics.jsonl").write_text(_metrics_lines(metrics), encoding="utf-8")
    (out_dir / "trajectory.csv").write_text(_trajectory_csv(metrics), encoding="utf-8")
    summary = summary_record(cfg, seed, metrics)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    (out_dir / "scenario.json").write_text(json.dumps(scenario_to_dict(cfg), indent=2) + "\n", encoding="utf-8")
    files += ["metrics.jsonl", "trajectory.csv", "summary.json", "scenario.json"]
    if dump_rounds:
        (out_dir / "rounds.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rounds), encoding="utf-8")
        files.append("rounds.jsonl")
    if plot:
        plot_trajectories(world, out_dir / "trajectories.svg")
        files.append("trajectories.svg")
    write_manifest(out_dir, files)
    return summary


def _batch_job(job):
    cfg, n, seed = job
    metrics = sim.run(with_agent_count(cfg, n, seed), seed)
    return n, seed, metrics.search_time, list(metrics.plan_latencies), metrics.entropy_reduction_rate


def _percentile(values, q):
    return float(np.percentile(values, q)) if values else float("nan")


def cmd_batch(cfg: ScenarioConfig, seeds, agent_counts, jobs: int = 1) -> list:
    """Run every (agent count, seed) pair; one summary row per agent count."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("batch needs at least one seed")
    work = [(cfg, n, s) for n in agent_counts for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_job, work))
    else:
        results = [_batch_job(w) for w in work]

    rows = []
    for n in agent_counts:
        mine = [r for r in results if r[0] == n]
        times = sorted(r[2] for r in mine if r[2] is not None)
        lat_ms = sorted(x * 1000.0 for r in mine for x in r[3])
        rates = sorted(r[4] for r in mine)
        rows.append({
            "agents": n,
            "runs": len(mine),
            "found": len(times),
            "mean_search_time_steps": math.fsum(times) / len(times) if times else None,
            "std_search_time_steps": statistics.stdev(times) if len(times) > 1 else 0.0 if times else None,
            "mean_search_time_s": math.fsum(times) * cfg.dwa.dt / len(times) if times else None,
            "mean_entropy_rate": math.fsum(rates) / len(rates),
            "latency_p50_ms": _percentile(lat_ms, 50),
            "latency_p90_ms": _percentile(lat_ms, 90),
            "latency_p99_ms": _percentile(lat_ms, 99),
            "latency_max_ms": max(lat_ms) if lat_ms else float("nan"),
        })
    return rows


def format_table(rows: list) -> str:
    cols = list(rows[0].keys())
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def parse_seeds(text: str) -> list:
    """``"20"`` -> 0..19, ``"5:10"`` -> 5..9, ``"1,4,9"`` -> those seeds."""
    if ":" in text:
        a, b = text.split(":", 1)
        return list(range(int(a), int(b)))
    if "," in text:
        return [int(s) for s in text.split(",") if s]
    return list(range(int(text)))


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infosearch", description="Multi-agent information-theoretic target search")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def scenario_arg(p):
        p.add_argument("--scenario", required=True,
                       help=f"scenario file or shipped name ({', '.join(builtin_scenarios())})")

    run_p = sub.add_parser("run", help="simulate one seed and write run artifacts")
    scenario_arg(run_p)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./runs)")
    run_p.add_argument("--mode", choices=["single", "continuous"])
    run_p.add_argument("--max-steps", type=int)
    run_p.add_argument("--agents", type=int, help="override the number of agents")
    run_p.add_argument("--snapshot-every", type=int, default=0, help="write map/belief PGMs every K steps")
    run_p.add_argument("--plot", action="store_true", help="write trajectories.svg")
    run_p.add_argument("--dump-rounds", action="store_true", help="write every scored candidate to rounds.jsonl")

    batch_p = sub.add_parser("batch", help="mean search time per agent count over many seeds")
    scenario_arg(batch_p)
    batch_p.add_argument("--seeds", default="20", help="N, A:B or a comma list")
    batch_p.add_argument("--agent-counts", default=None, help="comma list, default: the scenario's count")
    batch_p.add_argument("--mode", choices=["single", "continuous"])
    batch_p.add_argument("--max-steps", type=int)
    batch_p.add_argument("--jobs", type=int, default=1)
    batch_p.add_argument("--out", default=None, help="directory for batch.csv / batch.json")

    val_p = sub.add_parser("validate", help="check a scenario file and print it with defaults filled in")
    scenario_arg(val_p)
    return ap


def _default_out(cfg: ScenarioConfig, seed: int) -> FsPath:
    return FsPath(os.environ.get(OUT_ENV, "runs")) / f"{cfg.name}_seed{seed}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_scenario(args.scenario)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.cmd == "validate":
            print(json.dumps(scenario_to_dict(cfg), indent=2))
            return EXIT_OK
        if args.cmd == "run":
            cfg = apply_overrides(cfg, args, args.seed)
            out = FsPath(args.out) if args.out else _default_out(cfg, args.seed)
            summary = cmd_run(cfg, args.seed, out, args.snapshot_every, args.plot, args.dump_rounds)
            print(json.dumps(summary, indent=2))
            print(f"artifacts written to {out}", file=sys.stderr)
            return EXIT_OK
        if args.cmd == "batch":
            if args.mode:
                cfg = dataclasses.replace(cfg, mode=args.mode)
            if args.max_steps is not None:
                cfg = dataclasses.replace(cfg, max_steps=args.max_steps)
            counts = [int(c) for c in args.agent_counts.split(",")] if args.agent_counts else [len(cfg.agents)]
            rows = cmd_batch(cfg, parse_seeds(args.seeds), counts, args.jobs)
            print(format_table(rows))
            if args.out:
                out = FsPath(args.out)
                out.mkdir(parents=True, exist_ok=True)
                (out / "batch.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
                with open(out / "batch.csv", "w", newline="", encoding="utf-8") as f:
                    w = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
                    w.writeheader()
                    w.writerows(rows)
                write_manifest(out, ["batch.json", "batch.csv"])
            return EXIT_OK
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
