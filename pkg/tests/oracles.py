"""Independent reference implementations used as test oracles.

Each one recomputes its quantity cell by cell from the definitions, with no
shared code paths into the package.  ``random_trace`` drives the package and
the belief oracle side by side.
"""

import itertools
import math
from collections import deque

import numpy as np

from infosearch.belief import CONST_VEL, STATIC, MotionModel, Observation, SensorModel, TargetBelief, correct_all, predict
from infosearch.gridworld import GridDims, fov_at_cell

# -- target belief -------------------------------------------------------------


def oracle_transition(w, h, shift, sigma):
    """P[(src, dst)] for shift-then-blur, per-source renormalized."""
    r = int(math.ceil(3 * sigma))
    P = {}
    for sx, sy in itertools.product(range(w), range(h)):
        cx = min(max(sx + shift[0], 0), w - 1)
        cy = min(max(sy + shift[1], 0), h - 1)
        weights = {}
        for dx, dy in itertools.product(range(w), range(h)):
            if sigma == 0:
                weights[(dx, dy)] = 1.0 if (dx, dy) == (cx, cy) else 0.0
            elif abs(dx - cx) <= r and abs(dy - cy) <= r:
                weights[(dx, dy)] = math.exp(-((dx - cx) ** 2 + (dy - cy) ** 2) / (2 * sigma * sigma))
        z = math.fsum(weights.values())
        for dst, v in weights.items():
            P[((sx, sy), dst)] = v / z
    return P


def oracle_predict(prior, w, h, shift, sigma):
    P = oracle_transition(w, h, shift, sigma)
    post = {c: 0.0 for c in prior}
    for (src, dst), v in P.items():
        post[dst] += prior[src] * v
    z = math.fsum(post.values())
    return {c: v / z for c, v in post.items()}


def oracle_likelihood(cell, obs, sensor):
    x0, x1, y0, y1 = obs["fov"]
    in_fov = x0 <= cell[0] < x1 and y0 <= cell[1] < y1
    if obs["detected"] is None:
        return 1 - sensor["pd"] if in_fov else 1 - sensor["pfa"]
    return sensor["pd"] if cell == obs["detected"] else sensor["pfa"]


def oracle_correct(prior, observations, sensors):
    post = {}
    for c, p in prior.items():
        lik = 1.0
        for o in observations:
            lik *= oracle_likelihood(c, o, sensors[o["agent"]])
        post[c] = p * lik
    z = math.fsum(post.values())
    return {c: v / z for c, v in post.items()}


def as_array(d, w, h):
    a = np.zeros((w, h))
    for (i, j), v in d.items():
        a[i, j] = v
    return a


def random_trace(seed, w=5, h=5, steps=20):
    """Run package and oracle side by side; returns per-step (pkg, oracle) arrays."""
    rng = np.random.default_rng(seed)
    dims = GridDims(w, h)
    kind = STATIC if rng.random() < 0.4 else CONST_VEL
    vel = (0, 0) if kind == STATIC else (int(rng.integers(-1, 2)), int(rng.integers(-1, 2)))
    sigma = float(rng.choice([0.0, 0.4, 0.7, 1.0]))
    model = MotionModel(kind, vel, sigma)
    n_agents = int(rng.integers(1, 4))
    sensors = [SensorModel(float(rng.uniform(0.5, 0.95)), float(rng.uniform(0.0, 0.1))) for _ in range(n_agents)]
    osensors = [{"pd": s.p_detect, "pfa": s.p_false} for s in sensors]

    belief = TargetBelief.uniform(dims)
    ref = {c: 1.0 / (w * h) for c in itertools.product(range(w), range(h))}
    out = []
    for _ in range(steps):
        obs, oobs = [], []
        for a in range(n_agents):
            fov = fov_at_cell((int(rng.integers(w)), int(rng.integers(h))), int(rng.integers(0, 2)), dims)
            det = None
            if rng.random() < 0.2:
                cells = sorted(fov.cells)
                det = cells[int(rng.integers(len(cells)))]
            obs.append(Observation(a, fov, det))
            oobs.append({"agent": a, "fov": (fov.x0, fov.x1, fov.y0, fov.y1), "detected": det})
        belief = correct_all(belief, obs, sensors)
        ref = oracle_correct(ref, oobs, osensors)
        out.append((belief.mass.copy(), as_array(ref, w, h)))
        belief = predict(belief, model)
        ref = oracle_predict(ref, w, h, model.shift, sigma)
        out.append((belief.mass.copy(), as_array(ref, w, h)))
    return out


# -- shortest paths ------------------------------------------------------------


def bfs_length(blocked, start, goal):
    w, h = blocked.shape
    dist = {start: 0}
    q = deque([start])
    while q:
        c = q.popleft()
        if c == goal:
            return dist[c]
        for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            n = (c[0] + d[0], c[1] + d[1])
            if 0 <= n[0] < w and 0 <= n[1] < h and not blocked[n] and n not in dist:
                dist[n] = dist[c] + 1
                q.append(n)
    return None


def random_instance(rng, w=20, h=20, density=0.3):
    blocked = rng.random((w, h)) < density
    free = np.argwhere(~blocked)
    s, g = free[rng.choice(len(free), 2, replace=False)]
    return blocked, (int(s[0]), int(s[1])), (int(g[0]), int(g[1]))


# -- information gain ----------------------------------------------------------


def entropy_bits(p):
    return -math.fsum(x * math.log2(x) for x in (p, 1.0 - p) if x > 0.0)


def union_entropy_oracle(viewpoints, r, cells, claimed):
    """Set-union enumeration of FOV cells, summed with the scalar entropy."""
    w, h = cells.shape
    seen = set()
    for vx, vy in viewpoints:
        for i in range(vx - r, vx + r + 1):
            for j in range(vy - r, vy + r + 1):
                if 0 <= i < w and 0 <= j < h:
                    seen.add((i, j))
    return math.fsum(entropy_bits(float(cells[c])) for c in seen - set(claimed))


