"""Independent reference implementations the package is checked against.

Written without numpy vectorisation or any package helper so that a shared
bug cannot hide in both routes.
"""

from __future__ import annotations

import math

from rewardlens.core import Observation, Trace, TraceStep


def naive_value_iteration(P, R, terminal, gamma, tol=1e-13, max_iter=200_000):
    """Scalar Q* by plain loops; ``R[s][a][s2]`` is the summed reward."""
    S, A = len(P), len(P[0])
    q = [[0.0] * A for _ in range(S)]
    for _ in range(max_iter):
        v = [0.0 if terminal[s] else max(q[s]) for s in range(S)]
        new = [[sum(P[s][a][t] * (R[s][a][t] + gamma * v[t]) for t in range(S))
                for a in range(A)] for s in range(S)]
        diff = max(abs(new[s][a] - q[s][a]) for s in range(S) for a in range(A))
        q = new
        if diff < tol:
            return q
    raise RuntimeError("naive value iteration did not converge")


def summed(qv):
    return {a: math.fsum(v) for a, v in qv.items()}


def gap(qv, metric):
    vals = sorted(summed(qv).values())
    if metric == "max_minus_min":
        return vals[-1] - vals[0]
    return vals[-1] - vals[-2] if len(vals) > 1 else 0.0


def brute_highlights(traces, k, interval, metric, threshold=None):
    """Repeated linear scans for the best admissible step; returns (episode, step) pairs."""
    cands = []
    for t in traces:
        for s in t.steps:
            cands.append((t.episode_id, s.step_index, gap(s.q_values, metric), s.observation.features))
    chosen = []
    while len(chosen) < k:
        best = None
        for ep, st, imp, feat in cands:
            if any(c[0] == ep and c[1] == st for c in chosen):
                continue
            if any(c[0] == ep and abs(c[1] - st) < interval for c in chosen):
                continue
            if threshold is not None and any(
                    sum((x - y) ** 2 for x, y in zip(c[3], feat)) ** 0.5 < threshold for c in chosen):
                continue
            if best is None or imp > best[2] or (imp == best[2] and (ep, st) < (best[0], best[1])):
                best = (ep, st, imp, feat)
        if best is None:
            break
        chosen.append(best)
    return [(c[0], c[1]) for c in chosen]


def synthetic_trace(episode_id, q_rows, agent_id="a", features=None, components=("c0", "c1")):
    """A trace whose step i has per-action Q vectors ``q_rows[i]`` (list of tuples)."""
    steps = []
    n = len(q_rows)
    for i, rows in enumerate(q_rows):
        legal = tuple(range(len(rows)))
        qv = {a: tuple(float(x) for x in rows[a]) for a in legal}
        best = max(legal, key=lambda a: (sum(qv[a]), -a))
        feat = features[i] if features is not None else (float(episode_id), float(i))
        steps.append(TraceStep(i, Observation(f"e{episode_id}s{i}", tuple(feat)), legal, qv, best,
                               (0.0,) * len(components), i == n - 1))
    return Trace.from_steps(episode_id, agent_id, steps, components)


def trace_from_importances(episode_id, importances, agent_id="a"):
    """Two actions per step; summed-Q gap equals the given importance under both metrics."""
    return synthetic_trace(episode_id, [[(imp, 0.0), (0.0, 0.0)] for imp in importances], agent_id)
