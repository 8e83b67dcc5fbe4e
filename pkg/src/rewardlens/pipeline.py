"""The train → record → summarize → render → judge stages behind the CLI.

Artifacts of one config live under ``<output root>/<config name>/``::

    agents/<agent>/qtable.tsv, learning_curve.csv, learning_curve.png
    traces/<agent>/<episode>.jsonl
    summaries/<agent>/<method>.json, frequency_<r>.json
    reports/<agent>/<mode>/report.html (+ assets/)
    judge.json, judge.csv, judge.png, sanity.json
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import plots
from .config import RunConfig
from .core import atomic_write_text, derive_seeds, load_traces
from .explain import ReportMode, render_report
from .harness import (judge_behavior, judge_preferences, sanity_check, truth_from_orderings,
                      truth_from_weights, weight_ratio_pairs)
from .learner import DecomposedQ, train
from .recorder import record
from .summarizer import Selection, Summary, load_summary, replicate_seeds, save_summary, summarize

CONDITIONS = ("H+RD", "FS+RD", "H", "FS")
Log = Callable[[str], None]


def _quiet(_msg: str) -> None:
    pass


@dataclass(frozen=True)
class AgentSeeds:
    train: int
    record: int
    summary: int


def agent_seeds(cfg: RunConfig, seed: int | None = None) -> dict[str, AgentSeeds]:
    master = cfg.seed if seed is None else seed
    per_agent = derive_seeds(master, len(cfg.agents))
    return {a.id: AgentSeeds(*derive_seeds(s, 3)) for a, s in zip(cfg.agents, per_agent)}


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# --- train / record ---------------------------------------------------------------


def train_agent(cfg: RunConfig, agent_id: str, root: Path, seed: int | None = None,
                log: Log = _quiet) -> DecomposedQ:
    agent = cfg.agent(agent_id)
    env = cfg.make_env(agent.weights)
    hp = cfg.hp(agent_seeds(cfg, seed)[agent_id].train)
    q, curve = train(env, hp)
    out = root / "agents" / agent_id
    q.save(out / "qtable.tsv", env.components)
    lines = ["episode,total_reward"] + [f"{i},{r!r}" for i, r in enumerate(curve)]
    atomic_write_text(out / "learning_curve.csv", "\n".join(lines) + "\n")
    plots.plot_learning_curve(curve, out / "learning_curve.png", f"{cfg.name}: {agent_id}")
    for name in ("qtable.tsv", "learning_curve.csv", "learning_curve.png"):
        log(str(out / name))
    return q


def load_q(cfg: RunConfig, agent_id: str, root: Path) -> DecomposedQ:
    path = root / "agents" / agent_id / "qtable.tsv"
    if not path.is_file():
        raise FileNotFoundError(f"no Q-table at {path}; run `train` first")
    return DecomposedQ.load(path, len(cfg.make_env().action_names))


def record_agent(cfg: RunConfig, agent_id: str, root: Path, seed: int | None = None,
                 q: DecomposedQ | None = None, episodes: int | None = None,
                 log: Log = _quiet):
    agent = cfg.agent(agent_id)
    env = cfg.make_env(agent.weights)
    q = q if q is not None else load_q(cfg, agent_id, root)
    out = root / "traces"
    target = out / agent_id
    if target.is_dir():
        for old in target.glob("*.jsonl"):
            old.unlink()
    traces = record(env, q, episodes or cfg.record_episodes, agent_seeds(cfg, seed)[agent_id].record,
                    agent_id, out)
    log(f"{target} ({len(traces)} episodes)")
    return traces


def _traces(cfg: RunConfig, agent_id: str, root: Path):
    d = root / "traces" / agent_id
    traces = load_traces(d) if d.is_dir() else []
    if not traces:
        raise FileNotFoundError(f"no traces in {d}; run `record` first")
    return traces


# --- summaries ---------------------------------------------------------------------


def summary_paths(root: Path, agent_id: str, method: str, replicates: int) -> list[Path]:
    d = root / "summaries" / agent_id
    if method == Selection.FREQUENCY.value:
        return [d / f"frequency_{r + 1:02d}.json" for r in range(replicates)]
    return [d / f"{method}.json"]


def summarize_agent(cfg: RunConfig, agent_id: str, root: Path, seed: int | None = None,
                    traces=None, method: str | None = None, replicates: int | None = None,
                    overrides: dict | None = None, log: Log = _quiet) -> list[Summary]:
    """Write one summary for HIGHLIGHTS(-DIV) or ``replicates`` frequency summaries."""
    traces = traces if traces is not None else _traces(cfg, agent_id, root)
    method = method or cfg.summary.get("method", "highlights")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    base = {**cfg.summary, **overrides, "method": method}
    sub = replace(cfg, summary=base)
    sseed = agent_seeds(cfg, seed)[agent_id].summary
    if method == Selection.FREQUENCY.value:
        n = replicates or base.get("replicates", 1)
        seeds = replicate_seeds(sseed, n)
    else:
        n, seeds = 1, [sseed]
    paths = summary_paths(root, agent_id, method, n)
    if method == Selection.FREQUENCY.value:
        for old in paths[0].parent.glob("frequency_*.json"):
            old.unlink()
    out = []
    for s, path in zip(seeds, paths):
        summary = summarize(traces, sub.summary_spec(seed=s, method=method))
        save_summary(summary, path)
        log(str(path))
        out.append(summary)
    return out


def load_agent_summaries(cfg: RunConfig, agent_id: str, root: Path, traces=None):
    """(main summary, frequency replicates) as written by ``summarize_agent``."""
    method = cfg.summary.get("method", "highlights")
    d = root / "summaries" / agent_id
    main_path = d / f"{method}.json"
    fs_paths = sorted(d.glob("frequency_*.json"))
    missing = [str(p) for p in [main_path] if not p.is_file()]
    if missing or not fs_paths:
        raise FileNotFoundError(f"summaries missing under {d}; run `summarize` "
                                f"(method {method} and frequency) first")
    traces = traces if traces is not None else _traces(cfg, agent_id, root)
    return load_summary(main_path, traces), [load_summary(p, traces) for p in fs_paths]


# --- reports -----------------------------------------------------------------------


def render_agent(cfg: RunConfig, agent_id: str, root: Path, modes: Sequence[str],
                 main: Summary | None = None, fs: Sequence[Summary] | None = None,
                 log: Log = _quiet) -> list[Path]:
    if main is None or fs is None:
        main, fs = load_agent_summaries(cfg, agent_id, root)
    env = cfg.make_env(cfg.agent(agent_id).weights)
    out = []
    for m in modes:
        mode = ReportMode(m)
        summaries = [main] if mode in (ReportMode.H, ReportMode.H_RD) else [fs[0]]
        path = render_report(summaries, mode, root / "reports" / agent_id / mode.value, env,
                             title=f"{agent_id}: {mode.value.upper()} summary")
        log(str(path))
        out.append(path)
    return out


# --- judge -------------------------------------------------------------------------


def _condition(results, strong) -> dict:
    correct = [r.correctness for r in results]
    hits = [sum(r.verdicts[p] == r.truth[p] for p in strong) for r in results]
    names = results[0].components
    return {
        "correctness": float(np.mean(correct)),
        "strong_pair_hits": float(np.mean(hits)) if strong else 0.0,
        "strong_pair_correctness": float(np.mean(hits)) / len(strong) if strong else None,
        "scores": {c: float(np.mean([r.scores[c] for r in results])) for c in names},
        "verdicts": [{f"{a}|{b}": v for (a, b), v in r.verdicts.items()} for r in results],
        "replicates": len(results),
    }


def judge_agent(cfg: RunConfig, agent_id: str, main: Summary, fs: Sequence[Summary]) -> dict:
    agent = cfg.agent(agent_id)
    env = cfg.make_env(agent.weights)
    comps = cfg.judged_components()
    weights = dict(zip(env.components, agent.weights))
    judged = {c: weights[c] for c in comps}
    if agent.preferences:
        truth = truth_from_orderings(comps, agent.preferences)
    else:
        truth = truth_from_weights(judged)
    strong = weight_ratio_pairs(judged, cfg.judge.get("min_ratio", 2.0))
    delta = cfg.judge.get("delta", 0.05)
    all_actions = cfg.judge.get("all_actions", False)

    def rd(s):
        return judge_preferences(s, comps, delta=delta, all_actions=all_actions, truth=truth)

    def beh(s):
        return judge_behavior(s, comps, env, delta=delta, truth=truth)

    runs = {"H+RD": [rd(main)], "FS+RD": [rd(s) for s in fs],
            "H": [beh(main)], "FS": [beh(s) for s in fs]}
    return {
        "weights": judged,
        "truth": {f"{a}|{b}": v for (a, b), v in truth.items()},
        "strong_pairs": [f"{a}|{b}" for a, b in strong],
        "conditions": {c: _condition(runs[c], strong) for c in CONDITIONS},
    }


def recovery_summary(agent_results: dict[str, dict]) -> dict:
    """Pooled strong-pair correctness per condition and the per-agent H+RD ≥ FS check."""
    pooled = {}
    for cond in CONDITIONS:
        hits = sum(r["conditions"][cond]["strong_pair_hits"] for r in agent_results.values())
        total = sum(len(r["strong_pairs"]) for r in agent_results.values())
        pooled[cond] = hits / total if total else None
    # FS correctness is a mean over replicates; the tolerance absorbs its rounding
    dominance = {a: r["conditions"]["H+RD"]["correctness"]
                 >= r["conditions"]["FS"]["correctness"] - 1e-9
                 for a, r in agent_results.items()}
    return {"pooled_strong_pair_correctness": pooled, "hrd_at_least_fs": dominance,
            "strong_pairs_total": sum(len(r["strong_pairs"]) for r in agent_results.values())}


def write_judge(cfg: RunConfig, root: Path, agent_results: dict[str, dict], log: Log = _quiet) -> dict:
    doc = {"config": cfg.name, "agents": agent_results, "summary": recovery_summary(agent_results)}
    atomic_write_text(root / "judge.json", dumps_json(doc))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["agent", "condition", "correctness", "strong_pair_correctness", "strong_pairs"])
    for a, r in agent_results.items():
        for cond in CONDITIONS:
            c = r["conditions"][cond]
            sp = c["strong_pair_correctness"]
            w.writerow([a, cond, repr(c["correctness"]), "" if sp is None else repr(sp),
                        len(r["strong_pairs"])])
    atomic_write_text(root / "judge.csv", buf.getvalue())
    rows = {a: {c: r["conditions"][c]["correctness"] for c in CONDITIONS}
            for a, r in agent_results.items()}
    plots.plot_judge_correctness(rows, CONDITIONS, root / "judge.png", f"{cfg.name}: judge correctness")
    for name in ("judge.json", "judge.csv", "judge.png"):
        log(str(root / name))
    return doc


def judge_config(cfg: RunConfig, root: Path, agent_ids: Sequence[str] | None = None,
                 log: Log = _quiet) -> dict:
    results = {}
    for a in agent_ids or [x.id for x in cfg.agents]:
        main, fs = load_agent_summaries(cfg, a, root)
        results[a] = judge_agent(cfg, a, main, fs)
    return write_judge(cfg, root, results, log)


# --- sanity -----------------------------------------------------------------------


def sanity_config(cfg: RunConfig, root: Path, seed: int | None = None,
                  episodes: int | None = None, log: Log = _quiet) -> dict:
    env = cfg.make_env()
    weights = cfg.sanity.get("weights") or [1.0] * len(env.components)
    env = env.with_weights(weights)
    master = cfg.seed if seed is None else seed
    hp = cfg.hp(derive_seeds(master, 1)[0])
    if episodes is not None:
        frac = cfg.hyperparams.get("epsilon_decay_fraction", 0.8)
        hp = replace(hp, episodes=episodes, epsilon_decay_episodes=int(round(frac * episodes)))
    report = sanity_check(env, hp, cfg.sanity.get("eval_episodes", 100))
    doc = {"config": cfg.name, "weights": list(map(float, weights)), **report.to_dict()}
    atomic_write_text(root / "sanity.json", dumps_json(doc))
    log(str(root / "sanity.json"))
    return doc


# --- end to end -------------------------------------------------------------------


def run_config(cfg: RunConfig, root: Path, seed: int | None = None, log: Log = _quiet) -> dict:
    """Every stage for every agent of one config; returns the judge document."""
    method = cfg.summary.get("method", "highlights")
    results = {}
    for agent in cfg.agents:
        q = train_agent(cfg, agent.id, root, seed, log)
        traces = record_agent(cfg, agent.id, root, seed, q=q, log=log)
        main = summarize_agent(cfg, agent.id, root, seed, traces, method, log=log)[0]
        fs = summarize_agent(cfg, agent.id, root, seed, traces, Selection.FREQUENCY.value, log=log)
        render_agent(cfg, agent.id, root, [m.value for m in ReportMode], main, fs, log)
        results[agent.id] = judge_agent(cfg, agent.id, main, fs)
    return write_judge(cfg, root, results, log)


def run_demo(configs: Sequence[RunConfig], out: Path | str | None, seed: int | None = None,
             log: Log = _quiet) -> dict:
    """Run every bundled config and pool the preference-recovery numbers across them."""
    docs = {}
    merged: dict[str, dict] = {}
    top = None
    for cfg in configs:
        root = cfg.output_root(out)
        top = root.parent
        docs[cfg.name] = run_config(cfg, root, seed, log)
        merged.update({f"{cfg.name}/{a}": r for a, r in docs[cfg.name]["agents"].items()})
    doc = {"configs": sorted(docs), "summary": recovery_summary(merged),
           "per_config": {n: d["summary"] for n, d in sorted(docs.items())}}
    if top is not None:
        atomic_write_text(top / "demo_summary.json", dumps_json(doc))
        log(str(top / "demo_summary.json"))
    return doc
