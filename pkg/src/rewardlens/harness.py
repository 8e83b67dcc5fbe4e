"""Verification and evaluation: exact value iteration, the HRA-vs-monolithic sanity
check, and the automated judge that recovers an agent's priorities from a summary."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import HyperParams, Observation, RewardVector
from .envs.mdp import ExplicitMDP
from .learner import DecomposedQ, Transition, hra_update, train
from .recorder import evaluate
from .summarizer import Summary

INDIFFERENT = "indifferent"


class ConvergenceError(RuntimeError):
    pass


# --- exact oracle ---------------------------------------------------------------


def value_iteration(mdp: ExplicitMDP, gamma: float, tol: float = 1e-12,
                    max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(q_per_component[S, A, C], q_scalar[S, A])``.

    The scalar Q* comes from standard value iteration on the summed reward; each
    component head is then evaluated under the scalar-greedy policy (ties to the
    lowest action), so the heads add up to Q*.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    P, R = mdp.transitions, mdp.rewards
    alive = (~mdp.terminal).astype(float)
    r_scalar = np.einsum("ijk,ijk->ij", P, R.sum(axis=3))
    q = np.zeros(P.shape[:2])
    for _ in range(max_iter):
        v = q.max(axis=1) * alive
        q_new = r_scalar + gamma * P @ v
        if np.max(np.abs(q_new - q)) < tol:
            q = q_new
            break
        q = q_new
    else:
        raise ConvergenceError(f"value iteration did not reach tol={tol} in {max_iter} sweeps")

    policy = q.argmax(axis=1)
    r_comp = np.einsum("ijk,ijkc->ijc", P, R)
    S = P.shape[0]
    qc = np.zeros(r_comp.shape)
    for _ in range(max_iter):
        v = qc[np.arange(S), policy] * alive[:, None]
        qc_new = r_comp + gamma * np.einsum("ijk,kc->ijc", P, v)
        if np.max(np.abs(qc_new - qc)) < tol:
            qc = qc_new
            break
        qc = qc_new
    else:
        raise ConvergenceError(f"per-component evaluation did not reach tol={tol}")
    return qc, q


def fit_by_sweeps(mdp: ExplicitMDP, hp: HyperParams, sweeps: int,
                  num_components: int | None = None, scalar: bool = False) -> DecomposedQ:
    """Drive ``hra_update`` over every reachable (state, action) pair of a
    deterministic MDP, once per sweep, copying the target table after each sweep.

    With ``scalar`` the components are summed into a single monolithic head.
    """
    if not mdp.deterministic:
        raise ValueError("sweep fitting needs a deterministic MDP")
    C = 1 if scalar else (num_components or mdp.num_components)
    q = DecomposedQ(mdp.num_actions, C)
    states = [s for s in mdp.reachable() if not mdp.terminal[s]]
    legal = tuple(range(mdp.num_actions))
    pairs = []
    for s in states:
        for a in legal:
            s2 = mdp.successors(s, a)[0]
            r = mdp.rewards[s, a, s2]
            r = (float(r.sum()),) if scalar else tuple(float(x) for x in r)
            pairs.append(Transition(f"s{s}", a, r, f"s{s2}", bool(mdp.terminal[s2]), legal))
    hp = HyperParams(gamma=hp.gamma, alpha=hp.alpha, tau=max(1, len(pairs)),
                     head_local_bootstrap=hp.head_local_bootstrap, seed=hp.seed)
    for _ in range(sweeps):
        for tr in pairs:
            hra_update(q, tr, hp)
    return q


# --- sanity check ----------------------------------------------------------------


class RewardScaledEnv:
    """Wraps an environment, rescaling each component; ``collapse`` sums them into one."""

    def __init__(self, env, scales: Sequence[float], collapse: bool = False):
        self.env = env
        self.scales = tuple(float(s) for s in scales)
        self.collapse = collapse
        self.components = ("R",) if collapse else env.components
        self.action_names = env.action_names

    def reset(self, episode_seed):
        return self.env.reset(episode_seed)

    def step(self, state, action):
        s2, r, terminal = self.env.step(state, action)
        scaled = tuple(x * k for x, k in zip(r, self.scales))
        return s2, ((math.fsum(scaled),) if self.collapse else scaled), terminal

    def observe(self, state) -> Observation:
        return self.env.observe(state)

    def legal_actions(self, state):
        return self.env.legal_actions(state)


@dataclass
class SanityReport:
    episodes: int
    eval_episodes: int
    mean_reward_monolithic: float
    mean_reward_hra: float
    ratio: float
    insufficient_training: bool
    scalar_scale: float
    component_scales: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


MIN_SANITY_EPISODES = 100


def sanity_check(env, hp: HyperParams, eval_episodes: int = 100,
                 eval_seed: int | None = None) -> SanityReport:
    """Train a monolithic scalar learner and an HRA learner on normalized rewards and
    compare their greedy returns (in the environment's own reward units).

    The scalar learner sees the summed reward scaled into [0, 1]; each HRA component
    is scaled so its per-step peak magnitude is 1/|C| of that.
    """
    peaks = env.component_max_magnitudes()
    n = len(peaks)
    total_peak = math.fsum(peaks)
    scalar_scale = 1.0 / total_peak if total_peak > 0 else 1.0
    comp_scales = [1.0 / (n * p) if p > 0 else 0.0 for p in peaks]

    mono_env = RewardScaledEnv(env, [scalar_scale] * n, collapse=True)
    hra_env = RewardScaledEnv(env, comp_scales)
    q_mono, _ = train(mono_env, hp)
    q_hra, _ = train(hra_env, hp)
    seed = hp.seed + 1 if eval_seed is None else eval_seed
    mono = float(np.mean(evaluate(env, q_mono, eval_episodes, seed)))
    hra = float(np.mean(evaluate(env, q_hra, eval_episodes, seed)))
    ratio = hra / mono if mono != 0 else (1.0 if hra == 0 else math.inf)
    return SanityReport(hp.episodes, eval_episodes, mono, hra, ratio,
                        hp.episodes < MIN_SANITY_EPISODES, scalar_scale, comp_scales)


# --- preference judge ----------------------------------------------------------


@dataclass
class JudgeResult:
    components: list[str]
    scores: dict[str, float]
    verdicts: dict[tuple[str, str], str]
    states_used: int
    correctness: float | None = None
    truth: dict[tuple[str, str], str] | None = None

    def to_dict(self) -> dict:
        d = {
            "components": self.components,
            "scores": self.scores,
            "verdicts": {f"{a}|{b}": v for (a, b), v in self.verdicts.items()},
            "states_used": self.states_used,
            "correctness": self.correctness,
        }
        if self.truth is not None:
            d["truth"] = {f"{a}|{b}": v for (a, b), v in self.truth.items()}
        return d


def pairs_of(components: Sequence[str]) -> list[tuple[str, str]]:
    return list(itertools.combinations(components, 2))


def verdict(a: str, b: str, scores: Mapping[str, float], delta: float) -> str:
    """``a`` or ``b`` when its score beats the other by more than ``delta`` of the largest
    score magnitude among all judged components, else indifferent."""
    scale = max((abs(v) for v in scores.values()), default=0.0)
    diff = scores[a] - scores[b]
    if scale == 0.0 or abs(diff) <= delta * scale:
        return INDIFFERENT
    return a if diff > 0 else b


def truth_from_weights(weights: Mapping[str, float]) -> dict[tuple[str, str], str]:
    comps = list(weights)
    out = {}
    for a, b in pairs_of(comps):
        wa, wb = weights[a], weights[b]
        out[(a, b)] = INDIFFERENT if wa == wb else (a if wa > wb else b)
    return out


def truth_from_orderings(components: Sequence[str], relations: Sequence[str]) -> dict[tuple[str, str], str]:
    """Parse relations like ``"PP>NP"`` or ``"NP=BG"``; unspecified pairs are indifferent."""
    out = {pair: INDIFFERENT for pair in pairs_of(components)}
    for rel in relations:
        rel = rel.replace(" ", "")
        if ">" in rel:
            hi, lo = rel.split(">")
            key = (hi, lo) if (hi, lo) in out else (lo, hi)
            if key not in out:
                raise ValueError(f"unknown components in relation {rel!r}")
            out[key] = hi
        elif "=" in rel:
            a, b = rel.split("=")
            if (a, b) not in out and (b, a) not in out:
                raise ValueError(f"unknown components in relation {rel!r}")
        else:
            raise ValueError(f"relation must contain '>' or '=': {rel!r}")
    return out


def weight_ratio_pairs(weights: Mapping[str, float], min_ratio: float = 2.0) -> list[tuple[str, str]]:
    """Pairs whose larger weight is at least ``min_ratio`` times the smaller one."""
    out = []
    for a, b in pairs_of(list(weights)):
        lo, hi = sorted((abs(weights[a]), abs(weights[b])))
        if hi == 0:
            continue
        if lo == 0 or hi / lo >= min_ratio:
            out.append((a, b))
    return out


def _score(vectors: list[RewardVector], idx: list[int], names: list[str]) -> tuple[dict, int]:
    totals = np.zeros(len(idx))
    used = 0
    for vec in vectors:
        vals = np.asarray(vec, dtype=float)
        mag = np.abs(vals).sum()
        if mag < 1e-9:
            continue
        totals += vals[idx] / mag
        used += 1
    scores = {n: (float(totals[i] / used) if used else 0.0) for i, n in enumerate(names)}
    return scores, used


def _finish(names, scores, used, delta, truth) -> JudgeResult:
    verdicts = {p: verdict(p[0], p[1], scores, delta) for p in pairs_of(names)}
    correctness = None
    if truth is not None:
        truth = {p: truth[p] for p in verdicts}
        correctness = sum(verdicts[p] == truth[p] for p in verdicts) / len(verdicts)
    return JudgeResult(list(names), scores, verdicts, used, correctness, truth)


def judge_preferences(summary: Summary, agent_components: Sequence[str], *,
                      delta: float = 0.05, all_actions: bool = False,
                      truth: Mapping[tuple[str, str], str] | None = None) -> JudgeResult:
    """Rank reward components from the decomposed Q-values shown for summary states.

    Per central state, each component's Q for the chosen action (or, with
    ``all_actions``, averaged over legal actions) is divided by the state's total
    Q magnitude (sum of |Q_c| over every component); scores average these shares.
    """
    if not summary.items:
        raise ValueError("cannot judge an empty summary")
    comps = list(summary.components)
    idx = [comps.index(c) for c in agent_components]
    vectors = []
    for it in summary.items:
        st = it.central
        if not st.q_values:
            raise ValueError(f"summary state {it.episode_id}:{it.central_step} has no q_values")
        if all_actions:
            rows = np.array([st.q_values[a] for a in st.legal_actions])
            vectors.append(tuple(rows.mean(axis=0)))
        else:
            vectors.append(st.q_values[st.chosen_action])
    scores, used = _score(vectors, idx, list(agent_components))
    return _finish(list(agent_components), scores, used, delta, truth)


def judge_behavior(summary: Summary, agent_components: Sequence[str], env, *,
                   delta: float = 0.05,
                   truth: Mapping[tuple[str, str], str] | None = None) -> JudgeResult:
    """Judge without reward decomposition: only what the context-window frames show.

    Scores are each component's share of the visible behaviour events in the
    window, averaged over summary items.
    """
    if not summary.items:
        raise ValueError("cannot judge an empty summary")
    comps = list(env.components)
    idx = [comps.index(c) for c in agent_components]
    vectors = []
    for it in summary.items:
        events = np.array(env.behavior_events(list(it.window)), dtype=float)
        vectors.append(tuple(events.sum(axis=0)))
    scores, used = _score(vectors, idx, list(agent_components))
    return _finish(list(agent_components), scores, used, delta, truth)
