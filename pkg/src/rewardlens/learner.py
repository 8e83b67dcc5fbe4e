"""Tabular HRA learner: one Q-table per reward component, acting on their sum.

Bootstrap targets follow Double DQN: the next action is picked greedily from
the online tables and evaluated on the periodically copied target tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (ActionId, HyperParams, Observation, RewardVector, atomic_write_text,
                   greedy_action, seed_streams)


@dataclass(frozen=True)
class Transition:
    obs_id: str
    action: ActionId
    reward: RewardVector
    next_obs_id: str
    terminal: bool
    next_legal: tuple[ActionId, ...]


class DecomposedQ:
    """Online and target tables mapping (observation id, action) to a reward vector.

    Rows are allocated on first write; unseen observations read as zeros in
    both tables. Owned by a single writer during training.
    """

    def __init__(self, num_actions: int, num_components: int, capacity: int = 256):
        self.num_actions = num_actions
        self.num_components = num_components
        self.index: dict[str, int] = {}
        self.online = np.zeros((capacity, num_actions, num_components))
        self.target = np.zeros_like(self.online)
        self.steps_since_copy = 0
        self._dirty: set[int] = set()

    def __len__(self) -> int:
        return len(self.index)

    def _row(self, obs_id: str) -> int:
        i = self.index.get(obs_id)
        if i is None:
            i = len(self.index)
            if i == self.online.shape[0]:
                grow = ((i, self.num_actions, self.num_components))
                self.online = np.concatenate([self.online, np.zeros(grow)])
                self.target = np.concatenate([self.target, np.zeros(grow)])
            self.index[obs_id] = i
        return i

    def online_values(self, obs_id: str) -> np.ndarray:
        i = self.index.get(obs_id)
        if i is None:
            return np.zeros((self.num_actions, self.num_components))
        return self.online[i].copy()

    def target_values(self, obs_id: str) -> np.ndarray:
        i = self.index.get(obs_id)
        if i is None:
            return np.zeros((self.num_actions, self.num_components))
        return self.target[i].copy()

    def q_values(self, obs_id: str, legal: Sequence[ActionId]) -> dict[ActionId, RewardVector]:
        """Online per-component Q for each legal action."""
        i = self.index.get(obs_id)
        if i is None:
            zero = (0.0,) * self.num_components
            return {a: zero for a in legal}
        rows = self.online[i]
        return {a: tuple(rows[a].tolist()) for a in legal}

    def copy_target(self) -> None:
        if self._dirty:
            rows = sorted(self._dirty)
            self.target[rows] = self.online[rows]
            self._dirty.clear()
        self.steps_since_copy = 0

    def to_text(self, components: Sequence[str] = ()) -> str:
        names = list(components) or [f"c{i}" for i in range(self.num_components)]
        lines = ["# obs_id\taction\t" + "\t".join(names)]
        for obs_id in sorted(self.index):
            rows = self.online[self.index[obs_id]]
            for a in range(self.num_actions):
                vals = "\t".join(repr(float(v)) for v in rows[a])
                lines.append(f"{obs_id}\t{a}\t{vals}")
        return "\n".join(lines) + "\n"

    def save(self, path: Path | str, components: Sequence[str] = ()) -> None:
        atomic_write_text(path, self.to_text(components))

    @classmethod
    def from_text(cls, text: str, num_actions: int) -> DecomposedQ:
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        header = text.splitlines()[0] if text else ""
        num_components = len(header.split("\t")) - 2 if header.startswith("#") else None
        if num_components is None:
            num_components = len(lines[0].split("\t")) - 2
        q = cls(num_actions, num_components)
        for ln in lines:
            obs_id, a, *vals = ln.split("\t")
            i = q._row(obs_id)
            q.online[i, int(a)] = [float(v) for v in vals]
        q.target[: len(q.index)] = q.online[: len(q.index)]
        return q

    @classmethod
    def load(cls, path: Path | str, num_actions: int) -> DecomposedQ:
        return cls.from_text(Path(path).read_text(encoding="utf-8"), num_actions)


def select_action(q: DecomposedQ, obs: Observation, legal: Sequence[ActionId],
                  epsilon: float, rng: np.random.Generator) -> ActionId:
    """Epsilon-greedy over the summed online Q."""
    if not legal:
        raise ValueError(f"no legal actions in observation {obs.id!r}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return legal[int(rng.integers(len(legal)))]
    return greedy_action(q.q_values(obs.id, legal))


def _bootstrap(q: DecomposedQ, tr: Transition, head_local: bool) -> np.ndarray:
    j = q.index.get(tr.next_obs_id)
    if tr.terminal or j is None or not tr.next_legal:
        return np.zeros(q.num_components)
    online, target = q.online[j], q.target[j]
    if head_local:
        out = np.empty(q.num_components)
        for c in range(q.num_components):
            best = max(tr.next_legal, key=lambda a: (online[a, c], -a))
            out[c] = target[best, c]
        return out
    best = greedy_action({a: online[a].tolist() for a in tr.next_legal})
    return target[best]


def hra_update(q: DecomposedQ, tr: Transition, hp: HyperParams) -> None:
    """One in-place TD step on every head, then the periodic target copy."""
    i = q._row(tr.obs_id)
    boot = _bootstrap(q, tr, hp.head_local_bootstrap)
    y = np.asarray(tr.reward, dtype=float) + hp.gamma * boot
    row = q.online[i, tr.action]
    row += hp.alpha * (y - row)
    q._dirty.add(i)
    q.steps_since_copy += 1
    if q.steps_since_copy >= hp.tau:
        q.copy_target()


def epsilon_at(episode: int, hp: HyperParams) -> float:
    if hp.epsilon_decay_episodes <= 0:
        return hp.epsilon_end
    frac = min(1.0, episode / hp.epsilon_decay_episodes)
    return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac


def train(env, hp: HyperParams,
          progress: Callable[[int, float], None] | None = None) -> tuple[DecomposedQ, list[float]]:
    """Run ``hp.episodes`` epsilon-greedy episodes; deterministic given ``hp.seed``."""
    q = DecomposedQ(len(env.action_names), len(env.components))
    env_rng, explore_rng, _ = seed_streams(hp.seed)
    curve: list[float] = []
    for ep in range(hp.episodes):
        eps = epsilon_at(ep, hp)
        state = env.reset(int(env_rng.integers(2**63)))
        obs, legal = env.observe(state), env.legal_actions(state)
        rewards = []
        while True:
            a = select_action(q, obs, legal, eps, explore_rng)
            state, r, terminal = env.step(state, a)
            obs2, legal2 = env.observe(state), env.legal_actions(state)
            hra_update(q, Transition(obs.id, a, r, obs2.id, terminal, legal2), hp)
            rewards.extend(r)
            if terminal:
                break
            obs, legal = obs2, legal2
        curve.append(math.fsum(rewards))
        if progress is not None:
            progress(ep, curve[-1])
    return q, curve
