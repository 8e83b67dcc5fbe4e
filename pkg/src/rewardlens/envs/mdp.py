"""Explicit finite MDPs with decomposed rewards, usable as a learner environment."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..core import Observation, TraceStep
from .svg import SVG_HEADER, _text


@dataclass(frozen=True)
class ExplicitMDP:
    """``transitions[s, a, s']`` probabilities and ``rewards[s, a, s', c]``.

    Entering a state flagged in ``terminal`` ends the episode.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    terminal: np.ndarray
    start: int = 0

    def __post_init__(self):
        S, A, S2 = self.transitions.shape
        if S != S2:
            raise ValueError("transitions must have shape (S, A, S)")
        if self.rewards.shape[:3] != (S, A, S):
            raise ValueError("rewards must have shape (S, A, S, C)")
        if self.terminal.shape != (S,):
            raise ValueError("terminal must have shape (S,)")
        if not np.allclose(self.transitions.sum(axis=2), 1.0):
            raise ValueError("transition rows must sum to 1")

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_components(self) -> int:
        return self.rewards.shape[3]

    @property
    def deterministic(self) -> bool:
        return bool(np.all((self.transitions == 0) | (self.transitions == 1)))

    def successors(self, s: int, a: int) -> list[int]:
        return [int(x) for x in np.flatnonzero(self.transitions[s, a])]

    def reachable(self) -> list[int]:
        seen, stack = {self.start}, [self.start]
        while stack:
            s = stack.pop()
            if self.terminal[s]:
                continue
            for a in range(self.num_actions):
                for s2 in self.successors(s, a):
                    if s2 not in seen:
                        seen.add(s2)
                        stack.append(s2)
        return sorted(seen)


def random_mdp(seed: int, num_states: int, num_actions: int, num_components: int,
               deterministic: bool = False, terminal_states: int = 1) -> ExplicitMDP:
    """Seeded random MDP; the last ``terminal_states`` states are absorbing/terminal."""
    rng = np.random.default_rng(seed)
    S, A, C = num_states, num_actions, num_components
    if deterministic:
        P = np.zeros((S, A, S))
        nxt = rng.integers(0, S, size=(S, A))
        P[np.arange(S)[:, None], np.arange(A)[None, :], nxt] = 1.0
    else:
        P = rng.random((S, A, S)) ** 3
        P /= P.sum(axis=2, keepdims=True)
    R = rng.normal(size=(S, A, S, C))
    terminal = np.zeros(S, dtype=bool)
    if terminal_states:
        terminal[S - terminal_states:] = True
    return ExplicitMDP(P, R, terminal, start=0)


class MDPEnv:
    """Environment adapter: states are ``(s, t, episode_seed)`` tuples."""

    name = "mdp"
    default_metric = "max_minus_min"
    default_bar_mode = "all_actions"

    def __init__(self, mdp: ExplicitMDP, episode_length: int = 100, components=None):
        self.mdp = mdp
        self.episode_length = episode_length
        self.components = tuple(components or (f"c{i}" for i in range(mdp.num_components)))
        self.action_names = tuple(f"a{i}" for i in range(mdp.num_actions))

    def reset(self, episode_seed: int):
        return (self.mdp.start, 0, int(episode_seed))

    def step(self, state, action: int):
        s, t, seed = state
        if not 0 <= action < self.mdp.num_actions:
            raise ValueError(f"unknown action {action!r}")
        row = self.mdp.transitions[s, action]
        if self.mdp.deterministic:
            s2 = int(np.argmax(row))
        else:
            u = random.Random(f"{seed}:{t}").random()
            s2 = int(min(np.searchsorted(np.cumsum(row), u, side="right"), len(row) - 1))
        r = tuple(float(x) for x in self.mdp.rewards[s, action, s2])
        terminal = bool(self.mdp.terminal[s2]) or t + 1 >= self.episode_length
        return (s2, t + 1, seed), r, terminal

    def observe(self, state) -> Observation:
        return Observation(f"s{state[0]}", (float(state[0]),))

    def legal_actions(self, state) -> tuple[int, ...]:
        return tuple(range(self.mdp.num_actions))

    def component_max_magnitudes(self) -> tuple[float, ...]:
        return tuple(float(x) for x in np.abs(self.mdp.rewards).max(axis=(0, 1, 2)))

    def behavior_events(self, steps: list[TraceStep]):
        return [tuple(1.0 if r != 0.0 else 0.0 for r in st.reward) for st in steps]

    def render_svg(self, obs: Observation, title: str = "") -> str:
        return (SVG_HEADER.format(w=160, h=40) + _text(10, 24, f"{title} {obs.id}".strip())
                + "</svg>\n")
