"""Greedy rollouts of a trained agent, captured as traces."""

from __future__ import annotations

from pathlib import Path

from .core import Trace, TraceStep, greedy_action, seed_streams, write_trace
from .learner import DecomposedQ


def rollout(env, q: DecomposedQ, episode_seed: int, episode_id: int = 0,
            agent_id: str = "agent") -> Trace:
    """One pure-greedy episode recording every legal action's decomposed Q."""
    state = env.reset(episode_seed)
    steps = []
    while True:
        obs, legal = env.observe(state), env.legal_actions(state)
        qv = q.q_values(obs.id, legal)
        a = greedy_action(qv)
        state, r, terminal = env.step(state, a)
        steps.append(TraceStep(len(steps), obs, tuple(legal), qv, a, tuple(r), terminal))
        if terminal:
            break
    return Trace.from_steps(episode_id, agent_id, steps, env.components)


def episode_seeds(seed: int, n: int) -> list[int]:
    env_rng, _, _ = seed_streams(seed)
    return [int(env_rng.integers(2**63)) for _ in range(n)]


def record(env, q: DecomposedQ, num_episodes: int, seed: int, agent_id: str = "agent",
           out_dir: Path | str | None = None) -> list[Trace]:
    """Roll out ``num_episodes`` greedy episodes; write one file per episode if ``out_dir``."""
    if num_episodes < 1:
        raise ValueError("num_episodes must be >= 1")
    traces = []
    for ep, s in enumerate(episode_seeds(seed, num_episodes)):
        trace = rollout(env, q, s, ep, agent_id)
        if out_dir is not None:
            write_trace(trace, out_dir)
        traces.append(trace)
    return traces


def evaluate(env, q: DecomposedQ, num_episodes: int, seed: int) -> list[float]:
    """Greedy episode returns (summed over components)."""
    return [rollout(env, q, s).total_reward for s in episode_seeds(seed, num_episodes)]
