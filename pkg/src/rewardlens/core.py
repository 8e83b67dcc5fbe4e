"""Shared data model: reward vectors, observations, traces and their file format."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

ActionId = int
RewardVector = tuple[float, ...]

TRACE_SUFFIX = ".jsonl"


class StructureError(ValueError):
    """Malformed reward vectors, Q maps or trace records."""


@dataclass(frozen=True)
class ComponentId:
    index: int
    name: str


def make_components(names: Sequence[str]) -> tuple[ComponentId, ...]:
    if len(set(names)) != len(names):
        raise StructureError(f"component names must be unique: {list(names)}")
    return tuple(ComponentId(i, n) for i, n in enumerate(names))


def reward_vector(values: Iterable[float]) -> RewardVector:
    vec = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in vec):
        raise StructureError(f"non-finite reward vector {vec}")
    return vec


def sum_components(v: Sequence[float]) -> float:
    """Scalar reward of a decomposed vector.

    Uses an exactly rounded sum so the result does not depend on component order.
    """
    return math.fsum(v)


def q_sum(q: Mapping[ActionId, Sequence[float]]) -> dict[ActionId, float]:
    lengths = {len(v) for v in q.values()}
    if len(lengths) > 1:
        raise StructureError(f"mismatched reward vector lengths {sorted(lengths)}")
    return {a: math.fsum(v) for a, v in q.items()}


def greedy_action(q: Mapping[ActionId, Sequence[float]]) -> ActionId:
    """Action with the largest summed Q; ties go to the lowest action id."""
    if not q:
        raise ValueError("greedy_action on an empty Q map")
    sums = q_sum(q)
    best = None
    for a in sorted(sums):
        if best is None or sums[a] > sums[best]:
            best = a
    return best


@dataclass(frozen=True)
class Observation:
    id: str
    features: tuple[float, ...]


@dataclass(frozen=True)
class TraceStep:
    step_index: int
    observation: Observation
    legal_actions: tuple[ActionId, ...]
    q_values: Mapping[ActionId, RewardVector]
    chosen_action: ActionId
    reward: RewardVector
    terminal: bool

    def __post_init__(self):
        if self.chosen_action not in self.legal_actions:
            raise StructureError(
                f"step {self.step_index}: chosen action {self.chosen_action} not legal"
            )
        if set(self.q_values) != set(self.legal_actions):
            raise StructureError(
                f"step {self.step_index}: q_values keys {sorted(self.q_values)} "
                f"!= legal actions {sorted(self.legal_actions)}"
            )


@dataclass(frozen=True)
class Trace:
    episode_id: int
    agent_id: str
    steps: tuple[TraceStep, ...]
    total_reward: float
    components: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for s in self.steps[:-1]:
            if s.terminal:
                raise StructureError(
                    f"episode {self.episode_id}: terminal flag before the last step"
                )

    @classmethod
    def from_steps(cls, episode_id, agent_id, steps, components=()) -> Trace:
        steps = tuple(steps)
        total = math.fsum(v for s in steps for v in s.reward)
        return cls(episode_id, agent_id, steps, total, tuple(components))


@dataclass(frozen=True)
class HyperParams:
    gamma: float = 0.9
    alpha: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int = 1600
    tau: int = 500
    episodes: int = 2000
    seed: int = 0
    head_local_bootstrap: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        for name in ("epsilon_start", "epsilon_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon_end must not exceed epsilon_start")
        if self.epsilon_decay_episodes < 0:
            raise ValueError("epsilon_decay_episodes must be non-negative")
        if self.tau < 1:
            raise ValueError(f"tau must be a positive integer, got {self.tau}")
        if self.episodes < 0:
            raise ValueError(f"episodes must be non-negative, got {self.episodes}")


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Split one master seed into (env, exploration, sampling) generators, in that order."""
    env_ss, explore_ss, sample_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.default_rng(env_ss),
        np.random.default_rng(explore_ss),
        np.random.default_rng(sample_ss),
    )


def derive_seeds(seed: int, n: int) -> list[int]:
    """n independent 63-bit child seeds of a master seed."""
    return [int(c.generate_state(1, np.uint64)[0] >> np.uint64(1))
            for c in np.random.SeedSequence(seed).spawn(n)]


# --- trace file format --------------------------------------------------------
# One JSON object per line. An "episode" header line precedes the "step" lines
# of its episode.


def _step_record(s: TraceStep) -> dict:
    return {
        "type": "step",
        "step_index": s.step_index,
        "observation": {"id": s.observation.id, "features": list(s.observation.features)},
        "legal_actions": list(s.legal_actions),
        "q_values": {str(a): list(s.q_values[a]) for a in sorted(s.q_values)},
        "chosen_action": s.chosen_action,
        "reward": list(s.reward),
        "terminal": s.terminal,
    }


def step_from_record(rec: Mapping) -> TraceStep:
    obs = rec["observation"]
    return TraceStep(
        step_index=int(rec["step_index"]),
        observation=Observation(str(obs["id"]), tuple(float(x) for x in obs["features"])),
        legal_actions=tuple(int(a) for a in rec["legal_actions"]),
        q_values={int(a): tuple(float(x) for x in v) for a, v in rec["q_values"].items()},
        chosen_action=int(rec["chosen_action"]),
        reward=tuple(float(x) for x in rec["reward"]),
        terminal=bool(rec["terminal"]),
    )


def step_to_record(s: TraceStep) -> dict:
    rec = _step_record(s)
    del rec["type"]
    return rec


def dumps_trace(trace: Trace) -> str:
    header = {
        "type": "episode",
        "episode_id": trace.episode_id,
        "agent_id": trace.agent_id,
        "components": list(trace.components),
        "total_reward": trace.total_reward,
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    lines += [json.dumps(_step_record(s), separators=(",", ":")) for s in trace.steps]
    return "\n".join(lines) + "\n"


def loads_traces(text: str, source: str = "<string>") -> list[Trace]:
    traces = []
    header = None
    steps: list[TraceStep] = []

    def flush():
        if header is not None:
            traces.append(Trace(
                episode_id=int(header["episode_id"]),
                agent_id=str(header["agent_id"]),
                steps=tuple(steps),
                total_reward=float(header["total_reward"]),
                components=tuple(header.get("components", ())),
            ))

    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["type"]
            if kind == "episode":
                flush()
                header, steps = rec, []
            elif kind == "step":
                if header is None:
                    raise StructureError("step record before any episode header")
                steps.append(step_from_record(rec))
            else:
                raise StructureError(f"unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"{source}:{lineno}: {exc}") from exc
    flush()
    return traces


def atomic_write_text(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: Path | str, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(trace: Trace, directory: Path | str) -> Path:
    """Write ``<directory>/<agent_id>/<episode_id>.jsonl`` atomically."""
    path = Path(directory) / trace.agent_id / f"{trace.episode_id}{TRACE_SUFFIX}"
    try:
        atomic_write_text(path, dumps_trace(trace))
    except OSError as exc:
        raise OSError(f"writing episode {trace.episode_id} to {path}: {exc}") from exc
    return path


def read_trace_file(path: Path | str) -> list[Trace]:
    path = Path(path)
    return loads_traces(path.read_text(encoding="utf-8"), source=str(path))


def iter_trace_dir(directory: Path | str) -> Iterator[Trace]:
    for path in sorted(Path(directory).glob(f"*{TRACE_SUFFIX}")):
        yield from read_trace_file(path)


def load_traces(directory: Path | str) -> list[Trace]:
    """All traces of one agent directory, ordered by episode id."""
    return sorted(iter_trace_dir(directory), key=lambda t: t.episode_id)
