"""State importance and k-trajectory policy summaries (HIGHLIGHTS, HIGHLIGHTS-DIV, frequency)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Trace, TraceStep, atomic_write_text, q_sum, step_from_record, step_to_record


class Metric(str, Enum):
    MAX_MINUS_MIN = "max_minus_min"
    MAX_MINUS_SECOND = "max_minus_second"


class Selection(str, Enum):
    HIGHLIGHTS = "highlights"
    HIGHLIGHTS_DIV = "highlights-div"
    FREQUENCY = "frequency"


class SummaryError(ValueError):
    pass


@dataclass(frozen=True)
class SummarySpec:
    k: int
    context_window: int = 10
    interval: int = 10
    metric: Metric = Metric.MAX_MINUS_MIN
    div_threshold: float | None = None
    selection: Selection = Selection.HIGHLIGHTS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "selection", Selection(self.selection))
        if self.k < 1:
            raise SummaryError(f"k must be >= 1, got {self.k}")
        if self.context_window < 0 or self.interval < 0:
            raise SummaryError("context_window and interval must be non-negative")
        needs = self.selection is Selection.HIGHLIGHTS_DIV
        if needs and (self.div_threshold is None or self.div_threshold < 0):
            raise SummaryError("highlights-div needs a non-negative div_threshold")
        if not needs and self.div_threshold is not None:
            raise SummaryError("div_threshold is only valid with highlights-div")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metric"] = self.metric.value
        d["selection"] = self.selection.value
        return d


@dataclass(frozen=True)
class SummaryItem:
    episode_id: int
    central_step: int
    importance: float
    window: tuple[TraceStep, ...]
    central: TraceStep

    @property
    def window_bounds(self) -> tuple[int, int]:
        return self.window[0].step_index, self.window[-1].step_index

    @property
    def central_offset(self) -> int:
        return self.central_step - self.window[0].step_index


@dataclass(frozen=True)
class Summary:
    items: tuple[SummaryItem, ...]
    spec: SummarySpec
    agent_id: str
    components: tuple[str, ...] = field(default=())


def importance(step: TraceStep, metric: Metric | str) -> float:
    """Gap in summed Q between the best and the worst (or second best) legal action."""
    values = sorted(q_sum(step.q_values).values(), reverse=True)
    if not values:
        raise SummaryError(f"step {step.step_index} has no q_values")
    if Metric(metric) is Metric.MAX_MINUS_MIN:
        return values[0] - values[-1]
    if len(values) < 2:
        return 0.0
    return values[0] - values[1]


def _flatten(traces: Sequence[Trace]) -> list[tuple[Trace, TraceStep]]:
    if not traces:
        raise SummaryError("no traces to summarize")
    ordered = sorted(traces, key=lambda t: t.episode_id)
    return [(t, s) for t in ordered for s in t.steps]


def _item(trace: Trace, step: TraceStep, imp: float, window: int) -> SummaryItem:
    i = step.step_index
    lo, hi = max(0, i - window), min(len(trace.steps) - 1, i + window)
    return SummaryItem(trace.episode_id, i, imp, trace.steps[lo:hi + 1], step)


def _greedy(traces: Sequence[Trace], spec: SummarySpec, threshold: float | None) -> Summary:
    flat = _flatten(traces)
    scored = [(importance(s, spec.metric), t, s) for t, s in flat]
    scored.sort(key=lambda x: (-x[0], x[1].episode_id, x[2].step_index))
    chosen: list[tuple[float, Trace, TraceStep]] = []
    for imp, t, s in scored:
        if len(chosen) == spec.k:
            break
        blocked = any(ct.episode_id == t.episode_id
                      and abs(cs.step_index - s.step_index) < spec.interval
                      for _, ct, cs in chosen)
        if not blocked and threshold is not None:
            blocked = any(math.dist(cs.observation.features, s.observation.features) < threshold
                          for _, _, cs in chosen)
        if not blocked:
            chosen.append((imp, t, s))
    items = tuple(_item(t, s, imp, spec.context_window) for imp, t, s in chosen)
    return Summary(items, spec, traces[0].agent_id, traces[0].components)


def highlights(traces: Sequence[Trace], spec: SummarySpec) -> Summary:
    """Most important states, keeping same-episode picks at least ``interval`` steps apart.

    Ties in importance go to the earlier episode, then the earlier step.
    """
    return _greedy(traces, spec, None)


def highlights_div(traces: Sequence[Trace], spec: SummarySpec) -> Summary:
    """HIGHLIGHTS that also rejects states closer than ``div_threshold`` (Euclidean, on
    observation features) to any state already selected."""
    if spec.div_threshold is None:
        raise SummaryError("highlights-div needs div_threshold")
    return _greedy(traces, spec, spec.div_threshold)


def frequency_sample(traces: Sequence[Trace], spec: SummarySpec) -> Summary:
    """k distinct steps drawn uniformly without replacement, ordered by (episode, step)."""
    flat = _flatten(traces)
    if len(flat) < spec.k:
        raise SummaryError(f"need at least k={spec.k} steps, traces hold {len(flat)}")
    rng = np.random.default_rng(spec.seed)
    picks = sorted(int(i) for i in rng.choice(len(flat), size=spec.k, replace=False))
    items = tuple(_item(t, s, importance(s, spec.metric), spec.context_window)
                  for t, s in (flat[i] for i in picks))
    return Summary(items, spec, traces[0].agent_id, traces[0].components)


def summarize(traces: Sequence[Trace], spec: SummarySpec) -> Summary:
    if spec.selection is Selection.HIGHLIGHTS:
        return highlights(traces, spec)
    if spec.selection is Selection.HIGHLIGHTS_DIV:
        return highlights_div(traces, spec)
    return frequency_sample(traces, spec)


def replicate_seeds(master_seed: int, n: int) -> list[int]:
    from .core import derive_seeds
    return derive_seeds(master_seed, n)


# --- persistence ---------------------------------------------------------------


def summary_to_dict(summary: Summary) -> dict:
    return {
        "agent_id": summary.agent_id,
        "components": list(summary.components),
        "spec": summary.spec.to_dict(),
        "items": [
            {
                "episode_id": it.episode_id,
                "central_step": it.central_step,
                "importance": it.importance,
                "window": list(it.window_bounds),
                "central": step_to_record(it.central),
            }
            for it in summary.items
        ],
    }


def dumps_summary(summary: Summary) -> str:
    return json.dumps(summary_to_dict(summary), indent=1, sort_keys=True) + "\n"


def save_summary(summary: Summary, path: Path | str) -> None:
    atomic_write_text(path, dumps_summary(summary))


def load_summary(path: Path | str, traces: Iterable[Trace] | None = None) -> Summary:
    """Read a summary document; with ``traces`` the context windows are restored."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    by_episode = {t.episode_id: t for t in traces} if traces is not None else {}
    items = []
    for rec in doc["items"]:
        central = step_from_record(rec["central"])
        lo, hi = rec["window"]
        trace = by_episode.get(rec["episode_id"])
        window = trace.steps[lo:hi + 1] if trace is not None else (central,)
        items.append(SummaryItem(int(rec["episode_id"]), int(rec["central_step"]),
                                 float(rec["importance"]), tuple(window), central))
    spec = SummarySpec(**doc["spec"])
    return Summary(tuple(items), spec, doc["agent_id"], tuple(doc.get("components", ())))
