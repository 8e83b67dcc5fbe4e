"""Matplotlib figures written next to the CSV files they plot."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import atomic_write_bytes  # noqa: E402

# PNG metadata carries the matplotlib version string by default; drop it so the
# files depend only on the plotted data.
_PNG_META = {"Software": None}


def _save(fig, path: Path | str) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata=_PNG_META)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())
    return Path(path)


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if len(v) == 0 or window <= 1:
        return v
    window = min(window, len(v))
    c = np.cumsum(np.insert(v, 0, 0.0))
    head = c[1:window] / np.arange(1, window)
    tail = (c[window:] - c[:-window]) / window
    return np.concatenate([head, tail])


def plot_learning_curve(curve: Sequence[float], path: Path | str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = np.arange(1, len(curve) + 1)
    ax.plot(x, curve, color="#bbbbbb", linewidth=0.6, label="episode return")
    ax.plot(x, moving_average(curve, 100), color="#1f77b4", linewidth=1.5, label="100-episode mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("total reward")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_judge_correctness(rows: Mapping[str, Mapping[str, float | None]],
                           conditions: Sequence[str], path: Path | str, title: str = "") -> Path:
    """Grouped bars: one group per agent, one bar per summary condition."""
    agents = list(rows)
    fig, ax = plt.subplots(figsize=(1.6 + 1.3 * len(agents), 3.5))
    width = 0.8 / max(1, len(conditions))
    colors = ("#2ca02c", "#98df8a", "#1f77b4", "#aec7e8")
    for j, cond in enumerate(conditions):
        vals = [rows[a].get(cond) for a in agents]
        vals = [np.nan if v is None else v for v in vals]
        ax.bar(np.arange(len(agents)) + (j - (len(conditions) - 1) / 2) * width, vals, width,
               label=cond, color=colors[j % len(colors)])
    ax.set_xticks(np.arange(len(agents)))
    ax.set_xticklabels(agents, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("pairwise correctness")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, ncol=len(conditions), loc="upper center", bbox_to_anchor=(0.5, -0.15))
    fig.tight_layout()
    return _save(fig, path)
