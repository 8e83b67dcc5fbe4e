"""Reward-decomposition bar charts and static HTML reports for summaries."""

from __future__ import annotations

import html
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from .core import atomic_write_text
from .envs.svg import SVG_HEADER
from .summarizer import Summary, SummaryItem


class BarMode(str, Enum):
    ALL_ACTIONS = "all_actions"
    CHOSEN_ACTION_ONLY = "chosen_action_only"


class ReportMode(str, Enum):
    H = "h"
    FS = "fs"
    H_RD = "h+rd"
    FS_RD = "fs+rd"

    @property
    def shows_bars(self) -> bool:
        return self in (ReportMode.H_RD, ReportMode.FS_RD)


class ExplainError(ValueError):
    pass


# Indexed by component position so a component keeps its colour in every chart.
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class Bar:
    action: int
    component: int
    q: float


@dataclass(frozen=True)
class DecompositionBars:
    state_ref: tuple[int, int]
    mode: BarMode
    bars: tuple[Bar, ...]
    component_names: tuple[str, ...] = ()
    action_names: tuple[str, ...] = ()

    def actions(self) -> list[int]:
        seen: list[int] = []
        for b in self.bars:
            if b.action not in seen:
                seen.append(b.action)
        return seen


@dataclass(frozen=True)
class BarStyle:
    bar_width: int = 14
    group_gap: int = 18
    plot_height: int = 180
    margin_left: int = 64
    margin_top: int = 34
    margin_bottom: int = 46
    legend_width: int = 110
    title: str = ""


def decompose(item: SummaryItem, mode: BarMode | str, component_names: Sequence[str] = (),
              action_names: Sequence[str] = ()) -> DecompositionBars:
    """Bars straight from the recorded per-head Q-values of the central state."""
    mode = BarMode(mode)
    st = item.central
    ref = (item.episode_id, item.central_step)
    if not st.q_values:
        raise ExplainError(f"step {ref[1]} of episode {ref[0]} has no q_values")
    actions = list(st.legal_actions) if mode is BarMode.ALL_ACTIONS else [st.chosen_action]
    bars = []
    for a in actions:
        if a not in st.q_values:
            raise ExplainError(f"step {ref[1]} of episode {ref[0]} has no q_values for action {a}")
        bars.extend(Bar(a, c, q) for c, q in enumerate(st.q_values[a]))
    return DecompositionBars(ref, mode, tuple(bars), tuple(component_names), tuple(action_names))


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_bars_svg(bars: DecompositionBars, style: BarStyle | None = None) -> str:
    """Grouped bar chart: one group per action, one coloured bar per component.

    The y axis spans [min(0, min q), max(0, max q)]; bar titles carry the exact
    recorded values.
    """
    style = style or BarStyle()
    if not bars.bars:
        raise ExplainError("no bars to render")
    actions = bars.actions()
    n_comp = max(b.component for b in bars.bars) + 1
    lo = min(0.0, min(b.q for b in bars.bars))
    hi = max(0.0, max(b.q for b in bars.bars))
    span = hi - lo
    ph = style.plot_height

    def y_of(v: float) -> float:
        if span == 0:
            return float(style.margin_top + ph)
        return style.margin_top + (hi - v) / span * ph

    group_w = n_comp * style.bar_width + style.group_gap
    plot_w = len(actions) * group_w
    w = style.margin_left + plot_w + style.legend_width
    h = style.margin_top + ph + style.margin_bottom
    comp_names = list(bars.component_names) or [f"c{i}" for i in range(n_comp)]
    act_names = bars.action_names

    out = [SVG_HEADER.format(w=w, h=h)]
    if style.title:
        out.append(f'<text x="{style.margin_left}" y="18" font-family="sans-serif" '
                   f'font-size="13">{escape(style.title)}</text>\n')
    zero_y = y_of(0.0)
    x0, x1 = style.margin_left, style.margin_left + plot_w
    out.append('<g id="axes" stroke="#444444" stroke-width="1">\n')
    out.append(f'<line x1="{x0}" y1="{style.margin_top}" x2="{x0}" y2="{style.margin_top + ph}"/>\n')
    out.append(f'<line x1="{x0}" y1="{_fmt(zero_y)}" x2="{x1}" y2="{_fmt(zero_y)}"/>\n')
    out.append("</g>\n")
    out.append('<g id="ticks" font-family="sans-serif" font-size="10" text-anchor="end">\n')
    for v in sorted({lo, 0.0, hi}):
        out.append(f'<text x="{x0 - 4}" y="{_fmt(y_of(v) + 3)}">{v:.3g}</text>\n')
    out.append("</g>\n")

    out.append('<g id="bars">\n')
    for b in bars.bars:
        gi = actions.index(b.action)
        x = style.margin_left + gi * group_w + style.group_gap / 2 + b.component * style.bar_width
        top, bottom = sorted((y_of(b.q), zero_y))
        name = act_names[b.action] if b.action < len(act_names) else f"a{b.action}"
        label = f"{name} {comp_names[b.component]}: {b.q!r}"
        out.append(f'<rect x="{_fmt(x)}" y="{_fmt(top)}" width="{style.bar_width - 2}" '
                   f'height="{_fmt(bottom - top)}" fill="{PALETTE[b.component % len(PALETTE)]}">'
                   f'<title>{escape(label)}</title></rect>\n')
    out.append("</g>\n")

    out.append('<g id="action-labels" font-family="sans-serif" font-size="10" text-anchor="middle">\n')
    for gi, a in enumerate(actions):
        cx = style.margin_left + gi * group_w + group_w / 2
        name = act_names[a] if a < len(act_names) else f"a{a}"
        out.append(f'<text x="{_fmt(cx)}" y="{style.margin_top + ph + 16}">{escape(name)}</text>\n')
    out.append("</g>\n")

    out.append('<g id="legend" font-family="sans-serif" font-size="11">\n')
    lx = x1 + 14
    for c, cname in enumerate(comp_names):
        ly = style.margin_top + c * 18
        out.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" '
                   f'fill="{PALETTE[c % len(PALETTE)]}"/>\n')
        out.append(f'<text x="{lx + 15}" y="{ly + 9}">{escape(cname)}</text>\n')
    out.append("</g>\n</svg>\n")
    return "".join(out)


# --- report ------------------------------------------------------------------

_CSS = """body { font-family: sans-serif; margin: 24px; color: #222; }
nav a { margin-right: 10px; }
section { border-top: 1px solid #ccc; padding: 12px 0; }
.strip { display: flex; flex-wrap: wrap; gap: 4px; }
.strip figure { margin: 0; }
.strip figure.central img { outline: 3px solid #d62728; }
figcaption { font-size: 11px; text-align: center; }
.pair { display: flex; gap: 24px; align-items: flex-start; }
table { border-collapse: collapse; font-size: 12px; }
td, th { border: 1px solid #ccc; padding: 2px 6px; text-align: right; }
"""


def _q_table(item: SummaryItem, bars: DecompositionBars) -> str:
    comps = bars.component_names
    rows = ["<table><tr><th>action</th>" + "".join(f"<th>{html.escape(c)}</th>" for c in comps)
            + "</tr>"]
    for a in bars.actions():
        name = bars.action_names[a] if a < len(bars.action_names) else f"a{a}"
        vals = "".join(f"<td>{b.q!r}</td>" for b in bars.bars if b.action == a)
        mark = " (chosen)" if a == item.central.chosen_action else ""
        rows.append(f"<tr><th>{html.escape(name + mark)}</th>{vals}</tr>")
    rows.append("</table>")
    return "\n".join(rows)


def render_report(summaries: Sequence[Summary], mode: ReportMode | str, out_dir: Path | str,
                  env, bar_mode: BarMode | str | None = None, title: str = "") -> Path:
    """Write ``report.html`` and its SVG assets; returns the report path.

    RD modes show each scenario's central state with its decomposition bars;
    the other modes show the context window as a strip of board frames.
    """
    mode = ReportMode(mode)
    bar_mode = BarMode(bar_mode or env.default_bar_mode)
    out_dir = Path(out_dir)
    assets = out_dir / "assets"
    comps = tuple(env.components)
    acts = tuple(env.action_names)
    agent = summaries[0].agent_id if summaries else ""
    heading = title or f"{agent}: {mode.value.upper()} summary"

    written: dict[str, str] = {}

    def asset(name: str, text: str) -> str:
        if name not in written:
            written[name] = text
        return f"assets/{name}"

    sections = []
    toc = []
    n = 0
    for si, summary in enumerate(summaries):
        if len(summaries) > 1:
            sections.append(f"<h2>Summary {si + 1}</h2>")
        for item in summary.items:
            n += 1
            ep, st = item.episode_id, item.central_step
            anchor = f"scenario-{n}"
            toc.append(f'<a href="#{anchor}">Scenario {n}</a>')
            parts = [f'<section id="{anchor}"><h3>Scenario {n}</h3>',
                     f"<p>episode {ep}, step {st}, importance {item.importance!r}, "
                     f"chosen action {html.escape(acts[item.central.chosen_action])}</p>"]
            if mode.shows_bars:
                board = asset(f"board_{ep}_{st}.svg",
                              env.render_svg(item.central.observation, f"episode {ep} step {st}"))
                bars = decompose(item, bar_mode, comps, acts)
                chart = asset(f"scenario_{n}_{ep}_{st}.svg", render_bars_svg(bars))
                parts.append(f'<div class="pair"><img src={quoteattr(board)} alt="board"/>'
                             f'<img src={quoteattr(chart)} alt="reward decomposition"/></div>')
                parts.append(_q_table(item, bars))
            else:
                parts.append('<div class="strip">')
                for fs in item.window:
                    src = asset(f"frame_{ep}_{fs.step_index}.svg",
                                env.render_svg(fs.observation, f"step {fs.step_index}"))
                    cls = ' class="central"' if fs.step_index == st else ""
                    parts.append(f'<figure{cls}><img src={quoteattr(src)} alt="step {fs.step_index}"/>'
                                 f'<figcaption>{fs.step_index}: '
                                 f'{html.escape(acts[fs.chosen_action])}</figcaption></figure>')
                parts.append("</div>")
            parts.append("</section>")
            sections.append("\n".join(parts))

    doc = "\n".join([
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8"/>',
        f"<title>{html.escape(heading)}</title>",
        f"<style>\n{_CSS}</style></head><body>",
        f"<h1>{html.escape(heading)}</h1>",
        f"<p>components: {html.escape(', '.join(comps))}</p>",
        "<nav>" + " ".join(toc) + "</nav>",
        *sections,
        "</body></html>",
        "",
    ])
    try:
        if assets.is_dir():
            for old in assets.glob("*.svg"):
                if old.name not in written:
                    old.unlink()
        for name, text in sorted(written.items()):
            atomic_write_text(assets / name, text)
        path = out_dir / "report.html"
        atomic_write_text(path, doc)
    except OSError as e:
        raise OSError(f"cannot write report under {out_dir}: {e}") from e
    return path
