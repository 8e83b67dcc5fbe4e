"""Static SVG board images rebuilt from recorded observations."""

from __future__ import annotations

from xml.sax.saxutils import escape

SVG_HEADER = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
              '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
              'width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n')

ARROWS = {0: "↑", 1: "↓", 2: "←", 3: "→"}


def _open(w: int, h: int) -> list[str]:
    return [SVG_HEADER.format(w=w, h=h)]


def _text(x: float, y: float, s: str, size: int = 12, anchor: str = "start") -> str:
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(s)}</text>\n')


def highway_board(obs, num_lanes: int, speed_levels: int, title: str = "") -> str:
    """Lanes as rows; the ego's 3x3 sensed neighbourhood is shaded where occupied."""
    lane, speed = int(obs.features[0]), int(obs.features[1])
    bits = [int(b) for b in obs.features[2:11]]
    cell, cols, top = 28, 9, 24
    w, h = cols * cell + 20, top + num_lanes * cell + 28
    out = _open(w, h)
    if title:
        out.append(_text(10, 16, title, 13))
    for ln in range(num_lanes):
        y = top + ln * cell
        out.append(f'<rect x="10" y="{y}" width="{cols * cell}" height="{cell}" '
                   f'fill="#d9d9d9" stroke="#ffffff" stroke-width="2"/>\n')
    # bands (beside, near, far) drawn at columns 2, 4-5, 6-8 relative to ego at column 2
    band_cols = ((1, 2), (3, 4), (5, 7))
    for i, dl in enumerate((-1, 0, 1)):
        ln = lane + dl
        if not 0 <= ln < num_lanes:
            continue
        for j, (c0, c1) in enumerate(band_cols):
            if bits[i * 3 + j]:
                y = top + ln * cell
                for c in range(c0, c1 + 1):
                    if dl == 0 and c == 2:
                        continue
                    out.append(f'<rect x="{10 + c * cell + 3}" y="{y + 6}" width="{cell - 6}" '
                               f'height="{cell - 12}" fill="#3b6fd4"/>\n')
    y = top + lane * cell
    out.append(f'<rect x="{10 + 2 * cell + 3}" y="{y + 6}" width="{cell - 6}" '
               f'height="{cell - 12}" fill="#2e9e44"/>\n')
    out.append(_text(10, h - 8, f"lane {lane}  speed {speed}/{speed_levels - 1}", 12))
    out.append("</svg>\n")
    return "".join(out)


def pacman_board(obs, maze, title: str = "") -> str:
    """Maze walls, Pac-Man, ghosts (blue while frightened) and the nearest-pill heading."""
    f = obs.features
    cell, top = 26, 24
    w, h = maze.width * cell + 20, top + maze.height * cell + 28
    out = _open(w, h)
    if title:
        out.append(_text(10, 16, title, 13))
    for r, row in enumerate(maze.rows):
        for c, ch in enumerate(row):
            fill = "#1f2a80" if ch == "#" else "#000000"
            out.append(f'<rect x="{10 + c * cell}" y="{top + r * cell}" width="{cell}" '
                       f'height="{cell}" fill="{fill}"/>\n')
    n_ghosts = (len(f) - 5) // 3
    n_pp, direction = int(f[-2]), int(f[-1])
    for g in range(n_ghosts):
        gr, gc, scared = int(f[2 + 3 * g]), int(f[3 + 3 * g]), f[4 + 3 * g]
        ghost_fill = "#4da3ff" if scared else "#e03c31"
        out.append(f'<rect x="{10 + gc * cell + 4}" y="{top + gr * cell + 4}" '
                   f'width="{cell - 8}" height="{cell - 8}" rx="6" fill="{ghost_fill}"/>\n')
    pr, pc = int(f[0]), int(f[1])
    cx, cy = 10 + pc * cell + cell / 2, top + pr * cell + cell / 2
    out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{cell / 2 - 3:.1f}" fill="#ffd800"/>\n')
    heading = ARROWS.get(direction, "none")
    out.append(_text(10, h - 8, f"power pills left {n_pp}  nearest pill {heading}", 12))
    out.append("</svg>\n")
    return "".join(out)
