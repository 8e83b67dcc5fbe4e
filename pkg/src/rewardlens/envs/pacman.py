"""Grid Pac-Man with normal pills, power pills, frightened ghosts and a death penalty.

Maze text format: ``#`` wall, ``.`` normal pill, ``o`` power pill, space empty,
``P`` Pac-Man spawn, ``G`` ghost spawn. Rows must all have the same width.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

from ..core import Observation, RewardVector, TraceStep
from . import svg

COMPONENTS = ("NP", "PP", "BG", "DIE")
NP, PP, BG, DIE = range(4)
UP, DOWN, LEFT, RIGHT, IDLE = range(5)
ACTION_NAMES = ("UP", "DOWN", "LEFT", "RIGHT", "IDLE")
DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
DIRECTION_LETTERS = "UDLRN"  # N: no pill left

BASE_NP = 1.0
BASE_PP = 5.0
BASE_BG = 20.0
BASE_DIE = -10.0
MAX_SUCCESSIVE = 4

DEFAULT_MAZE = """\
#######
#o...G#
#.#.#.#
#.....#
#.#.#.#
#P...o#
#######
"""

Cell = tuple[int, int]


class MazeError(ValueError):
    pass


@dataclass(frozen=True)
class Maze:
    rows: tuple[str, ...]

    @classmethod
    def parse(cls, text: str) -> Maze:
        rows = tuple(line for line in text.splitlines() if line.strip("\n") != "")
        if not rows:
            raise MazeError("empty maze")
        if len({len(r) for r in rows}) != 1:
            raise MazeError("maze rows must all have the same width")
        bad = set("".join(rows)) - set("#.o PG")
        if bad:
            raise MazeError(f"unknown maze characters {sorted(bad)}")
        maze = cls(rows)
        if maze.pacman_spawn is None:
            raise MazeError("maze has no 'P' spawn")
        if not maze.ghost_spawns:
            raise MazeError("maze has no 'G' spawn")
        if not maze.pills and not maze.power_pills:
            raise MazeError("maze has no pills")
        return maze

    @classmethod
    def load(cls, path: Path | str) -> Maze:
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def _cells(self, chars: str) -> tuple[Cell, ...]:
        return tuple((r, c) for r, row in enumerate(self.rows)
                     for c, ch in enumerate(row) if ch in chars)

    @cached_property
    def open_cells(self) -> tuple[Cell, ...]:
        return self._cells(".o PG")

    @cached_property
    def index(self) -> dict[Cell, int]:
        return {cell: i for i, cell in enumerate(self.open_cells)}

    @cached_property
    def pills(self) -> tuple[Cell, ...]:
        return self._cells(".")

    @cached_property
    def power_pills(self) -> tuple[Cell, ...]:
        return self._cells("o")

    @cached_property
    def pacman_spawn(self) -> Cell | None:
        found = self._cells("P")
        return found[0] if found else None

    @cached_property
    def ghost_spawns(self) -> tuple[Cell, ...]:
        return self._cells("G")

    def is_wall(self, cell: Cell) -> bool:
        r, c = cell
        return not (0 <= r < self.height and 0 <= c < self.width) or self.rows[r][c] == "#"

    @cached_property
    def moves(self) -> dict[Cell, tuple[Cell, ...]]:
        """Destination per action (UP, DOWN, LEFT, RIGHT, IDLE); walls give no-ops."""
        out = {}
        for r, c in self.open_cells:
            dest = []
            for dr, dc in DELTAS:
                nxt = (r + dr, c + dc)
                dest.append((r, c) if self.is_wall(nxt) else nxt)
            out[(r, c)] = tuple(dest)
        return out

    def mask(self, cells) -> int:
        m = 0
        for cell in cells:
            m |= 1 << self.index[cell]
        return m


@dataclass(frozen=True)
class PacmanConfig:
    maze: Maze = field(default_factory=lambda: Maze.parse(DEFAULT_MAZE))
    num_ghosts: int = 1
    frightened_duration: int = 10
    episode_length: int = 200
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.num_ghosts < 0:
            raise ValueError("num_ghosts must be non-negative")
        if self.frightened_duration < 1:
            raise ValueError("frightened_duration must be positive")
        if self.episode_length < 1:
            raise ValueError("episode_length must be positive")
        if len(self.weights) != len(COMPONENTS):
            raise ValueError(f"expected {len(COMPONENTS)} weights, got {len(self.weights)}")


@dataclass(frozen=True)
class PacmanState:
    pacman_pos: Cell
    ghost_pos: tuple[Cell, ...]
    ghost_frightened_timer: int
    pills_remaining: int
    power_pills_remaining: int
    successive_bg_count: int = 0
    step: int = 0
    episode_seed: int = 0
    ghost_frightened: tuple[bool, ...] = ()

    def frightened(self, i: int) -> bool:
        return self.ghost_frightened_timer > 0 and bool(self.ghost_frightened[i])


def ghost_spawn(config: PacmanConfig, i: int) -> Cell:
    spawns = config.maze.ghost_spawns
    return spawns[i % len(spawns)]


def reset(config: PacmanConfig, episode_seed: int) -> PacmanState:
    maze = config.maze
    return PacmanState(
        pacman_pos=maze.pacman_spawn,
        ghost_pos=tuple(ghost_spawn(config, i) for i in range(config.num_ghosts)),
        ghost_frightened_timer=0,
        pills_remaining=maze.mask(maze.pills),
        power_pills_remaining=maze.mask(maze.power_pills),
        successive_bg_count=0,
        step=0,
        episode_seed=int(episode_seed),
        ghost_frightened=(False,) * config.num_ghosts,
    )


def _manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _ghost_move(maze: Maze, g: Cell, target: Cell, frightened: bool, rng_key: str) -> Cell:
    options = [d for d in maze.moves[g][:4] if d != g]
    if not options:
        return g
    if frightened:
        return random.Random(rng_key).choice(options)
    return min(options, key=lambda d: _manhattan(d, target))


def base_step(s: PacmanState, a: int, config: PacmanConfig) -> tuple[PacmanState, list[float], bool]:
    """Transition with unweighted rewards."""
    if a not in (UP, DOWN, LEFT, RIGHT, IDLE):
        raise ValueError(f"unknown pacman action {a!r}")
    maze = config.maze
    base = [0.0, 0.0, 0.0, 0.0]
    timer = max(0, s.ghost_frightened_timer - 1)
    count = s.successive_bg_count
    pos = maze.moves[s.pacman_pos][a]
    bit = 1 << maze.index[pos]
    pills, ppills = s.pills_remaining, s.power_pills_remaining
    scared = [timer > 0 and f for f in s.ghost_frightened]
    if pills & bit:
        pills &= ~bit
        base[NP] += BASE_NP
    if ppills & bit:
        ppills &= ~bit
        base[PP] += BASE_PP
        timer = config.frightened_duration
        count = 0
        scared = [True] * len(scared)

    ghosts = list(s.ghost_pos)
    eaten = [False] * len(ghosts)
    dead = False

    def meet(i):
        nonlocal count, dead
        if scared[i]:
            base[BG] += BASE_BG * 2 ** min(count, MAX_SUCCESSIVE - 1)
            count = min(count + 1, MAX_SUCCESSIVE)
            ghosts[i] = ghost_spawn(config, i)
            eaten[i] = True
            scared[i] = False
        else:
            dead = True

    for i, g in enumerate(ghosts):
        if g == pos:
            meet(i)
    if not dead:
        for i, g in enumerate(ghosts):
            if eaten[i]:
                continue
            ghosts[i] = _ghost_move(maze, g, pos, scared[i], f"{s.episode_seed}:{s.step}:{i}")
            if ghosts[i] == pos:
                meet(i)
                if dead:
                    break
    if dead:
        base[DIE] += BASE_DIE

    n = s.step + 1
    terminal = dead or (pills == 0 and ppills == 0) or n >= config.episode_length
    s2 = PacmanState(pos, tuple(ghosts), timer, pills, ppills, count, n, s.episode_seed,
                     tuple(scared) if timer > 0 else (False,) * len(scared))
    return s2, base, terminal


def step(s: PacmanState, a: int, config: PacmanConfig) -> tuple[PacmanState, RewardVector, bool]:
    s2, base, terminal = base_step(s, a, config)
    return s2, tuple(b * float(w) for b, w in zip(base, config.weights)), terminal


def timer_bucket(timer: int, duration: int) -> int:
    if timer <= 0:
        return 0
    return 1 if timer <= duration // 2 else 2


def nearest_pill_direction(maze: Maze, pos: Cell, pill_mask: int) -> int:
    """First move (UP/DOWN/LEFT/RIGHT) on a shortest path to any pill, else 4."""
    if pill_mask == 0:
        return 4
    seen = {pos}
    queue = deque()
    for d in range(4):
        nxt = maze.moves[pos][d]
        if nxt not in seen:
            seen.add(nxt)
            queue.append((nxt, d))
    while queue:
        cell, first = queue.popleft()
        if pill_mask >> maze.index[cell] & 1:
            return first
        for d in range(4):
            nxt = maze.moves[cell][d]
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, first))
    return 4


def observe(s: PacmanState, config: PacmanConfig) -> Observation:
    maze = config.maze
    scared = [s.frightened(i) for i in range(len(s.ghost_pos))]
    bucket = timer_bucket(s.ghost_frightened_timer, config.frightened_duration) if any(scared) else 0
    n_pp = bin(s.power_pills_remaining).count("1")
    direction = nearest_pill_direction(maze, s.pacman_pos, s.pills_remaining | s.power_pills_remaining)
    ghosts = ";".join(f"{r},{c}{'f' if f else ''}" for (r, c), f in zip(s.ghost_pos, scared))
    oid = (f"P{s.pacman_pos[0]},{s.pacman_pos[1]}|G{ghosts}|T{bucket}"
           f"|N{n_pp}|D{DIRECTION_LETTERS[direction]}")
    feats = [float(s.pacman_pos[0]), float(s.pacman_pos[1])]
    for (r, c), f in zip(s.ghost_pos, scared):
        feats += [float(r), float(c), float(f)]
    feats += [float(bucket), float(n_pp), float(direction)]
    return Observation(oid, tuple(feats))


def render_ascii(s: PacmanState, config: PacmanConfig) -> str:
    maze = config.maze
    grid = [["#" if ch == "#" else " " for ch in row] for row in maze.rows]
    for cell, i in maze.index.items():
        if s.pills_remaining >> i & 1:
            grid[cell[0]][cell[1]] = "."
        if s.power_pills_remaining >> i & 1:
            grid[cell[0]][cell[1]] = "o"
    for i, (r, c) in enumerate(s.ghost_pos):
        grid[r][c] = "g" if s.frightened(i) else "G"
    grid[s.pacman_pos[0]][s.pacman_pos[1]] = "P"
    return "\n".join("".join(r) for r in grid)


class PacmanEnv:
    name = "pacman"
    components = COMPONENTS
    action_names = ACTION_NAMES
    default_metric = "max_minus_second"
    default_bar_mode = "chosen_action_only"

    def __init__(self, config: PacmanConfig | None = None):
        self.config = config or PacmanConfig()

    def with_weights(self, weights) -> PacmanEnv:
        return PacmanEnv(replace(self.config, weights=tuple(float(w) for w in weights)))

    def reset(self, episode_seed: int) -> PacmanState:
        return reset(self.config, episode_seed)

    def step(self, state: PacmanState, action: int):
        return step(state, action, self.config)

    def observe(self, state: PacmanState) -> Observation:
        return observe(state, self.config)

    def legal_actions(self, state: PacmanState) -> tuple[int, ...]:
        return (UP, DOWN, LEFT, RIGHT, IDLE)

    def component_max_magnitudes(self) -> tuple[float, ...]:
        peaks = (BASE_NP, BASE_PP, BASE_BG * 2 ** (MAX_SUCCESSIVE - 1), abs(BASE_DIE))
        return tuple(p * abs(float(w)) for p, w in zip(peaks, self.config.weights))

    def render_ascii(self, state: PacmanState) -> str:
        return render_ascii(state, self.config)

    def behavior_events(self, steps: list[TraceStep]) -> list[tuple[float, ...]]:
        """Per-step indicator of which item was eaten (or death), as seen on screen."""
        return [tuple(1.0 if r != 0.0 else 0.0 for r in st.reward) for st in steps]

    def render_svg(self, obs: Observation, title: str = "") -> str:
        return svg.pacman_board(obs, self.config.maze, title)
