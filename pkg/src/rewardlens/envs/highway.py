"""Discrete circular-road highway with lane-change, speed and right-lane rewards.

Ego and traffic live on a ring of ``road_length`` cells per lane. Traffic keeps
its lane and speed; the ego chooses one of five actions per step. A crash (ego
sharing a cell with a traffic vehicle after simultaneous movement) ends the
episode and spreads ``crash_penalty_total`` evenly over the reward components.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Observation, RewardVector, TraceStep
from . import svg

COMPONENTS = ("CL", "SU", "RML")
LANE_LEFT, IDLE, LANE_RIGHT, FASTER, SLOWER = range(5)
ACTION_NAMES = ("LANE_LEFT", "IDLE", "LANE_RIGHT", "FASTER", "SLOWER")

# (low, high) cell offsets relative to the ego, inclusive
OCCUPANCY_BANDS = ((-2, 0), (1, 2), (3, 5))


class HighwayConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HighwayConfig:
    num_lanes: int = 4
    num_vehicles: int = 8
    road_length: int = 60
    episode_length: int = 40
    speed_levels: int = 5
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    crash_penalty_total: float = -3.0
    seed: int = 0

    def __post_init__(self):
        if self.num_lanes < 2:
            raise HighwayConfigError("num_lanes must be >= 2")
        if self.speed_levels < 2:
            raise HighwayConfigError("speed_levels must be >= 2")
        if self.road_length < 1 or self.episode_length < 1:
            raise HighwayConfigError("road_length and episode_length must be positive")
        if len(self.weights) != len(COMPONENTS):
            raise HighwayConfigError(f"expected {len(COMPONENTS)} weights, got {len(self.weights)}")
        if not all(np.isfinite(self.weights)):
            raise HighwayConfigError("weights must be finite")


@dataclass(frozen=True)
class HighwayState:
    ego_lane: int
    ego_speed: int
    ego_pos: int
    others: tuple[tuple[int, int, int], ...] = field(default=())
    step: int = 0


def reset(config: HighwayConfig, episode_seed: int) -> HighwayState:
    n_cells = config.num_lanes * config.road_length
    if config.num_vehicles >= n_cells:
        raise HighwayConfigError(
            f"num_vehicles={config.num_vehicles} does not fit on {n_cells} cells"
        )
    if config.num_vehicles < 0:
        raise HighwayConfigError("num_vehicles must be non-negative")
    ego_lane = config.num_lanes // 2
    rng = np.random.default_rng(episode_seed)
    ego_cell = ego_lane * config.road_length
    free = np.delete(np.arange(n_cells), ego_cell)
    cells = rng.choice(free, size=config.num_vehicles, replace=False)
    speeds = rng.integers(1, 3, size=config.num_vehicles)
    others = tuple(
        (int(c) // config.road_length, int(c) % config.road_length, int(v))
        for c, v in zip(cells, speeds)
    )
    return HighwayState(ego_lane=ego_lane, ego_speed=1, ego_pos=0, others=others, step=0)


def step(s: HighwayState, a: int, config: HighwayConfig) -> tuple[HighwayState, RewardVector, bool]:
    if a not in (LANE_LEFT, IDLE, LANE_RIGHT, FASTER, SLOWER):
        raise ValueError(f"unknown highway action {a!r}")
    lane = s.ego_lane
    if a == LANE_LEFT:
        lane = max(0, lane - 1)
    elif a == LANE_RIGHT:
        lane = min(config.num_lanes - 1, lane + 1)
    speed = s.ego_speed
    if a == FASTER:
        speed = min(config.speed_levels - 1, speed + 1)
    elif a == SLOWER:
        speed = max(0, speed - 1)
    L = config.road_length
    pos = (s.ego_pos + speed) % L
    others = tuple((ln, (p + v) % L, v) for ln, p, v in s.others)
    crashed = any(ln == lane and p == pos for ln, p, _ in others)
    n = s.step + 1
    terminal = crashed or n >= config.episode_length

    if crashed:
        per = config.crash_penalty_total / len(COMPONENTS)
        reward = (per,) * len(COMPONENTS)
    else:
        w_cl, w_su, w_rml = config.weights
        reward = (
            float(w_cl) if lane != s.ego_lane else 0.0,
            float(w_su) * speed / (config.speed_levels - 1),
            float(w_rml) if lane == config.num_lanes - 1 else 0.0,
        )
    return HighwayState(lane, speed, pos, others, n), reward, terminal


def occupancy(s: HighwayState, config: HighwayConfig) -> tuple[int, ...]:
    """Nine booleans: lanes (left, own, right) x bands (beside, near ahead, far ahead)."""
    L = config.road_length
    bits = []
    for dl in (-1, 0, 1):
        lane = s.ego_lane + dl
        for lo, hi in OCCUPANCY_BANDS:
            hit = 0
            if 0 <= lane < config.num_lanes:
                for ln, p, _ in s.others:
                    if ln == lane:
                        off = (p - s.ego_pos) % L
                        if off > L // 2:
                            off -= L
                        if lo <= off <= hi:
                            hit = 1
                            break
            bits.append(hit)
    return tuple(bits)


def observe(s: HighwayState, config: HighwayConfig) -> Observation:
    bits = occupancy(s, config)
    oid = f"L{s.ego_lane}V{s.ego_speed}O{''.join(map(str, bits))}"
    return Observation(oid, (float(s.ego_lane), float(s.ego_speed)) + tuple(float(b) for b in bits))


def render_ascii(s: HighwayState, config: HighwayConfig) -> str:
    rows = [["."] * config.road_length for _ in range(config.num_lanes)]
    for ln, p, _ in s.others:
        rows[ln][p] = "x"
    rows[s.ego_lane][s.ego_pos] = "E"
    return "\n".join("".join(r) for r in rows)


class HighwayEnv:
    name = "highway"
    components = COMPONENTS
    action_names = ACTION_NAMES
    default_metric = "max_minus_min"
    default_bar_mode = "all_actions"

    def __init__(self, config: HighwayConfig | None = None):
        self.config = config or HighwayConfig()

    def with_weights(self, weights) -> HighwayEnv:
        return HighwayEnv(replace(self.config, weights=tuple(float(w) for w in weights)))

    def reset(self, episode_seed: int) -> HighwayState:
        return reset(self.config, episode_seed)

    def step(self, state: HighwayState, action: int):
        return step(state, action, self.config)

    def observe(self, state: HighwayState) -> Observation:
        return observe(state, self.config)

    def legal_actions(self, state: HighwayState) -> tuple[int, ...]:
        return (LANE_LEFT, IDLE, LANE_RIGHT, FASTER, SLOWER)

    def component_max_magnitudes(self) -> tuple[float, ...]:
        crash = abs(self.config.crash_penalty_total) / len(COMPONENTS)
        return tuple(max(abs(float(w)), crash) for w in self.config.weights)

    def render_ascii(self, state: HighwayState) -> str:
        return render_ascii(state, self.config)

    def behavior_events(self, steps: list[TraceStep]) -> list[tuple[float, ...]]:
        """What a viewer of the frames sees per step, independent of reward weights.

        Lane changes, relative speed and right-lane occupancy are read off
        consecutive observations.
        """
        top = self.config.speed_levels - 1
        out = []
        prev_lane = None
        for st in steps:
            lane, speed = st.observation.features[0], st.observation.features[1]
            changed = 1.0 if prev_lane is not None and lane != prev_lane else 0.0
            out.append((changed, speed / top, 1.0 if lane == self.config.num_lanes - 1 else 0.0))
            prev_lane = lane
        return out

    def render_svg(self, obs: Observation, title: str = "") -> str:
        return svg.highway_board(obs, self.config.num_lanes, self.config.speed_levels, title)
