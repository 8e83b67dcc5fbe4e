"""Built-in environments.

Every environment exposes ``reset(episode_seed)``, ``step(state, action)``,
``observe(state)``, ``legal_actions(state)`` plus the metadata used by the
recorder, summarizer and report renderer (``components``, ``action_names``,
``default_metric``, ``default_bar_mode``, ``render_svg``, ``behavior_events``).
"""

from __future__ import annotations

from .highway import HighwayConfig, HighwayEnv
from .mdp import ExplicitMDP, MDPEnv, random_mdp
from .pacman import Maze, PacmanConfig, PacmanEnv

ENVIRONMENTS = ("highway", "pacman")


def make_env(env_id: str, section: dict | None = None, weights=None):
    """Build an environment from a run-config section and an agent weight vector."""
    section = dict(section or {})
    if env_id == "highway":
        env = HighwayEnv(HighwayConfig(**section))
    elif env_id == "pacman":
        maze_text = section.pop("maze", None)
        maze_file = section.pop("maze_file", None)
        if maze_file is not None:
            section["maze"] = Maze.load(maze_file)
        elif maze_text is not None:
            section["maze"] = Maze.parse(maze_text)
        env = PacmanEnv(PacmanConfig(**section))
    else:
        raise ValueError(f"unknown environment {env_id!r}; expected one of {ENVIRONMENTS}")
    return env.with_weights(weights) if weights is not None else env


__all__ = [
    "ENVIRONMENTS", "ExplicitMDP", "HighwayConfig", "HighwayEnv", "MDPEnv", "Maze",
    "PacmanConfig", "PacmanEnv", "make_env", "random_mdp",
]
