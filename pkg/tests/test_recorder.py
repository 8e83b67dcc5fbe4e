import math

import numpy as np
import pytest

from rewardlens.core import HyperParams, greedy_action, load_traces
from rewardlens.envs import MDPEnv, PacmanEnv
from rewardlens.envs.mdp import ExplicitMDP
from rewardlens.learner import DecomposedQ, train
from rewardlens.recorder import evaluate, record


def _two_step_env():
    P = np.zeros((3, 1, 3))
    P[0, 0, 1] = P[1, 0, 2] = P[2, 0, 2] = 1.0
    R = np.ones((3, 1, 3, 2))
    return MDPEnv(ExplicitMDP(P, R, np.array([False, False, True])))


def test_two_step_episode_structure():
    env = _two_step_env()
    traces = record(env, DecomposedQ(1, 2), 1, seed=0)
    (t,) = traces
    assert [s.terminal for s in t.steps] == [False, True]
    assert t.total_reward == 4.0


def test_record_requires_episodes():
    with pytest.raises(ValueError):
        record(_two_step_env(), DecomposedQ(1, 2), 0, seed=0)


def test_record_is_greedy_and_files_are_identical(tmp_path):
    env = PacmanEnv()
    q, _ = train(env, HyperParams(episodes=30, seed=2))
    a = record(env, q, 4, seed=9, agent_id="pac", out_dir=tmp_path / "a")
    record(env, q, 4, seed=9, agent_id="pac", out_dir=tmp_path / "b")
    for t in a:
        assert math.isclose(t.total_reward, math.fsum(v for s in t.steps for v in s.reward),
                            abs_tol=1e-9)
        for s in t.steps:
            assert set(s.q_values) == set(s.legal_actions)
            assert s.chosen_action == greedy_action(s.q_values)
    files_a = sorted((tmp_path / "a" / "pac").iterdir())
    assert [p.name for p in files_a] == ["0.jsonl", "1.jsonl", "2.jsonl", "3.jsonl"]
    for p in files_a:
        assert p.read_bytes() == (tmp_path / "b" / "pac" / p.name).read_bytes()
    assert load_traces(tmp_path / "a" / "pac") == a


def test_write_failure_names_path_and_episode(tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("not a directory")
    with pytest.raises(OSError, match="episode 0"):
        record(_two_step_env(), DecomposedQ(1, 2), 1, seed=0, out_dir=blocker)


def test_evaluate_returns_totals():
    totals = evaluate(_two_step_env(), DecomposedQ(1, 2), 3, seed=1)
    assert totals == [4.0, 4.0, 4.0]
