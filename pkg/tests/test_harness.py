import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rewardlens.core import HyperParams, Observation, TraceStep
from rewardlens.envs import HighwayEnv, random_mdp
from rewardlens.envs.mdp import ExplicitMDP
from rewardlens.harness import (INDIFFERENT, ConvergenceError, fit_by_sweeps, judge_behavior,
                                judge_preferences, sanity_check, truth_from_orderings,
                                truth_from_weights, value_iteration, verdict, weight_ratio_pairs)
from rewardlens.summarizer import Summary, SummaryItem, SummarySpec

from oracles import naive_value_iteration

HW = ("CL", "SU", "RML")


def _summary(q_rows, comps=HW):
    items = []
    for i, chosen_q in enumerate(q_rows):
        qv = {0: tuple(float(x) for x in chosen_q), 1: tuple(0.0 for _ in comps)}
        s = TraceStep(i, Observation(f"s{i}", (float(i),)), (0, 1), qv, 0, (0.0,) * len(comps), False)
        items.append(SummaryItem(0, i, 1.0, (s,), s))
    return Summary(tuple(items), SummarySpec(k=max(1, len(items))), "a", comps)


def test_value_iteration_single_transition():
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = P[1, 0, 1] = 1.0
    R = np.zeros((2, 1, 2, 2))
    R[0, 0, 1] = (1.0, 2.0)
    qc, q = value_iteration(ExplicitMDP(P, R, np.array([False, True])), 0.9)
    assert qc[0, 0].tolist() == [1.0, 2.0]
    assert q[0, 0] == 3.0


def test_value_iteration_zero_rewards_and_bad_tol():
    mdp = random_mdp(0, 5, 3, 2)
    zero = ExplicitMDP(mdp.transitions, np.zeros_like(mdp.rewards), mdp.terminal)
    qc, q = value_iteration(zero, 0.9)
    assert not qc.any() and not q.any()
    with pytest.raises(ValueError):
        value_iteration(mdp, 0.9, tol=0.0)
    with pytest.raises(ConvergenceError):
        value_iteration(mdp, 0.9, max_iter=2)


def test_value_iteration_components_add_up():
    mdp = random_mdp(6, 6, 3, 3)
    qc, q = value_iteration(mdp, 0.9)
    np.testing.assert_allclose(qc.sum(axis=2), q, atol=1e-9)
    naive = naive_value_iteration(mdp.transitions.tolist(), mdp.rewards.sum(axis=3).tolist(),
                                  mdp.terminal.tolist(), 0.9)
    np.testing.assert_allclose(q, np.array(naive), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_sweep_fit_matches_value_iteration(seed):
    mdp = random_mdp(seed, 6, 3, 2, deterministic=True)
    q = fit_by_sweeps(mdp, HyperParams(gamma=0.9, alpha=1.0), 400)
    _, q_star = value_iteration(mdp, 0.9)
    for s in mdp.reachable():
        if not mdp.terminal[s]:
            np.testing.assert_allclose(q.online_values(f"s{s}").sum(axis=1), q_star[s], atol=1e-6)


def test_sweep_fit_needs_deterministic_mdp():
    with pytest.raises(ValueError):
        fit_by_sweeps(random_mdp(1, 4, 2, 2), HyperParams(), 3)


def test_judge_orders_components():
    res = judge_preferences(_summary([(2.0, 0.5, 6.0)]), HW, truth=truth_from_weights(
        {"CL": 3, "SU": 1, "RML": 8}))
    assert res.verdicts == {("CL", "SU"): "CL", ("CL", "RML"): "RML", ("SU", "RML"): "RML"}
    assert res.correctness == 1.0
    assert res.scores["RML"] == pytest.approx(6.0 / 8.5)


def test_judge_equal_scores_and_basic_agent():
    eq = judge_preferences(_summary([(1.0, 1.0, 1.0)]), HW)
    assert set(eq.verdicts.values()) == {INDIFFERENT}
    basic = judge_preferences(_summary([(0.0, 0.0, 15.0), (0.0, 0.0, 4.0)]), HW,
                              truth=truth_from_weights({"CL": 0, "SU": 0, "RML": 15}))
    assert basic.verdicts[("CL", "SU")] == INDIFFERENT
    assert basic.correctness == 1.0


def test_judge_skips_all_zero_states_and_rejects_empty():
    res = judge_preferences(_summary([(0.0, 0.0, 0.0), (1.0, 3.0, 0.0)]), HW)
    assert res.states_used == 1
    assert res.verdicts[("CL", "SU")] == "SU"
    with pytest.raises(ValueError):
        judge_preferences(_summary([]), HW)


def test_judge_subset_of_components():
    s = _summary([(5.0, 1.0, 4.0, 9.0)], comps=("NP", "PP", "BG", "DIE"))
    res = judge_preferences(s, ("NP", "PP", "BG"))
    assert set(res.verdicts) == {("NP", "PP"), ("NP", "BG"), ("PP", "BG")}
    # DIE still counts towards the per-state magnitude
    assert res.scores["NP"] == pytest.approx(5.0 / 19.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(*[st.floats(-50, 50, allow_nan=False)] * 3), min_size=1, max_size=6),
       st.floats(0.01, 100.0))
def test_judge_invariant_to_rescaling(rows, lam):
    a = judge_preferences(_summary(rows), HW)
    b = judge_preferences(_summary([tuple(lam * x for x in r) for r in rows]), HW)
    for k in a.scores:
        assert b.scores[k] == pytest.approx(a.scores[k], abs=1e-9)
    margins = [abs(a.scores[x] - a.scores[y]) - 0.05 * max(abs(v) for v in a.scores.values())
               for x, y in a.verdicts]
    if all(abs(m) > 1e-9 for m in margins):
        assert a.verdicts == b.verdicts


def test_verdict_threshold():
    assert verdict("a", "b", {"a": 1.0, "b": 0.96}, 0.05) == INDIFFERENT
    assert verdict("a", "b", {"a": 1.0, "b": 0.94}, 0.05) == "a"
    assert verdict("a", "b", {"a": 0.0, "b": 0.0}, 0.05) == INDIFFERENT


def test_truth_helpers():
    w = {"CL": 3.0, "SU": 1.0, "RML": 8.0}
    assert truth_from_weights(w) == {("CL", "SU"): "CL", ("CL", "RML"): "RML",
                                     ("SU", "RML"): "RML"}
    assert weight_ratio_pairs(w) == [("CL", "SU"), ("CL", "RML"), ("SU", "RML")]
    assert weight_ratio_pairs({"a": 8.0, "b": 5.0, "c": 1.0}) == [("a", "c"), ("b", "c")]
    assert weight_ratio_pairs({"a": 0.0, "b": 0.0, "c": 15.0}) == [("a", "c"), ("b", "c")]
    t = truth_from_orderings(["NP", "PP", "BG"], ["PP>NP", "BG = NP"])
    assert t == {("NP", "PP"): "PP", ("NP", "BG"): INDIFFERENT, ("PP", "BG"): INDIFFERENT}
    with pytest.raises(ValueError):
        truth_from_orderings(["NP", "PP"], ["XX>NP"])
    with pytest.raises(ValueError):
        truth_from_orderings(["NP", "PP"], ["NP~PP"])


def test_behavior_judge_counts_visible_events():
    env = HighwayEnv()
    obs = env.observe(env.reset(0))
    steps = [TraceStep(i, obs, (0,), {0: (0.0, 0.0, 0.0)}, 0, (0.0, 0.0, 0.0), False)
             for i in range(3)]
    s = Summary((SummaryItem(0, 1, 0.0, tuple(steps), steps[1]),), SummarySpec(k=1), "a", HW)
    res = judge_behavior(s, HW, env)
    assert len(res.verdicts) == 3


def test_sanity_check_flags_short_training():
    rep = sanity_check(HighwayEnv().with_weights((5.0, 5.0, 5.0)), HyperParams(episodes=1, seed=0),
                       eval_episodes=2)
    assert rep.insufficient_training
    assert rep.to_dict()["episodes"] == 1
    assert rep.scalar_scale > 0 and len(rep.component_scales) == 3
