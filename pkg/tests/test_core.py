import math

import pytest
from hypothesis import given, strategies as st

from rewardlens.core import (HyperParams, Observation, StructureError, Trace, TraceStep,
                             derive_seeds, dumps_trace, greedy_action, load_traces, loads_traces,
                             make_components, q_sum, reward_vector, seed_streams, sum_components,
                             write_trace)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_sum_components_examples():
    assert sum_components((0, 0, 0)) == 0
    assert sum_components((1, 2)) == 3
    assert sum_components((3, 1, 8)) == 12


def test_q_sum_examples():
    assert q_sum({0: (1, 2), 1: (0, 1)}) == {0: 3, 1: 1}
    assert q_sum({0: (0, 0, 0)}) == {0: 0}
    # a0 and a1 tie at 1; (1, 1) sums to 2
    assert q_sum({0: (2, -1), 1: (-1, 2), 2: (1, 1)}) == {0: 1, 1: 1, 2: 2}
    assert q_sum({0: (2, -1), 1: (-1, 2)}) == {0: 1, 1: 1}


def test_q_sum_rejects_mismatched_lengths():
    with pytest.raises(StructureError):
        q_sum({0: (1, 2), 1: (1,)})


def test_greedy_action_examples():
    assert greedy_action({0: (1, 0), 1: (0, 3)}) == 1
    assert greedy_action({0: (1, 1), 1: (2, 0)}) == 0
    assert greedy_action({0: (0,)}) == 0
    with pytest.raises(ValueError):
        greedy_action({})


@given(st.dictionaries(st.integers(0, 8), st.tuples(finite, finite, finite), min_size=1))
def test_greedy_is_lowest_index_of_argmax(q):
    sums = {a: math.fsum(v) for a, v in q.items()}
    best = max(sums.values())
    assert greedy_action(q) == min(a for a, v in sums.items() if v == best)


@given(st.lists(st.tuples(finite, finite, finite, finite), min_size=1, max_size=5),
       st.permutations(range(4)))
def test_q_sum_permutation_invariant(rows, perm):
    q = dict(enumerate(rows))
    permuted = {a: tuple(v[i] for i in perm) for a, v in q.items()}
    assert q_sum(q) == q_sum(permuted)


def test_component_names_unique():
    assert [c.index for c in make_components(["CL", "SU", "RML"])] == [0, 1, 2]
    with pytest.raises(StructureError):
        make_components(["NP", "NP"])


def test_reward_vector_must_be_finite():
    assert reward_vector([1, 2]) == (1.0, 2.0)
    with pytest.raises(StructureError):
        reward_vector([1, math.inf])


def _step(i, terminal=False, chosen=1):
    return TraceStep(i, Observation(f"o{i}", (float(i), 0.5)), (0, 1),
                     {0: (0.25, -1.0), 1: (1.5, 0.1)}, chosen, (1.0, 0.5), terminal)


def test_trace_step_invariants():
    with pytest.raises(StructureError):
        TraceStep(0, Observation("o", ()), (0, 1), {0: (0.0,), 1: (0.0,)}, 2, (0.0,), False)
    with pytest.raises(StructureError):
        TraceStep(0, Observation("o", ()), (0, 1), {0: (0.0,)}, 0, (0.0,), False)


def test_trace_terminal_only_last():
    with pytest.raises(StructureError):
        Trace(0, "a", (_step(0, terminal=True), _step(1, terminal=True)), 0.0)


def test_trace_total_reward():
    t = Trace.from_steps(3, "a", [_step(0), _step(1, terminal=True)], ("x", "y"))
    assert t.total_reward == pytest.approx(3.0, abs=1e-9)


def test_trace_round_trip(tmp_path):
    t = Trace.from_steps(4, "agent", [_step(0), _step(1), _step(2, terminal=True)], ("x", "y"))
    assert loads_traces(dumps_trace(t)) == [t]
    path = write_trace(t, tmp_path)
    assert path == tmp_path / "agent" / "4.jsonl"
    assert load_traces(tmp_path / "agent") == [t]


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=6))
def test_trace_round_trip_property(values):
    steps = [TraceStep(i, Observation(f"o{i}", (x, y)), (0, 2), {0: (x, y), 2: (y, x)},
                       2, (x, y), i == len(values) - 1) for i, (x, y) in enumerate(values)]
    t = Trace.from_steps(0, "p", steps, ("a", "b"))
    assert loads_traces(dumps_trace(t)) == [t]


def test_malformed_trace_reports_line():
    with pytest.raises(StructureError, match="<string>:1"):
        loads_traces('{"type": "step"}\n')


def test_hyperparams_validation():
    HyperParams()
    for bad in (dict(gamma=1.0), dict(alpha=0.0), dict(epsilon_start=0.1, epsilon_end=0.2),
                dict(tau=0), dict(episodes=-1)):
        with pytest.raises(ValueError):
            HyperParams(**bad)


def test_seed_streams_are_reproducible_and_distinct():
    a = [g.random() for g in seed_streams(5)]
    b = [g.random() for g in seed_streams(5)]
    assert a == b
    assert len(set(a)) == 3
    assert derive_seeds(5, 4) == derive_seeds(5, 4)
    assert len(set(derive_seeds(5, 10))) == 10
