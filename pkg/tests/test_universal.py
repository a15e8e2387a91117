from __future__ import annotations

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_script
from potentialist.universal import (SINGLE, Certificate, ExtensionExhausted, NeverOracle,
                                    ScriptedOracle, StageRecord, TargetStatement, UAState,
                                    check_trace, decode_sequence, derive_concatenated,
                                    encode_sequence, oracle_from_json, run_one_at_a_time,
                                    run_universal, script_extension,
                                    script_extension_one_at_a_time)


def _grants(state):
    return [(s.stage, s.k, s.batch) for s in state.stages]


# ---------------------------------------------------------------- runs

@pytest.mark.parametrize("budget", [0, 1, 50, 1000])
def test_never_oracle_enumerates_nothing(budget):
    oracle = NeverOracle()
    state = run_universal(oracle, step_budget=budget)
    assert state.enumerated == [] and state.stages == []
    assert state.steps == budget and state.halted_at_budget
    assert run_one_at_a_time(oracle, step_budget=budget).enumerated == []


def test_single_grant():
    oracle = ScriptedOracle.from_grants([(0, 5, [7, 7])])
    state = run_universal(oracle)
    assert state.enumerated == [7, 7]
    assert _grants(state) == [(0, 5, (7, 7))]
    assert state.stream_exhausted and check_trace(state, oracle) == []


def test_repeated_fragment_index_is_rejected():
    oracle = ScriptedOracle.from_grants([(0, 5, [7, 7]), (1, 5, [3])])
    state = run_universal(oracle)
    assert state.enumerated == [7, 7]


def test_one_at_a_time_runs():
    oracle = ScriptedOracle.from_grants([(0, 9, 4), (1, 3, 2)], kind=SINGLE)
    assert run_one_at_a_time(oracle).enumerated == [4, 2]
    oracle = ScriptedOracle.from_grants([(0, 9, 4), (1, 9, 2)], kind=SINGLE)
    assert run_one_at_a_time(oracle).enumerated == [4]


def test_batch_grants_do_not_serve_single_runs():
    oracle = ScriptedOracle.from_grants([(0, 5, [7])])
    assert run_one_at_a_time(oracle).enumerated == []


def test_other_programs_are_ignored():
    oracle = ScriptedOracle.from_grants([(0, 5, [1])], program=3)
    assert run_universal(oracle, program=0).enumerated == []
    assert run_universal(oracle, program=3).enumerated == [1]


def test_checker_failure_is_recorded():
    class Broken(ScriptedOracle):
        def check(self, cert):
            raise RuntimeError("checker crashed")

    state = run_universal(Broken([Certificate(TargetStatement(0, 0, (1,)), 2)]))
    assert not state.valid and "checker crashed" in state.error


@given(st.integers(0, 2**32), st.integers(1, 32))
def test_trace_laws_on_random_scripts(seed, budget):
    rng = random.Random(seed)
    oracle = ScriptedOracle.from_grants(random_script(rng, budget), fragment_count=budget)
    state = run_universal(oracle)
    assert check_trace(state, oracle) == []
    assert len(state.stages) <= budget
    assert run_universal(oracle).to_json() == state.to_json()


def test_check_trace_flags_tampering():
    oracle = ScriptedOracle.from_grants([(0, 5, [7]), (1, 2, [8])])
    state = run_universal(oracle)
    assert check_trace(state, oracle) == []
    state.enumerated.append(9)
    assert any("concatenation" in p for p in check_trace(state, oracle))
    forged = Certificate(TargetStatement(0, 2, (1,)), 1)
    state.stages.append(StageRecord(2, 1, (1,), forged))
    assert any("replay" in p for p in check_trace(state, oracle))


# ---------------------------------------------------------------- coding

def test_derive_concatenated_examples():
    assert derive_concatenated(UAState(0, SINGLE, [])) == []
    assert derive_concatenated(UAState(0, SINGLE, [9]), lambda a: [3, 1]) == [3, 1]
    a, b = encode_sequence([3]), encode_sequence([])
    assert derive_concatenated(UAState(0, SINGLE, [a, b])) == [3]


@given(st.lists(st.integers(0, 12), max_size=8))
def test_sequence_coding_round_trip(seq):
    assert decode_sequence(encode_sequence(seq)) == seq


def test_sequence_coding_is_onto_small_numbers():
    assert [encode_sequence(decode_sequence(c)) for c in range(200)] == list(range(200))


# ---------------------------------------------------------------- extension

def test_extend_from_empty():
    state = run_universal(ScriptedOracle([], 10))
    new = script_extension(state, [1, 2, 3], [], 10)
    assert len(new) == 1 and new[0].k == 10
    assert run_universal(ScriptedOracle(new, 10)).enumerated == [1, 2, 3]


def test_extend_to_same_target_is_empty():
    oracle = ScriptedOracle.from_grants([(0, 5, [7])])
    state = run_universal(oracle)
    assert script_extension(state, [7], oracle.script, 5) == []


def test_extension_exhausted_after_fragment_one():
    oracle = ScriptedOracle.from_grants([(0, 1, [7])])
    state = run_universal(oracle)
    with pytest.raises(ExtensionExhausted):
        script_extension(state, [7, 8], oracle.script, 5)


def test_extension_must_extend():
    oracle = ScriptedOracle.from_grants([(0, 5, [7])])
    state = run_universal(oracle)
    with pytest.raises(ValueError):
        script_extension(state, [8], oracle.script, 5)


@given(st.integers(0, 2**32))
def test_extension_reproduces_random_targets(seed):
    rng = random.Random(seed)
    budget = 32
    script = ScriptedOracle.from_grants(random_script(rng, budget), fragment_count=budget).script
    state = run_universal(ScriptedOracle(script, budget))
    target = state.enumerated + [rng.randint(0, 7) for _ in range(rng.randint(0, 6))]
    try:
        new = script_extension(state, target, script, budget)
    except ExtensionExhausted:
        assert state.stages[-1].k == 1
        return
    again = run_universal(ScriptedOracle(script + new, budget))
    assert again.enumerated == target


@given(st.lists(st.integers(0, 7), max_size=6), st.lists(st.integers(0, 7), max_size=4))
def test_one_at_a_time_extension(prefix, more):
    state = run_one_at_a_time(ScriptedOracle([], 32))
    new = script_extension_one_at_a_time(state, prefix, [], 32)
    state = run_one_at_a_time(ScriptedOracle(new, 32))
    assert derive_concatenated(state) == prefix
    new2 = script_extension_one_at_a_time(state, prefix + more, new, 32)
    state = run_one_at_a_time(ScriptedOracle(new + new2, 32))
    assert derive_concatenated(state) == prefix + more


# ---------------------------------------------------------------- JSON

def test_oracle_json_forms():
    assert isinstance(oracle_from_json({"kind": "never"}), NeverOracle)
    o = oracle_from_json([{"stage": 0, "k": 4, "batch": [1, 2]}])
    assert run_universal(o).enumerated == [1, 2]
    o = oracle_from_json({"kind": "scripted", "fragments": 9,
                          "script": [{"stage": 0, "k": 4, "number": 6}]})
    assert o.fragment_count == 9
    assert run_one_at_a_time(o).enumerated == [6]


def test_state_json_is_serializable():
    state = run_universal(ScriptedOracle.from_grants([(0, 5, [7, 7])]))
    again = json.loads(json.dumps(state.to_json()))
    assert again["enumerated"] == [7, 7]
    assert Certificate.from_json(again["stages"][0]["certificate"]) == state.stages[0].certificate
