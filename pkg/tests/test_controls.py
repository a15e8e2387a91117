from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import formulas
from potentialist import controls, sequences, syntax
from potentialist.controls import (FiniteSystem, are_independent_buttons,
                                   are_independent_switches, dial_to_switches, family_from_json,
                                   family_to_json, is_button, is_dial, is_railway_switch,
                                   is_railyard_labeling, is_switch, railyard_reach_witness,
                                   switches_to_dial, verify_family)
from potentialist.kripke import KripkeModel, PreTree, model_from_masks, pretree_from_shape
from potentialist.sequences import SeqStatement, SequenceSystem, SequenceWorld
from potentialist.syntax import parse

S = SeqStatement


def cluster(n, valuation=None):
    return FiniteSystem(KripkeModel(n, [(i, j) for i in range(n) for j in range(n)],
                                    valuation or {}))


def four_cluster():
    return cluster(4, {"p": [1, 3], "q": [2, 3]})


def random_systems():
    """Reflexive-transitive frames of at most 8 worlds with valuations of p, q."""
    def build(data):
        n, masks, pm, qm = data
        reach = list(masks)
        for w in range(n):
            reach[w] |= 1 << w
        changed = True
        while changed:
            changed = False
            for w in range(n):
                acc = reach[w]
                for u in range(n):
                    if acc >> u & 1:
                        acc |= reach[u]
                if acc != reach[w]:
                    reach[w], changed = acc, True
        val = {"p": [w for w in range(n) if pm >> w & 1], "q": [w for w in range(n) if qm >> w & 1]}
        return FiniteSystem(model_from_masks(reach, val))

    return st.integers(1, 8).flatmap(lambda n: st.tuples(
        st.just(n), st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n),
        st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1))).map(build)


# ---------------------------------------------------------------- switches

def test_switch_examples():
    assert is_switch(cluster(2, {"p": [0]}), parse("p")).passed
    rep = is_switch(cluster(2, {"p": [0]}), syntax.TRUE)
    assert not rep.passed and rep.witness == 0
    system = SequenceSystem.for_switches(1)
    assert is_switch(system, S.sigma(0)).passed


def test_independent_switch_examples():
    assert are_independent_switches(SequenceSystem.for_switches(2), [S.sigma(0), S.sigma(1)]).passed
    rep = are_independent_switches(four_cluster(), [parse("p"), parse("p")])
    assert not rep.passed
    assert are_independent_switches(four_cluster(), [parse("p"), parse("q")]).passed


# ---------------------------------------------------------------- dials

def test_dial_examples():
    assert is_dial(four_cluster(), [syntax.TRUE]).passed
    assert is_dial(cluster(2, {"p": [0]}), [parse("p"), parse("~p")]).passed
    rep = is_dial(four_cluster(), [parse("p"), parse("q")])
    assert not rep.passed
    assert rep.witness[0] in (0, 3)


def test_switches_to_dial_shapes():
    s = parse("p")
    assert switches_to_dial([s]) == [parse("~p"), parse("p")]
    dial = switches_to_dial([parse("p"), parse("q")])
    assert len(dial) == 4
    assert dial[2] == parse("~p & q")


def test_dial_to_switches_round_trip_on_cluster():
    system = four_cluster()
    family = [parse("p"), parse("q")]
    back = dial_to_switches(switches_to_dial(family))
    for w in system.worlds():
        assert [system.holds(w, s) for s in back] == [system.holds(w, s) for s in family]


def test_dial_to_switches_needs_power_of_two():
    with pytest.raises(ValueError):
        dial_to_switches([parse("p"), parse("q"), parse("r")])


@given(random_systems())
def test_conversions_preserve_control_status(system):
    family = [parse("p"), parse("q")]
    if are_independent_switches(system, family).passed:
        assert is_dial(system, switches_to_dial(family)).passed
    dial = [parse("p & q"), parse("p & ~q"), parse("~p & q"), parse("~p & ~q")]
    if is_dial(system, dial).passed:
        assert are_independent_switches(system, dial_to_switches(dial)).passed


@given(random_systems())
def test_round_trip_is_world_equivalent(system):
    family = [parse("p"), parse("q")]
    back = dial_to_switches(switches_to_dial(family))
    for w in system.worlds():
        assert [system.holds(w, s) for s in back] == [system.holds(w, s) for s in family]


# ---------------------------------------------------------------- failing witnesses

@given(random_systems(), formulas(max_leaves=4))
def test_failing_reports_carry_real_witnesses(system, s):
    rep = is_switch(system, s)
    if not rep.passed:
        w = rep.witness
        assert not system.possible(w, s) or not system.possible(w, syntax.neg(s))
    rep = is_button(system, s)
    if not rep.passed:
        assert not system.possible(rep.witness, syntax.box(s))
    rep = is_railway_switch(system, s)
    if not rep.passed:
        w = rep.witness
        settled = system.holds(w, syntax.box(s)) or system.holds(w, syntax.box(syntax.neg(s)))
        both = (system.possible(w, syntax.box(s))
                and system.possible(w, syntax.box(syntax.neg(s))))
        assert not settled and not both


# ---------------------------------------------------------------- buttons, railway switches

def test_rho_is_an_unpushed_button():
    system = SequenceSystem((), range(6), 2)
    rep = is_button(system, S.rho(5))
    assert rep.passed
    assert SequenceWorld() not in rep.details["pushed"]
    assert SequenceWorld([5]) in rep.details["pushed"]


def test_top_is_pushed_everywhere():
    system = four_cluster()
    rep = is_button(system, syntax.TRUE)
    assert rep.passed and rep.details["pushed"] == system.worlds()


def test_first_even_is_a_railway_switch():
    system = SequenceSystem((), range(4), 2)
    rep = is_railway_switch(system, S.first(2, 0))
    assert rep.passed
    assert rep.details["undetermined"] == [SequenceWorld()]


def test_buttons_in_a_cluster_fail_independence():
    system = four_cluster()
    assert not is_button(system, parse("p")).passed
    assert are_independent_buttons(system, []).passed


# ---------------------------------------------------------------- railyards

def test_one_node_railyard():
    t = pretree_from_shape((1, ()))
    system = four_cluster()
    assert is_railyard_labeling(system, t, {0: syntax.TRUE}, 0).passed


def test_two_chain_railyard_with_button():
    model = KripkeModel(2, [(0, 0), (0, 1), (1, 1)], {"b": [1]})
    system = FiniteSystem(model)
    t = PreTree.from_parts([(0,), (1,)], [None, 0])
    rep = is_railyard_labeling(system, t, {0: parse("~b"), 1: parse("b")}, 0)
    assert rep.passed
    assert railyard_reach_witness(system, t, {0: parse("~b"), 1: parse("b")}, 0, 1) == 1


def test_railyard_rejects_wrong_order():
    model = KripkeModel(2, [(0, 0), (0, 1), (1, 1)], {"b": [1]})
    t = PreTree.from_parts([(0,), (1,)], [None, 0])
    rep = is_railyard_labeling(FiniteSystem(model), t, {0: parse("b"), 1: parse("~b")}, 1)
    assert not rep.passed


def test_figure_tree_railyard_with_reachability():
    shape = (3, ((3, ((3, ()), (3, ()))), (3, ((3, ()), (3, ())))))
    t = pretree_from_shape(shape)
    enc = sequences.RailyardEncoding(t)
    system = SequenceSystem.for_railyard(enc)
    labeling = enc.labeling()
    base = SequenceWorld()
    assert is_railyard_labeling(system, t, labeling, base).passed
    for node in range(t.n):
        w = railyard_reach_witness(system, t, labeling, base, node)
        assert w is not None and enc.decode(w) == node


# ---------------------------------------------------------------- JSON families

def test_family_json_round_trip_and_dispatch():
    obj = family_to_json("independent_switches", [S.sigma(0), S.sigma(1)])
    kind, stmts = family_from_json(obj)
    assert stmts == [S.sigma(0), S.sigma(1)]
    assert verify_family(SequenceSystem.for_switches(2), kind, stmts).passed
    kind, stmts = family_from_json({"kind": "dial", "statements": ["p", "~p"]})
    assert verify_family(cluster(2, {"p": [0]}), kind, stmts).passed
    with pytest.raises(ValueError):
        verify_family(four_cluster(), "lever", stmts)


def test_report_json():
    rep = is_switch(cluster(2, {"p": [0]}), syntax.TRUE)
    out = rep.to_json()
    assert out == {"kind": "switch", "verdict": "fail", "reason": rep.reason, "witness": 0}


def test_verify_family_reports_the_failing_member():
    system = SequenceSystem((), range(4), 2)
    rep = verify_family(system, "switch", [S.sigma(0), S.rho(0)])
    assert not rep.passed and rep.witness == SequenceWorld([0])
    assert not verify_family(system, "button", [S.sigma(0)]).passed
