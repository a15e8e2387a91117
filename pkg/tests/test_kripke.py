from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import formulas
from oracles import canonical, naive_eval, preorder_classes
from potentialist.kripke import (KripkeModel, PreTree, canonical_encoding, enumerate_preorders,
                                 enumerate_pretrees, frame_class_of, generated_submodel,
                                 model_from_masks, pretree_from_shape, pretree_of, to_dot,
                                 uniformize_pretree)
from potentialist.syntax import enumerate_formulas, parse


def cluster(n: int, valuation=None) -> KripkeModel:
    return KripkeModel(n, [(i, j) for i in range(n) for j in range(n)], valuation or {})


def figure_tree_model() -> KripkeModel:
    """Seven 3-world clusters in a binary tree of depth 3, built edge by edge."""
    parent = {1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2}

    def below(c):
        out = {c}
        for d, p in parent.items():
            if p == c:
                out |= below(d)
        return out

    edges = []
    for c in range(7):
        for d in below(c):
            edges += [(3 * c + i, 3 * d + j) for i in range(3) for j in range(3)]
    return KripkeModel(21, edges)


# ---------------------------------------------------------------- eval

def test_single_reflexive_world():
    m = KripkeModel(1, [(0, 0)], {"p": [0]})
    assert m.eval(0, parse("[]p"))


def test_two_world_cluster_sees_both_values():
    m = cluster(2, {"p": [0]})
    assert all(m.eval(w, parse("<>p & <>~p")) for w in range(2))


def test_five_world_cluster_box_fails_everywhere():
    m = cluster(5, {"p": [2]})
    assert not any(m.eval(w, parse("<>[]p")) for w in range(5))


@given(formulas(), st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n),
                        st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1))))
def test_eval_matches_naive_and_generated_submodel(f, data):
    masks, pm, qm = data
    n = len(masks)
    val = {"p": [w for w in range(n) if pm >> w & 1], "q": [w for w in range(n) if qm >> w & 1]}
    m = model_from_masks(masks, val)
    succ = [[u for u in range(n) if masks[w] >> u & 1] for w in range(n)]
    for w in range(n):
        truth = m.eval(w, f)
        assert truth == naive_eval(succ, {k: set(v) for k, v in val.items()}, w, f)
        sub, idx = generated_submodel(m, w)
        assert sub.eval(idx[w], f) == truth


def test_json_round_trip():
    m = KripkeModel(3, [(0, 1), (1, 2)], {"p": [1]})
    again = KripkeModel.from_json(json.loads(m.dumps()))
    assert again == m and hash(again) == hash(m)


def test_potentialist_flag_checks_preorder():
    with pytest.raises(ValueError):
        KripkeModel(2, [(0, 1)], potentialist=True)
    KripkeModel(2, [(0, 0), (1, 1), (0, 1)], potentialist=True)


def test_edges_must_stay_in_range():
    with pytest.raises(ValueError):
        KripkeModel(2, [(0, 2)])


# ---------------------------------------------------------------- frame classes

def test_complete_relation_has_every_property():
    fc = frame_class_of(cluster(3))
    assert set(fc) == {"reflexive", "transitive", "directed", "linear_preorder",
                       "equivalence", "pretree"}
    assert len(fc.pretree.clusters) == 1


def test_antichain_is_not_directed():
    fc = frame_class_of(KripkeModel(2, [(0, 0), (1, 1)]))
    assert "directed" not in fc and "pretree" not in fc


def test_figure_tree_is_a_pretree_with_seven_clusters():
    fc = frame_class_of(figure_tree_model())
    assert "pretree" in fc
    assert len(fc.pretree.clusters) == 7
    assert fc.pretree.uniform_shape() == (3, 2)
    assert fc.pretree.depth() == 3


def test_diamond_is_not_a_pretree():
    # 0 below 1 and 2, both below 3: directed but cluster 3 has two parents
    m = model_from_masks([0b1111, 0b1010, 0b1100, 0b1000])
    assert pretree_of(m) is None
    assert "directed" in frame_class_of(m)


@given(st.integers(0, 40))
def test_pretree_models_are_pretrees(i):
    trees = list(enumerate_pretrees(3, 2, 2, max_worlds=6))
    t = trees[i % len(trees)]
    fc = frame_class_of(t.to_model())
    assert {"reflexive", "transitive", "pretree"} <= fc.properties
    assert fc.pretree.shape_key() == t.shape_key()


# ---------------------------------------------------------------- uniformize

def test_uniformize_single_world_cluster():
    t = PreTree.from_parts([(0,)], [None], {"p": [0]})
    u, old_to_new, new_to_old = uniformize_pretree(t, 2, 1)
    assert u.clusters == ((0, 1),)
    assert u.valuation["p"] == frozenset({0, 1})
    assert new_to_old == (0, 0)


def test_uniformize_figure_tree_is_unchanged():
    t = pretree_of(figure_tree_model())
    u, _, new_to_old = uniformize_pretree(t, 3, 2)
    assert u.clusters == t.clusters and u.parent == t.parent
    assert new_to_old == tuple(range(21))


def _truth_agrees(t, u, new_to_old, fs):
    m, mu = t.to_model(), u.to_model()
    for f in fs:
        for w in range(u.n):
            assert mu.eval(w, f) == m.eval(new_to_old[w], f), (f, w)


def test_uniformize_chain_duplicates_leaf():
    t = PreTree.from_parts([(0,), (1,)], [None, 0], {"p": [1]})
    u, _, new_to_old = uniformize_pretree(t, 2, 2)
    assert len(u.clusters) == 3 and u.children(0) == [1, 2]
    _truth_agrees(t, u, new_to_old, list(enumerate_formulas(["p"], 7)))


@given(st.integers(0, 200), st.integers(0, 1 << 12), formulas(max_leaves=5))
def test_uniformize_is_a_bisimulation(i, valbits, f):
    trees = list(enumerate_pretrees(3, 2, 2, max_worlds=6))
    t = trees[i % len(trees)]
    val = {"p": [w for w in range(t.n) if valbits >> w & 1],
           "q": [w for w in range(t.n) if valbits >> (w + 6) & 1]}
    t = t.with_valuation(val)
    u, _, new_to_old = uniformize_pretree(t, max(t.max_cluster(), 2), max(t.max_branch(), 2))
    assert u.uniform_shape() is not None
    _truth_agrees(t, u, new_to_old, [f])


def test_uniformize_rejects_shrinking():
    t = pretree_from_shape((2, ()))
    with pytest.raises(ValueError):
        uniformize_pretree(t, 1, 1)


# ---------------------------------------------------------------- enumeration

def test_enumerate_pretrees_smallest():
    trees = list(enumerate_pretrees(1, 1, 1))
    assert len(trees) == 1 and trees[0].n == 1


def test_enumerate_pretrees_contains_binary_tree():
    keys = {t.shape_key() for t in enumerate_pretrees(2, 2, 1)}
    assert (1, ((1, ()), (1, ()))) in keys
    assert len(keys) == 3


def _brute_force_pretree_classes(max_depth, max_branch, max_cluster) -> set:
    """Labelled cluster trees (parent[i] < i), canonicalized as world relations."""
    found = set()
    max_clusters = sum(max_branch ** d for d in range(max_depth))
    for c in range(1, max_clusters + 1):
        for parent in itertools.product(*[range(i) for i in range(1, c)]):
            parent = (None,) + parent
            kids = [sum(1 for p in parent if p == i) for i in range(c)]
            level = [0] * c
            for i in range(1, c):
                level[i] = level[parent[i]] + 1
            if max(kids) > max_branch or max(level) >= max_depth:
                continue
            for sizes in itertools.product(range(1, max_cluster + 1), repeat=c):
                start = np.cumsum((0,) + sizes)
                n = int(start[-1])
                r = np.zeros((n, n), dtype=bool)
                for a in range(c):
                    for b in range(c):
                        x = b
                        while x is not None and x != a:
                            x = parent[x]
                        if x == a:
                            r[start[a]:start[a + 1], start[b]:start[b + 1]] = True
                found.add(canonical(r))
    return found


def test_enumerate_pretrees_matches_brute_force():
    ours = {canonical(np.array([[bool(m >> u & 1) for u in range(len(ms))] for m in ms]))
            for ms in (t.to_model().succ_masks() for t in enumerate_pretrees(2, 2, 2))}
    brute = _brute_force_pretree_classes(2, 2, 2)
    assert ours == brute
    assert len(ours) == 12


def test_preorder_class_counts():
    assert [len(enumerate_preorders(n)) for n in range(1, 6)] == [1, 3, 9, 33, 139]


def test_preorder_classes_match_oracle():
    oracle = {}
    for r in preorder_classes(4):
        oracle.setdefault(r.shape[0], set()).add(canonical(r))
    for n in range(1, 5):
        ours = {canonical(np.array([[bool(m >> u & 1) for u in range(n)] for m in ms]))
                for ms in enumerate_preorders(n)}
        assert ours == oracle[n]


def test_canonical_encoding_is_invariant():
    a = canonical_encoding([0b011, 0b010, 0b100])
    b = canonical_encoding([0b001, 0b110, 0b100])
    assert a == b


# ---------------------------------------------------------------- DOT

def test_dot_draws_clusters():
    t = pretree_from_shape((2, ((1, ()),)), {"p": [2]})
    dot = to_dot(t.to_model(), "t", highlight=0)
    assert dot.startswith("digraph t {")
    assert dot.count("subgraph cluster_") == 2
    assert 'w2 [label="2: p"]' in dot
    assert "color=red" in dot
