from __future__ import annotations

import os
import subprocess
import sys
from array import array

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import formulas
from oracles import naive_eval
from potentialist import kernels
from potentialist.kernels import FrameBatch, compile_formula, decode_valuation
from potentialist.syntax import parse

BACKENDS = sorted(kernels.available_backends())


def _call_eval(mod, prog, var_masks, succ):
    if mod is kernels._pykernels:
        return list(mod.eval_slots(prog.ops, prog.a, prog.b, var_masks, succ, len(succ)))
    return list(mod.eval_slots(prog.ops_arr, prog.a_arr, prog.b_arr,
                               array("Q", var_masks), array("Q", succ), len(succ)))


def _call_refute(mod, prog, succ, target):
    if mod is kernels._pykernels:
        return mod.find_refuting_valuation(prog.ops, prog.a, prog.b, prog.nvars,
                                           succ, len(succ), target)
    return mod.find_refuting_valuation(prog.ops_arr, prog.a_arr, prog.b_arr, prog.nvars,
                                       array("Q", succ), len(succ), target)


def _call_countermodel(mod, prog, batch):
    if mod is kernels._pykernels:
        return tuple(mod.find_countermodel(prog.ops, prog.a, prog.b, prog.nvars,
                                           batch.frames, batch.targets))
    return tuple(mod.find_countermodel(prog.ops_arr, prog.a_arr, prog.b_arr, prog.nvars,
                                       batch.flat, batch.sizes, batch.targets_arr))


succ_lists = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n))


def test_backend_is_named():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
@given(f=formulas(), succ=succ_lists, data=st.data())
def test_eval_matches_naive_semantics(backend, f, succ, data):
    mod = kernels.available_backends()[backend]
    n = len(succ)
    prog = compile_formula(f, ("p", "q"))
    masks = [data.draw(st.integers(0, (1 << n) - 1)) for _ in range(2)]
    slots = _call_eval(mod, prog, masks, succ)
    succ_sets = [[u for u in range(n) if succ[w] >> u & 1] for w in range(n)]
    val = {v: {w for w in range(n) if masks[i] >> w & 1} for i, v in enumerate(("p", "q"))}
    for g, mask in zip(prog.slots, slots):
        for w in range(n):
            assert bool(mask >> w & 1) == naive_eval(succ_sets, val, w, g)


@pytest.mark.parametrize("backend", BACKENDS)
@given(f=formulas(max_leaves=6), succ=st.integers(1, 3).flatmap(
    lambda n: st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n)))
def test_least_refuting_valuation(backend, f, succ):
    mod = kernels.available_backends()[backend]
    n = len(succ)
    prog = compile_formula(f, ("p", "q"))
    succ_sets = [[u for u in range(n) if succ[w] >> u & 1] for w in range(n)]
    expected = -1
    for code in range(1 << (2 * n)):
        masks = decode_valuation(code, 2, n)
        val = {v: {w for w in range(n) if masks[i] >> w & 1} for i, v in enumerate(("p", "q"))}
        if not all(naive_eval(succ_sets, val, w, f) for w in range(n)):
            expected = code
            break
    assert _call_refute(mod, prog, succ, (1 << n) - 1) == expected


@pytest.mark.parametrize("backend", BACKENDS)
def test_countermodel_scan_picks_first_frame(backend):
    mod = kernels.available_backends()[backend]
    frames = [[0b1], [0b11, 0b11], [0b11, 0b10]]
    prog = compile_formula(parse("<>[]p -> p"))
    # refuted on the 2-chain (frame 2) only, with p true at world 1
    assert _call_countermodel(mod, prog, FrameBatch(frames)) == (2, 0b10)
    prog = compile_formula(parse("[]p -> p"))
    assert _call_countermodel(mod, prog, FrameBatch(frames)) == (-1, -1)


def test_backends_agree_on_batch():
    frames = [[0b1], [0b11, 0b10], [0b011, 0b010, 0b110][:2] + [0b100], [0b111, 0b111, 0b111]]
    batch = FrameBatch(frames)
    for text in ["<>[]p -> []<>p", "[]p -> [][]p", "<>p -> []p", "(<>p & <>q) -> <>(p & q)"]:
        prog = compile_formula(parse(text))
        results = {name: _call_countermodel(mod, prog, batch)
                   for name, mod in kernels.available_backends().items()}
        assert len(set(results.values())) == 1, results


def test_dispatch_falls_back_beyond_64_worlds():
    n = 70
    succ = [((1 << n) - 1) & ~((1 << w) - 1) for w in range(n)]
    prog = compile_formula(parse("<>p"))
    got = kernels.truth_set(prog, [1 << (n - 1)], succ)
    assert got == (1 << n) - 1


def test_pure_python_switch():
    code = "from potentialist import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, POTENTIALIST_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_compile_rejects_missing_names():
    with pytest.raises(KeyError):
        compile_formula(parse("p & q"), ("p",))
