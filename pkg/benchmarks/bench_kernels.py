"""Compare the compiled and pure-Python kernels on the decider's hot loops.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Each
workload is timed on every available backend, and the results are checked
to agree before any timing is reported.
"""

from __future__ import annotations

import argparse
import time
from array import array

from potentialist import kernels
from potentialist.kripke import enumerate_preorders
from potentialist.syntax import AXIOMS, enumerate_formulas, parse


def _preorder_frames(max_n: int) -> list:
    return [list(masks) for n in range(1, max_n + 1) for masks in enumerate_preorders(n)]


def _formulas(count: int) -> list:
    out = [parse(t) for t in AXIOMS.values()]
    for f in enumerate_formulas(["p", "q"], 7):
        if f.op in ("imp", "iff"):
            out.append(f)
        if len(out) >= count:
            break
    return out


def _call_countermodel(mod, prog, frames, flat, sizes, targets):
    if mod is kernels._pykernels:
        return mod.find_countermodel(prog.ops, prog.a, prog.b, prog.nvars, frames,
                                     [(1 << len(s)) - 1 for s in frames])
    return mod.find_countermodel(prog.ops_arr, prog.a_arr, prog.b_arr, prog.nvars,
                                 flat, sizes, targets)


def _call_eval(mod, prog, var_masks, succ):
    if mod is kernels._pykernels:
        return mod.eval_slots(prog.ops, prog.a, prog.b, var_masks, succ, len(succ))
    return mod.eval_slots(prog.ops_arr, prog.a_arr, prog.b_arr,
                          array("Q", var_masks), array("Q", succ), len(succ))


def bench_countermodel(backends: dict, repeat: int) -> dict:
    frames = _preorder_frames(4)
    flat = array("Q", [m for s in frames for m in s])
    sizes = array("i", [len(s) for s in frames])
    targets = array("Q", [(1 << len(s)) - 1 for s in frames])
    progs = [kernels.compile_formula(f, ("p", "q")) for f in _formulas(300)]
    results, times = {}, {}
    for name, mod in backends.items():
        start = time.perf_counter()
        for _ in range(repeat):
            results[name] = [_call_countermodel(mod, p, frames, flat, sizes, targets) for p in progs]
        times[name] = (time.perf_counter() - start) / repeat
    _check_agreement(results)
    return times


def bench_eval(backends: dict, repeat: int) -> dict:
    n = 48
    succ = [((1 << n) - 1) & ~((1 << w) - 1) for w in range(n)]     # a 48-world chain
    var_masks = [0x5555_5555_5555 & ((1 << n) - 1), 0x0F0F_0F0F_0F0F & ((1 << n) - 1)]
    progs = [kernels.compile_formula(f, ("p", "q")) for f in _formulas(2000)]
    results, times = {}, {}
    for name, mod in backends.items():
        start = time.perf_counter()
        for _ in range(repeat):
            results[name] = [list(_call_eval(mod, p, var_masks, succ)) for p in progs]
        times[name] = (time.perf_counter() - start) / repeat
    _check_agreement(results)
    return times


def _check_agreement(results: dict):
    values = list(results.values())
    if any(v != values[0] for v in values[1:]):
        raise AssertionError("backends disagree")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels are not built; only the Python fallback is available")
    print(f"{'workload':<34}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in [("countermodel scan, 300 formulas", bench_countermodel),
                      ("slot evaluation, 48-world chain", bench_eval)]:
        times = fn(backends, args.repeat)
        row = f"{label:<34}" + "".join(f"{times[name]:>11.4f}s" for name in backends)
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
