"""Kernel selection and formula compilation.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure-Python twin ``_pykernels`` serves every call.  Setting the environment
variable ``POTENTIALIST_PURE_PYTHON=1`` forces the fallback.  ``BACKEND``
names the active implementation.
"""

from __future__ import annotations

import os
from array import array
from typing import Sequence

from . import _pykernels
from .syntax import (AND, BOT, BOX, DIA, IFF, IMP, NOT, OR, TOP, VAR, Formula,
                     subformulas, variables)

_compiled = None
if os.environ.get("POTENTIALIST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

_OPCODE = {
    VAR: _pykernels.OP_VAR, NOT: _pykernels.OP_NOT, AND: _pykernels.OP_AND,
    OR: _pykernels.OP_OR, IMP: _pykernels.OP_IMP, IFF: _pykernels.OP_IFF,
    DIA: _pykernels.OP_DIA, BOX: _pykernels.OP_BOX, TOP: _pykernels.OP_TOP,
    BOT: _pykernels.OP_BOT,
}


def available_backends() -> dict:
    """Map of backend name to kernel module, for cross-checking and benchmarks."""
    out = {"python": _pykernels}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


class Program:
    """A formula flattened into slot instructions, one slot per subformula."""

    __slots__ = ("formula", "names", "slots", "index", "ops", "a", "b",
                 "ops_arr", "a_arr", "b_arr")

    def __init__(self, formula: Formula, names: Sequence[str]):
        self.formula = formula
        self.names = tuple(names)
        var_index = {v: i for i, v in enumerate(self.names)}
        self.slots = subformulas(formula)
        self.index = {g: i for i, g in enumerate(self.slots)}
        ops, a, b = [], [], []
        for g in self.slots:
            ops.append(_OPCODE[g.op])
            if g.op == VAR:
                a.append(var_index[g.name])
                b.append(0)
            elif g.args:
                a.append(self.index[g.args[0]])
                b.append(self.index[g.args[1]] if len(g.args) > 1 else 0)
            else:
                a.append(0)
                b.append(0)
        self.ops, self.a, self.b = ops, a, b
        self.ops_arr = array("i", ops)
        self.a_arr = array("i", a)
        self.b_arr = array("i", b)

    @property
    def nvars(self) -> int:
        return len(self.names)


def compile_formula(f: Formula, names: Sequence[str] | None = None) -> Program:
    names = tuple(variables(f)) if names is None else tuple(names)
    missing = set(variables(f)) - set(names)
    if missing:
        raise KeyError(f"variable {sorted(missing)[0]!r} missing from the name list")
    key = ("program", names)
    prog = f.cache.get(key)
    if prog is None:
        prog = Program(f, names)
        f.cache[key] = prog
    return prog


def _fits(n: int, nvars: int = 0) -> bool:
    return _compiled is not None and 1 <= n <= 64 and nvars * n <= 62


def eval_slots(prog: Program, var_masks: Sequence[int], succ: Sequence[int]) -> list:
    n = len(succ)
    if _fits(n):
        return _compiled.eval_slots(prog.ops_arr, prog.a_arr, prog.b_arr,
                                    array("Q", var_masks), array("Q", succ), n)
    return _pykernels.eval_slots(prog.ops, prog.a, prog.b, var_masks, succ, n)


def truth_set(prog: Program, var_masks: Sequence[int], succ: Sequence[int]) -> int:
    return eval_slots(prog, var_masks, succ)[-1]


def decode_valuation(code: int, nvars: int, n: int) -> list:
    full = (1 << n) - 1
    return [(code >> (v * n)) & full for v in range(nvars)]


def find_refuting_valuation(prog: Program, succ: Sequence[int], target: int | None = None) -> int:
    """Least valuation code refuting the program somewhere in ``target``."""
    n = len(succ)
    if target is None:
        target = (1 << n) - 1
    if _fits(n, prog.nvars):
        return _compiled.find_refuting_valuation(prog.ops_arr, prog.a_arr, prog.b_arr,
                                                 prog.nvars, array("Q", succ), n, target)
    return _pykernels.find_refuting_valuation(prog.ops, prog.a, prog.b, prog.nvars,
                                              succ, n, target)


class FrameBatch:
    """A fixed list of frames packed once for repeated countermodel scans."""

    def __init__(self, frames: Sequence[Sequence[int]], targets: Sequence[int] | None = None):
        self.frames = [list(s) for s in frames]
        if targets is None:
            targets = [(1 << len(s)) - 1 for s in self.frames]
        self.targets = list(targets)
        self.flat = array("Q", [m for s in self.frames for m in s])
        self.sizes = array("i", [len(s) for s in self.frames])
        self.targets_arr = array("Q", self.targets)
        self.max_size = max((len(s) for s in self.frames), default=0)

    def __len__(self):
        return len(self.frames)


def find_countermodel(prog: Program, batch: FrameBatch) -> tuple:
    """First ``(frame_index, valuation_code)`` refuting ``prog``, else (-1, -1)."""
    if not len(batch):
        return -1, -1
    if _fits(batch.max_size, prog.nvars):
        return _compiled.find_countermodel(prog.ops_arr, prog.a_arr, prog.b_arr, prog.nvars,
                                           batch.flat, batch.sizes, batch.targets_arr)
    return _pykernels.find_countermodel(prog.ops, prog.a, prog.b, prog.nvars,
                                        batch.frames, batch.targets)
