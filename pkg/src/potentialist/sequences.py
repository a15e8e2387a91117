"""The sequence-extension potentialist system.

Worlds are finite sequences of naturals and a world accesses exactly its end
extensions.  Statements (``SeqStatement``) are built from atomic descriptors:

* ``rho(k)``   ``k`` occurs in the sequence (a button: once pushed it stays pushed)
* ``eta(k)``   ``k`` does not occur
* ``sigma(k)`` bit ``k`` of the last entry is 1 (false on the empty sequence)
* ``first(m, r)`` the first entry is congruent to ``r`` mod ``m``
* ``rail(enc, node)`` the railyard decoder of ``enc`` lands on ``node``

closed under Boolean connectives and the modalities ``dia``/``box``.

Modal truth is decided exactly.  Each statement only depends on a finite
abstraction of the sequence (which relevant numbers occurred, a few bits of
the last entry, decoder state, ...).  Appending an entry acts on that
abstraction deterministically and every abstract move is realized by some
concrete append, so the abstraction map is a bounded morphism.  Truth on the
finite quotient therefore equals truth in the infinite system.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from . import kernels
from .kripke import PreTree, pretree_from_shape
from .syntax import Formula, var as fvar
from .syntax import (AND, BOT, BOX, DIA, IFF, IMP, NOT, OR, TOP, VAR)


class SequenceWorld(tuple):
    """A finite sequence of naturals."""

    def __new__(cls, entries: Iterable[int] = ()):
        items = tuple(int(x) for x in entries)
        if any(x < 0 for x in items):
            raise ValueError("sequence entries must be natural numbers")
        return super().__new__(cls, items)

    @property
    def seq(self) -> tuple:
        return tuple(self)

    def extend(self, *xs: int) -> "SequenceWorld":
        return SequenceWorld(tuple(self) + xs)

    def __repr__(self):
        return "[" + ",".join(map(str, self)) + "]"


def accessible(s: Sequence[int], t: Sequence[int]) -> bool:
    """``t`` end-extends ``s`` (every world accesses itself)."""
    return len(s) <= len(t) and tuple(t[:len(s)]) == tuple(s)


class UnsupportedStatement(ValueError):
    """Raised when a modal question is asked about a descriptor without an exact oracle."""


# ---------------------------------------------------------------- railyard encoding

class RailyardEncoding:
    """Decode sequences onto the worlds of a uniform pre-tree.

    After skipping the first ``offset`` entries, entries below ``k`` pick
    children in order while the current cluster has children (extra ones are
    ignored at a leaf).  The last entry that is at least ``k`` (``k`` if
    there is none), taken mod ``m``, picks the world inside the cluster
    reached.
    """

    def __init__(self, tree: PreTree, offset: int = 0):
        shape = tree.uniform_shape()
        if shape is None:
            raise ValueError("railyard encoding needs a uniform pre-tree")
        self.tree = tree
        self.m, self.k = shape
        self.offset = offset
        self.children = [tree.children(c) for c in range(len(tree.clusters))]
        self.key = (tree.shape_key(), self.k, self.m, offset)

    def __eq__(self, other):
        return isinstance(other, RailyardEncoding) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def initial_state(self) -> tuple:
        return (0, self.tree.root, None)

    def step(self, state: tuple, x: int) -> tuple:
        skipped, cluster, residue = state
        if skipped < self.offset:
            return (skipped + 1, cluster, residue)
        if x < self.k:
            kids = self.children[cluster]
            if kids:
                return (skipped, kids[x], residue)
            return state
        return (skipped, cluster, x % self.m)

    def state_of(self, seq: Sequence[int]) -> tuple:
        st = self.initial_state()
        for x in seq:
            st = self.step(st, x)
        return st

    def world_of_state(self, state: tuple) -> int:
        _, cluster, residue = state
        r = self.k % self.m if residue is None else residue
        return self.tree.clusters[cluster][r]

    def decode(self, seq: Sequence[int]) -> int:
        """World of the tree that ``seq`` lands on."""
        return self.world_of_state(self.state_of(seq))

    def labeling(self) -> dict:
        """World of the tree -> statement "the decoder lands here"."""
        return {w: SeqStatement.rail(self, w) for w in range(self.tree.n)}

    def to_json(self) -> dict:
        return {"tree": _shape_json(self.tree.shape_key()), "offset": self.offset}


def _shape_json(shape) -> list:
    return [shape[0], [_shape_json(c) for c in shape[1]]]


def _shape_from_json(obj) -> tuple:
    return (int(obj[0]), tuple(_shape_from_json(c) for c in obj[1]))


def railyard_encoding(t: PreTree, offset: int = 0) -> tuple:
    """``(labeling, decoder)`` for a uniform pre-tree.

    ``labeling`` maps each world of ``t`` to its statement and ``decoder``
    maps a sequence to a world of ``t``.  ``offset`` ignores that many leading
    entries, so a base world of that length decodes like the empty sequence.
    """
    enc = RailyardEncoding(t, offset)
    return enc.labeling(), enc.decode


# ---------------------------------------------------------------- statements

_ATOMS = ("rho", "eta", "sigma", "first", "rail", "pred")
_NODES = ("top", "bot", "not", "and", "or", "imp", "iff", "dia", "box")


class SeqStatement:
    """Statement about a sequence world.  Immutable, structural equality."""

    __slots__ = ("kind", "params", "args", "_hash")

    def __init__(self, kind: str, params: tuple = (), args: tuple = ()):
        if kind not in _ATOMS + _NODES:
            raise ValueError(f"unknown statement kind {kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(params))
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "_hash", hash((kind, self.params, self.args)))

    def __setattr__(self, key, value):
        raise AttributeError("SeqStatement is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (isinstance(other, SeqStatement) and self._hash == other._hash
                and self.kind == other.kind and self.params == other.params
                and self.args == other.args)

    # constructors -----------------------------------------------------------
    @staticmethod
    def rho(k: int) -> "SeqStatement":
        return SeqStatement("rho", (int(k),))

    @staticmethod
    def eta(k: int) -> "SeqStatement":
        return SeqStatement("eta", (int(k),))

    @staticmethod
    def sigma(k: int) -> "SeqStatement":
        return SeqStatement("sigma", (int(k),))

    @staticmethod
    def first(m: int, r: int) -> "SeqStatement":
        if m < 1:
            raise ValueError("modulus must be positive")
        return SeqStatement("first", (int(m), int(r) % int(m)))

    @staticmethod
    def rail(enc: RailyardEncoding, node: int) -> "SeqStatement":
        return SeqStatement("rail", (enc, int(node)))

    @staticmethod
    def pred(name: str, fn: Callable[[tuple], bool]) -> "SeqStatement":
        """Arbitrary predicate; evaluable, but outside the exact modal fragment."""
        return SeqStatement("pred", (name, fn))

    def __invert__(self):
        return neg(self)

    def __and__(self, other):
        return SeqStatement("and", (), (self, other))

    def __or__(self, other):
        return SeqStatement("or", (), (self, other))

    def __repr__(self):
        return f"SeqStatement({describe(self)})"

    def __str__(self):
        return describe(self)


TOP_S = SeqStatement("top")
BOT_S = SeqStatement("bot")


def neg(s: SeqStatement) -> SeqStatement:
    return SeqStatement("not", (), (s,))


def conj(items: Iterable[SeqStatement]) -> SeqStatement:
    out = None
    for s in items:
        out = s if out is None else SeqStatement("and", (), (out, s))
    return TOP_S if out is None else out


def disj(items: Iterable[SeqStatement]) -> SeqStatement:
    out = None
    for s in items:
        out = s if out is None else SeqStatement("or", (), (out, s))
    return BOT_S if out is None else out


def dia(s: SeqStatement) -> SeqStatement:
    return SeqStatement("dia", (), (s,))


def box(s: SeqStatement) -> SeqStatement:
    return SeqStatement("box", (), (s,))


def describe(s: SeqStatement) -> str:
    k = s.kind
    if k in ("rho", "eta", "sigma"):
        return f"{k}({s.params[0]})"
    if k == "first":
        return f"first%{s.params[0]}=={s.params[1]}"
    if k == "rail":
        return f"rail({s.params[1]})"
    if k == "pred":
        return f"pred({s.params[0]})"
    if k == "top":
        return "T"
    if k == "bot":
        return "F"
    if k == "not":
        return "~" + _wrap(s.args[0])
    if k in ("dia", "box"):
        return ("<>" if k == "dia" else "[]") + _wrap(s.args[0])
    sym = {"and": "&", "or": "|", "imp": "->", "iff": "<->"}[k]
    return f"{_wrap(s.args[0])} {sym} {_wrap(s.args[1])}"


def _wrap(s: SeqStatement) -> str:
    text = describe(s)
    return f"({text})" if s.kind in ("and", "or", "imp", "iff") else text


def is_modal_free(s: SeqStatement) -> bool:
    if s.kind in ("dia", "box"):
        return False
    return all(is_modal_free(a) for a in s.args)


def atoms_of(s: SeqStatement) -> list:
    out, seen = [], set()
    stack = [s]
    while stack:
        x = stack.pop()
        if x.kind in _ATOMS:
            if x not in seen:
                seen.add(x)
                out.append(x)
        else:
            stack.extend(reversed(x.args))
    return out


def eval_atom(seq: Sequence[int], s: SeqStatement) -> bool:
    k = s.kind
    if k == "rho":
        return s.params[0] in seq
    if k == "eta":
        return s.params[0] not in seq
    if k == "sigma":
        return bool(seq) and bool(seq[-1] >> s.params[0] & 1)
    if k == "first":
        return bool(seq) and seq[0] % s.params[0] == s.params[1]
    if k == "rail":
        enc, node = s.params
        return enc.decode(seq) == node
    if k == "pred":
        return bool(s.params[1](tuple(seq)))
    raise ValueError(k)


def eval_stmt(w: Sequence[int], s: SeqStatement) -> bool:
    """Truth of ``s`` at world ``w``.  Modal parts use the exact quotient oracle."""
    if is_modal_free(s):
        return _eval_boolean(w, s)
    return _default_oracle.holds(w, s)


def _eval_boolean(w, s: SeqStatement) -> bool:
    k = s.kind
    if k in _ATOMS:
        return eval_atom(w, s)
    if k == "top":
        return True
    if k == "bot":
        return False
    if k == "not":
        return not _eval_boolean(w, s.args[0])
    a = _eval_boolean(w, s.args[0])
    if k == "and":
        return a and _eval_boolean(w, s.args[1])
    if k == "or":
        return a or _eval_boolean(w, s.args[1])
    if k == "imp":
        return (not a) or _eval_boolean(w, s.args[1])
    if k == "iff":
        return a == _eval_boolean(w, s.args[1])
    raise ValueError(k)


# ---------------------------------------------------------------- exact quotient

class _Abstraction:
    """Finite abstraction of sequences relevant to a fixed set of atoms."""

    def __init__(self, atoms: Sequence[SeqStatement]):
        for a in atoms:
            if a.kind == "pred":
                raise UnsupportedStatement(
                    f"no exact modal oracle for predicate {a.params[0]!r}")
        self.atoms = list(atoms)
        self.ks = sorted({a.params[0] for a in atoms if a.kind in ("rho", "eta")})
        self.bits = sorted({a.params[0] for a in atoms if a.kind == "sigma"})
        self.mods = sorted({a.params[0] for a in atoms if a.kind == "first"})
        self.encs = []
        for a in atoms:
            if a.kind == "rail" and a.params[0] not in self.encs:
                self.encs.append(a.params[0])
        # representatives: every small number, then one number per residue class
        small = max([k + 1 for k in self.ks] + [e.k for e in self.encs] + [1])
        period = 1
        if self.bits:
            period = 1 << (max(self.bits) + 1)
        for m in self.mods + [e.m for e in self.encs]:
            period = period * m // math.gcd(period, m)
        self.reps = list(range(small)) + [small + ((r - small) % period) for r in range(period)]
        self._succ: dict = {}

    def state_of(self, seq: Sequence[int]) -> tuple:
        st = self.initial()
        for x in seq:
            st = self.step(st, x)
        return st

    def initial(self) -> tuple:
        return (frozenset(), None, tuple(None for _ in self.mods),
                tuple(e.initial_state() for e in self.encs))

    def step(self, st: tuple, x: int) -> tuple:
        seen, last, firsts, rails = st
        if x in self.ks and x not in seen:
            seen = seen | {x}
        last = tuple(x >> b & 1 for b in self.bits)
        firsts = tuple(x % m if f is None else f for f, m in zip(firsts, self.mods))
        rails = tuple(e.step(r, x) for e, r in zip(self.encs, rails))
        return (seen, last, firsts, rails)

    def successors(self, st: tuple) -> frozenset:
        out = self._succ.get(st)
        if out is None:
            out = frozenset(self.step(st, x) for x in self.reps)
            self._succ[st] = out
        return out

    def atom_value(self, st: tuple, a: SeqStatement) -> bool:
        seen, last, firsts, rails = st
        k = a.kind
        if k == "rho":
            return a.params[0] in seen
        if k == "eta":
            return a.params[0] not in seen
        if k == "sigma":
            return last is not None and bool(last[self.bits.index(a.params[0])])
        if k == "first":
            f = firsts[self.mods.index(a.params[0])]
            return f is not None and f == a.params[1]
        if k == "rail":
            enc, node = a.params
            i = self.encs.index(enc)
            return enc.world_of_state(rails[i]) == node
        raise UnsupportedStatement(k)

    def reachable(self, start: tuple) -> list:
        order, index = [start], {start: 0}
        i = 0
        while i < len(order):
            for nxt in sorted(self.successors(order[i]), key=repr):
                if nxt not in index:
                    index[nxt] = len(order)
                    order.append(nxt)
            i += 1
        return order


def _skeleton(s: SeqStatement, names: dict) -> Formula:
    k = s.kind
    if k in _ATOMS:
        if s not in names:
            names[s] = f"a{len(names)}"
        return fvar(names[s])
    if k == "top":
        return Formula(TOP)
    if k == "bot":
        return Formula(BOT)
    op = {"not": NOT, "and": AND, "or": OR, "imp": IMP, "iff": IFF, "dia": DIA, "box": BOX}[k]
    return Formula(op, tuple(_skeleton(a, names) for a in s.args))


class QuotientOracle:
    """Exact truth of statements, memoized per statement and abstract state."""

    def __init__(self):
        self._abs: dict = {}
        self._truth: dict = {}

    def abstraction(self, s: SeqStatement) -> _Abstraction:
        key = frozenset(atoms_of(s))
        ab = self._abs.get(key)
        if ab is None:
            ab = _Abstraction(sorted(key, key=describe))
            self._abs[key] = ab
        return ab

    def holds(self, w: Sequence[int], s: SeqStatement) -> bool:
        ab = self.abstraction(s)
        st = ab.state_of(w)
        table = self._truth.setdefault(s, {})
        if st not in table:
            table.update(self._solve(ab, st, s))
        return table[st]

    def quotient_size(self, w: Sequence[int], s: SeqStatement) -> int:
        ab = self.abstraction(s)
        return len(ab.reachable(ab.state_of(w)))

    def _solve(self, ab: _Abstraction, start: tuple, s: SeqStatement) -> dict:
        states = ab.reachable(start)
        index = {st: i for i, st in enumerate(states)}
        n = len(states)
        step = [sum(1 << index[t] for t in ab.successors(st)) | (1 << i)
                for i, st in enumerate(states)]
        reach = _closure(step)
        names: dict = {}
        skel = _skeleton(s, names)
        order = sorted(names.items(), key=lambda kv: kv[1])
        var_names = [nm for _, nm in order]
        masks = [sum(1 << i for i, st in enumerate(states) if ab.atom_value(st, atom))
                 for atom, _ in order]
        prog = kernels.compile_formula(skel, var_names)
        ts = kernels.truth_set(prog, masks, reach)
        return {st: bool(ts >> i & 1) for st, i in index.items()}


def _closure(step: list) -> list:
    reach = list(step)
    changed = True
    while changed:
        changed = False
        for i, m in enumerate(reach):
            acc = m
            rest = m
            while rest:
                low = rest & -rest
                rest ^= low
                acc |= reach[low.bit_length() - 1]
            if acc != m:
                reach[i] = acc
                changed = True
    return reach


_default_oracle = QuotientOracle()


def possible(w: Sequence[int], s: SeqStatement, oracle: QuotientOracle | None = None) -> bool:
    """Some end extension of ``w`` (possibly ``w`` itself) satisfies ``s``."""
    return (oracle or _default_oracle).holds(w, dia(s))


def necessary(w: Sequence[int], s: SeqStatement, oracle: QuotientOracle | None = None) -> bool:
    """Every end extension of ``w`` satisfies ``s``."""
    return (oracle or _default_oracle).holds(w, box(s))


# ---------------------------------------------------------------- windows

def window(base: Sequence[int], alphabet: Iterable[int], depth: int) -> list:
    """``base`` extended by at most ``depth`` entries drawn from ``alphabet``."""
    base = tuple(base)
    alphabet = list(alphabet)
    out = []
    for length in range(depth + 1):
        for ext in itertools.product(alphabet, repeat=length):
            out.append(SequenceWorld(base + ext))
    return out


def window_covers_quotient(base: Sequence[int], worlds: Iterable[Sequence[int]],
                           s: SeqStatement) -> bool:
    """Every abstract state reachable from ``base`` is realized in ``worlds``."""
    ab = _default_oracle.abstraction(s)
    reachable = set(ab.reachable(ab.state_of(base)))
    realized = {ab.state_of(w) for w in worlds}
    return reachable <= realized


class SequenceSystem:
    """The sequence system viewed through a finite window of worlds.

    World handles are ``SequenceWorld`` values; modal questions always use
    the exact quotient oracle, never the window.
    """

    def __init__(self, base: Sequence[int] = (), alphabet: Iterable[int] = range(2),
                 depth: int = 2, oracle: QuotientOracle | None = None):
        self.base = SequenceWorld(base)
        self.alphabet = list(alphabet)
        self.depth = depth
        self.oracle = oracle or QuotientOracle()
        self._worlds = window(self.base, self.alphabet, depth)

    @classmethod
    def for_switches(cls, m: int, base: Sequence[int] = ()) -> "SequenceSystem":
        """Window where one appended number realizes any ``m``-bit pattern."""
        return cls(base, range(1 << m), 2)

    @classmethod
    def for_railyard(cls, enc: RailyardEncoding, base: Sequence[int] | None = None) -> "SequenceSystem":
        """Window covering every decoder state: entries below ``k + m`` and
        ``depth + 1`` appended entries beyond the skipped prefix."""
        if base is None:
            base = ()
        extra = max(0, enc.offset - len(base))
        return cls(base, range(enc.k + enc.m), enc.tree.depth() + extra)

    def worlds(self) -> list:
        return list(self._worlds)

    def accessible(self, w, u) -> bool:
        return accessible(w, u)

    def holds(self, w, s: SeqStatement) -> bool:
        if is_modal_free(s):
            return _eval_boolean(w, s)
        return self.oracle.holds(w, s)

    def possible(self, w, s: SeqStatement) -> bool:
        return self.oracle.holds(w, dia(s))

    def necessary(self, w, s: SeqStatement) -> bool:
        return self.oracle.holds(w, box(s))

    def neg(self, s):
        return neg(s)

    def conj(self, items):
        return conj(items)

    def disj(self, items):
        return disj(items)

    def top(self):
        return TOP_S

    def instantiate(self, f: Formula, assignment: Mapping[str, SeqStatement]) -> SeqStatement:
        return instantiate(f, assignment)

    def describe_world(self, w) -> str:
        return repr(SequenceWorld(w))


def instantiate(f: Formula, assignment: Mapping[str, SeqStatement]) -> SeqStatement:
    """Substitute statements for the variables of a modal formula."""
    op = f.op
    if op == VAR:
        if f.name not in assignment:
            raise KeyError(f"unmapped variable {f.name!r}")
        return assignment[f.name]
    if op == TOP:
        return TOP_S
    if op == BOT:
        return BOT_S
    kind = {NOT: "not", AND: "and", OR: "or", IMP: "imp", IFF: "iff", DIA: "dia", BOX: "box"}[op]
    return SeqStatement(kind, (), tuple(instantiate(a, assignment) for a in f.args))


# ---------------------------------------------------------------- JSON

def stmt_to_json(s: SeqStatement) -> dict:
    k = s.kind
    if k in ("rho", "eta", "sigma"):
        return {"kind": k, "k": s.params[0]}
    if k == "first":
        return {"kind": k, "m": s.params[0], "r": s.params[1]}
    if k == "rail":
        enc, node = s.params
        return {"kind": k, "node": node, **enc.to_json()}
    if k == "pred":
        raise ValueError("predicate statements are not serializable")
    if k in ("top", "bot"):
        return {"kind": k}
    return {"kind": k, "args": [stmt_to_json(a) for a in s.args]}


def stmt_from_json(obj: Mapping) -> SeqStatement:
    k = obj["kind"]
    if k in ("rho", "eta", "sigma"):
        return SeqStatement(k, (int(obj["k"]),))
    if k == "first":
        return SeqStatement.first(int(obj["m"]), int(obj["r"]))
    if k == "rail":
        tree = pretree_from_shape(_shape_from_json(obj["tree"]))
        return SeqStatement.rail(RailyardEncoding(tree, int(obj.get("offset", 0))), int(obj["node"]))
    if k in ("top", "bot"):
        return SeqStatement(k)
    if k in _NODES:
        return SeqStatement(k, (), tuple(stmt_from_json(a) for a in obj["args"]))
    raise ValueError(f"unknown statement kind {k!r}")
