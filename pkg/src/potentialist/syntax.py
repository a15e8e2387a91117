"""Propositional modal formulas: AST, parser, printer, NNF and substitution.

Concrete grammar (loosest binding first)::

    iff   := imp ('<->' imp)*          left-associative
    imp   := or ('->' imp)?            right-associative
    or    := and ('|' and)*
    and   := unary ('&' unary)*
    unary := '~' unary | '<>' unary | '[]' unary | atom
    atom  := VAR | 'T' | 'F' | '(' iff ')'

Variables match ``[a-z][a-z0-9_]*``.  ``T`` and ``F`` are the constants
true and false.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping

VAR, TOP, BOT, NOT, AND, OR, IMP, IFF, DIA, BOX = (
    "var", "top", "bot", "not", "and", "or", "imp", "iff", "dia", "box",
)
UNARY = (NOT, DIA, BOX)
BINARY = (AND, OR, IMP, IFF)
OPS = (VAR, TOP, BOT) + UNARY + BINARY

_SYMBOL = {NOT: "~", DIA: "<>", BOX: "[]", AND: "&", OR: "|", IMP: "->", IFF: "<->"}
_PREC = {IFF: 1, IMP: 2, OR: 3, AND: 4}
_VAR_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


class Formula:
    """Immutable modal formula node.  Equality is structural."""

    __slots__ = ("op", "args", "name", "_hash", "_size", "cache")

    def __init__(self, op: str, args: tuple = (), name: str | None = None):
        if op not in OPS:
            raise ValueError(f"unknown operator {op!r}")
        if op == VAR:
            if not isinstance(name, str) or not _VAR_RE.match(name):
                raise ValueError(f"bad variable name {name!r}")
        arity = 1 if op in UNARY else 2 if op in BINARY else 0
        if len(args) != arity:
            raise ValueError(f"{op} takes {arity} arguments, got {len(args)}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "name", name if op == VAR else None)
        object.__setattr__(self, "_hash", hash((op, self.args, self.name)))
        object.__setattr__(self, "_size", 1 + sum(a._size for a in args))
        # per-node memo for derived data (compiled programs etc.)
        object.__setattr__(self, "cache", {})

    def __setattr__(self, key, value):
        raise AttributeError("Formula is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Formula) or self._hash != other._hash:
            return False
        return self.op == other.op and self.name == other.name and self.args == other.args

    def __repr__(self):
        return f"Formula({to_str(self)!r})"

    def __str__(self):
        return to_str(self)

    def size(self) -> int:
        return self._size

    # Operator sugar, mirroring the concrete syntax.
    def __invert__(self):
        return Formula(NOT, (self,))

    def __and__(self, other):
        return Formula(AND, (self, other))

    def __or__(self, other):
        return Formula(OR, (self, other))

    def __rshift__(self, other):
        return Formula(IMP, (self, other))


def var(name: str) -> Formula:
    return Formula(VAR, (), name)


TRUE = Formula(TOP)
FALSE = Formula(BOT)


def neg(f: Formula) -> Formula:
    return Formula(NOT, (f,))


def dia(f: Formula) -> Formula:
    return Formula(DIA, (f,))


def box(f: Formula) -> Formula:
    return Formula(BOX, (f,))


def imp(a: Formula, b: Formula) -> Formula:
    return Formula(IMP, (a, b))


def iff(a: Formula, b: Formula) -> Formula:
    return Formula(IFF, (a, b))


def conj(items: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``T``."""
    out = None
    for f in items:
        out = f if out is None else Formula(AND, (out, f))
    return TRUE if out is None else out


def disj(items: Iterable[Formula]) -> Formula:
    """Left-nested disjunction; the empty disjunction is ``F``."""
    out = None
    for f in items:
        out = f if out is None else Formula(OR, (out, f))
    return FALSE if out is None else out


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    """Syntax error carrying the byte offset and the set of expected tokens."""

    def __init__(self, message: str, offset: int, expected: Iterable[str]):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at byte {offset} (expected one of: {exp})")


_TOKEN_RE = re.compile(r"\s*(?:(<->|->|<>|\[\]|[~&|()TF])|([a-z][a-z0-9_]*))")
_ATOM_START = ("VAR", "T", "F", "(", "~", "<>", "[]")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    data = text.encode("utf-8")
    tokens = []
    pos = 0
    # work on the decoded string but report byte offsets
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            rest = len(text[pos:]) - len(text[pos:].lstrip())
            bad = pos + rest
            raise ParseError(
                f"unexpected character {text[bad]!r}",
                len(text[:bad].encode("utf-8")),
                _ATOM_START,
            )
        start = m.start(1) if m.group(1) else m.start(2)
        offset = len(text[:start].encode("utf-8"))
        if m.group(1):
            tokens.append((m.group(1), m.group(1), offset))
        else:
            tokens.append(("VAR", m.group(2), offset))
        pos = m.end()
    tokens.append(("EOF", "", len(data)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, val, off = self.toks[self.i]
        what = "end of input" if kind == "EOF" else f"token {val!r}"
        raise ParseError(f"unexpected {what}", off, expected)

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek() != "EOF":
            self.fail(("EOF", "<->", "->", "|", "&"))
        return f

    def iff(self):
        f = self.imp()
        while self.peek() == "<->":
            self.take()
            f = Formula(IFF, (f, self.imp()))
        return f

    def imp(self):
        f = self.or_()
        if self.peek() == "->":
            self.take()
            return Formula(IMP, (f, self.imp()))
        return f

    def or_(self):
        f = self.and_()
        while self.peek() == "|":
            self.take()
            f = Formula(OR, (f, self.and_()))
        return f

    def and_(self):
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = Formula(AND, (f, self.unary()))
        return f

    def unary(self):
        kind = self.peek()
        if kind == "~":
            self.take()
            return Formula(NOT, (self.unary(),))
        if kind == "<>":
            self.take()
            return Formula(DIA, (self.unary(),))
        if kind == "[]":
            self.take()
            return Formula(BOX, (self.unary(),))
        return self.atom()

    def atom(self):
        kind, val, _ = self.toks[self.i]
        if kind == "VAR":
            self.take()
            return var(val)
        if kind == "T":
            self.take()
            return TRUE
        if kind == "F":
            self.take()
            return FALSE
        if kind == "(":
            self.take()
            f = self.iff()
            if self.peek() != ")":
                self.fail((")", "<->", "->", "|", "&"))
            self.take()
            return f
        self.fail(_ATOM_START)


def parse(text: str) -> Formula:
    return _Parser(text).parse()


# ---------------------------------------------------------------- printing

def to_str(f: Formula) -> str:
    """Canonical concrete syntax with the minimum parentheses needed."""
    cached = f.cache.get("str")
    if cached is not None:
        return cached
    op = f.op
    if op == VAR:
        s = f.name
    elif op == TOP:
        s = "T"
    elif op == BOT:
        s = "F"
    elif op in UNARY:
        child = f.args[0]
        inner = to_str(child)
        if child.op in BINARY:
            inner = f"({inner})"
        s = _SYMBOL[op] + inner
    else:
        a, b = f.args
        p = _PREC[op]
        left, right = to_str(a), to_str(b)
        # -> is right-associative; the other binaries associate left
        if a.op in BINARY and (_PREC[a.op] < p or (_PREC[a.op] == p and op == IMP)):
            left = f"({left})"
        if b.op in BINARY and (_PREC[b.op] < p or (_PREC[b.op] == p and op != IMP)):
            right = f"({right})"
        s = f"{left} {_SYMBOL[op]} {right}"
    f.cache["str"] = s
    return s


# ---------------------------------------------------------------- JSON trees

def to_json(f: Formula) -> dict:
    if f.op == VAR:
        return {"op": VAR, "var": f.name}
    if f.op in (TOP, BOT):
        return {"op": f.op}
    return {"op": f.op, "args": [to_json(a) for a in f.args]}


def from_json(obj: Mapping) -> Formula:
    op = obj.get("op")
    if op == VAR:
        return var(obj["var"])
    if op in (TOP, BOT):
        return Formula(op)
    return Formula(op, tuple(from_json(a) for a in obj.get("args", ())))


# ---------------------------------------------------------------- structure

def variables(f: Formula) -> tuple[str, ...]:
    """Sorted variable names occurring in ``f``."""
    cached = f.cache.get("vars")
    if cached is None:
        names = set()
        stack = [f]
        while stack:
            g = stack.pop()
            if g.op == VAR:
                names.add(g.name)
            stack.extend(g.args)
        cached = tuple(sorted(names))
        f.cache["vars"] = cached
    return cached


def subformulas(f: Formula) -> list[Formula]:
    """Distinct subformulas, children before parents.

    Ordered by (size, printed form), which is a post-order: every child is
    strictly smaller than its parent.
    """
    cached = f.cache.get("subs")
    if cached is not None:
        return list(cached)
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g not in seen:
            seen.add(g)
            stack.extend(g.args)
    out = sorted(seen, key=lambda g: (g.size(), to_str(g)))
    f.cache["subs"] = tuple(out)
    return out


def modal_depth(f: Formula) -> int:
    if not f.args:
        return 0
    d = max(modal_depth(a) for a in f.args)
    return d + 1 if f.op in (DIA, BOX) else d


def substitute(schema: Formula, assignment: Mapping[str, Formula]) -> Formula:
    """Simultaneously replace every variable leaf by its image."""
    missing = [v for v in variables(schema) if v not in assignment]
    if missing:
        raise KeyError(f"unmapped variable {missing[0]!r}")
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        if g.op == VAR:
            return assignment[g.name]
        if not g.args:
            return g
        out = memo.get(g)
        if out is None:
            out = Formula(g.op, tuple(go(a) for a in g.args))
            memo[g] = out
        return out

    return go(schema)


def to_nnf(f: Formula) -> Formula:
    """Negation normal form over ~, &, |, <>, [] (negations only on variables)."""
    return _nnf(f, False)


def _nnf(f: Formula, negated: bool) -> Formula:
    op = f.op
    if op == VAR:
        return neg(f) if negated else f
    if op == TOP:
        return FALSE if negated else TRUE
    if op == BOT:
        return TRUE if negated else FALSE
    if op == NOT:
        return _nnf(f.args[0], not negated)
    if op in (DIA, BOX):
        inner = _nnf(f.args[0], negated)
        flip = {DIA: BOX, BOX: DIA}[op] if negated else op
        return Formula(flip, (inner,))
    a, b = f.args
    if op == AND or op == OR:
        flip = {AND: OR, OR: AND}[op] if negated else op
        return Formula(flip, (_nnf(a, negated), _nnf(b, negated)))
    if op == IMP:
        # a -> b  ==  ~a | b
        if negated:
            return Formula(AND, (_nnf(a, False), _nnf(b, True)))
        return Formula(OR, (_nnf(a, True), _nnf(b, False)))
    # IFF
    if negated:
        return Formula(OR, (Formula(AND, (_nnf(a, False), _nnf(b, True))),
                            Formula(AND, (_nnf(a, True), _nnf(b, False)))))
    return Formula(OR, (Formula(AND, (_nnf(a, False), _nnf(b, False))),
                        Formula(AND, (_nnf(a, True), _nnf(b, True)))))


def is_nnf(f: Formula) -> bool:
    if f.op in (IMP, IFF):
        return False
    if f.op == NOT:
        return f.args[0].op == VAR
    return all(is_nnf(a) for a in f.args)


def enumerate_formulas(names: Iterable[str], max_size: int, constants: bool = False):
    """Yield every formula over ``names`` with at most ``max_size`` nodes.

    Formulas of size n are built from stored formulas of size < n, so memory
    holds sizes up to ``max_size - 1`` while the largest size streams.
    """
    leaves = [var(n) for n in names]
    if constants:
        leaves += [TRUE, FALSE]
    by_size: dict[int, list[Formula]] = {1: leaves}
    yield from leaves
    for n in range(2, max_size + 1):
        keep = n < max_size
        bucket: list[Formula] = []
        for op in UNARY:
            for a in by_size[n - 1]:
                g = Formula(op, (a,))
                if keep:
                    bucket.append(g)
                yield g
        for op in BINARY:
            for i in range(1, n - 1):
                for a in by_size[i]:
                    for b in by_size[n - 1 - i]:
                        g = Formula(op, (a, b))
                        if keep:
                            bucket.append(g)
                        yield g
        by_size[n] = bucket


AXIOMS = {
    "K": "[](p -> q) -> ([]p -> []q)",
    "T": "[]p -> p",
    "4": "[]p -> [][]p",
    "dual": "~<>p <-> []~p",
    ".2": "<>[]p -> []<>p",
    ".3": "(<>p & <>q) -> <>((p & <>q) | (q & <>p))",
    "5": "<>[]p -> p",
}
