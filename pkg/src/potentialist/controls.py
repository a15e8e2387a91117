"""Control statements: switches, dials, buttons, railway switches, railyards.

Verifiers work against any *system*: an object exposing

* ``worlds()``             the world handles to check (all worlds of a finite
                           model, or a window of an infinite system)
* ``holds(w, s)``          truth of a statement
* ``possible(w, s)`` / ``necessary(w, s)``  exact modal oracles
* ``neg``, ``conj``, ``disj``, ``top``  statement builders
* ``instantiate(f, assignment)``  substitution of statements into a formula

``FiniteSystem`` wraps a ``KripkeModel`` (statements are modal formulas over
its variables); ``sequences.SequenceSystem`` serves the sequence system.
Every failing report carries a witness that re-checks as a violation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import sequences, syntax
from .kripke import KripkeModel, PreTree
from .sequences import SeqStatement
from .syntax import Formula

SWITCH = "switch"
INDEPENDENT_SWITCHES = "independent_switches"
DIAL = "dial"
BUTTON = "button"
INDEPENDENT_BUTTONS = "independent_buttons"
RAILWAY_SWITCH = "railway_switch"
RAILYARD = "railyard"


@dataclass
class ControlReport:
    kind: str
    passed: bool
    witness: Any = None
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __bool__(self):
        return self.passed

    def to_json(self, describe_world=repr) -> dict:
        out = {"kind": self.kind, "verdict": self.verdict}
        if not self.passed:
            out["reason"] = self.reason
            out["witness"] = _jsonable(self.witness, describe_world)
        if self.details:
            out["details"] = _jsonable(self.details, describe_world)
        return out


def _jsonable(x, describe_world):
    if isinstance(x, dict):
        return {str(k): _jsonable(v, describe_world) for k, v in x.items()}
    if isinstance(x, sequences.SequenceWorld):
        return describe_world(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v, describe_world) for v in x]
    if isinstance(x, (Formula, SeqStatement)):
        return str(x)
    return x


class FiniteSystem:
    """A finite Kripke model as a system; statements are modal formulas."""

    def __init__(self, model: KripkeModel):
        self.model = model

    def worlds(self) -> list:
        return list(range(self.model.n))

    def accessible(self, w: int, u: int) -> bool:
        return self.model.accessible(w, u)

    def holds(self, w: int, s: Formula) -> bool:
        return self.model.eval(w, s)

    def possible(self, w: int, s: Formula) -> bool:
        return self.model.eval(w, syntax.dia(s))

    def necessary(self, w: int, s: Formula) -> bool:
        return self.model.eval(w, syntax.box(s))

    def neg(self, s):
        return syntax.neg(s)

    def conj(self, items):
        return syntax.conj(items)

    def disj(self, items):
        return syntax.disj(items)

    def top(self):
        return syntax.TRUE

    def instantiate(self, f: Formula, assignment: Mapping[str, Formula]) -> Formula:
        return syntax.substitute(f, assignment)

    def describe_world(self, w) -> str:
        return str(w)


# ---------------------------------------------------------------- builders

def _ops_for(stmt):
    """Statement builders matching the statement's type."""
    if isinstance(stmt, SeqStatement):
        return sequences.neg, sequences.conj, sequences.disj
    return syntax.neg, syntax.conj, syntax.disj


def pattern_statement(family: Sequence, pattern: Sequence[bool]):
    """Conjunction asserting each member of ``family`` has the given truth value."""
    neg, conj, _ = _ops_for(family[0])
    return conj(s if bit else neg(s) for s, bit in zip(family, pattern))


# ---------------------------------------------------------------- verifiers

def is_switch(system, s) -> ControlReport:
    for w in system.worlds():
        if not system.possible(w, s):
            return ControlReport(SWITCH, False, w, "statement cannot become true")
        if not system.possible(w, system.neg(s)):
            return ControlReport(SWITCH, False, w, "statement cannot become false")
    return ControlReport(SWITCH, True)


def are_independent_switches(system, family: Sequence) -> ControlReport:
    family = list(family)
    if not family:
        return ControlReport(INDEPENDENT_SWITCHES, True)
    patterns = list(itertools.product((True, False), repeat=len(family)))
    stmts = [pattern_statement(family, p) for p in patterns]
    for w in system.worlds():
        for p, st in zip(patterns, stmts):
            if not system.possible(w, st):
                return ControlReport(INDEPENDENT_SWITCHES, False, (w, p),
                                     "pattern not realizable from this world")
    return ControlReport(INDEPENDENT_SWITCHES, True)


def is_dial(system, family: Sequence) -> ControlReport:
    family = list(family)
    if not family:
        raise ValueError("a dial needs at least one statement")
    for w in system.worlds():
        true_at = [i for i, s in enumerate(family) if system.holds(w, s)]
        if len(true_at) != 1:
            return ControlReport(DIAL, False, (w, tuple(true_at)),
                                 "world does not satisfy exactly one dial statement")
        for i, s in enumerate(family):
            if not system.possible(w, s):
                return ControlReport(DIAL, False, (w, i), "dial value unreachable")
    return ControlReport(DIAL, True)


def switches_to_dial(family: Sequence) -> list:
    """Dial statement ``t`` asserts each switch ``i`` equals bit ``i`` of ``t``."""
    family = list(family)
    if not family:
        raise ValueError("need at least one switch")
    m = len(family)
    return [pattern_statement(family, [bool(t >> i & 1) for i in range(m)])
            for t in range(1 << m)]


def dial_to_switches(dial: Sequence) -> list:
    """Switch ``i`` asserts the active dial index has bit ``i`` set."""
    dial = list(dial)
    size = len(dial)
    if size < 2 or size & (size - 1):
        raise ValueError("dial size must be a power of two, at least 2")
    m = size.bit_length() - 1
    _, _, disj = _ops_for(dial[0])
    return [disj(dial[t] for t in range(size) if t >> i & 1) for i in range(m)]


def is_button(system, s) -> ControlReport:
    bs = _box(system, s)
    pushed = []
    for w in system.worlds():
        if not system.possible(w, bs):
            return ControlReport(BUTTON, False, w, "button cannot be pushed from this world")
        if system.holds(w, bs):
            pushed.append(w)
    return ControlReport(BUTTON, True, details={"pushed": pushed})


def are_independent_buttons(system, family: Sequence) -> ControlReport:
    """From every world, any subset of the unpushed buttons can be pushed
    while every other unpushed button stays unpushed (finite subsets only)."""
    family = list(family)
    boxes = [_box(system, b) for b in family]
    for w in system.worlds():
        unpushed = [i for i, bs in enumerate(boxes) if not system.holds(w, bs)]
        for r in range(len(unpushed) + 1):
            for chosen in itertools.combinations(unpushed, r):
                parts = [boxes[i] if i in chosen else system.neg(boxes[i]) for i in unpushed]
                if not system.possible(w, system.conj(parts)):
                    return ControlReport(INDEPENDENT_BUTTONS, False, (w, chosen),
                                         "cannot push exactly this subset")
    return ControlReport(INDEPENDENT_BUTTONS, True)


def is_railway_switch(system, s) -> ControlReport:
    pos, negb = _box(system, s), _box(system, system.neg(s))
    undetermined = []
    for w in system.worlds():
        if system.holds(w, pos) or system.holds(w, negb):
            continue
        if system.possible(w, pos) and system.possible(w, negb):
            undetermined.append(w)
            continue
        return ControlReport(RAILWAY_SWITCH, False, w,
                             "neither settled nor able to settle both ways")
    return ControlReport(RAILWAY_SWITCH, True, details={"undetermined": undetermined})


def _box(system, s):
    if isinstance(s, SeqStatement):
        return sequences.box(s)
    return syntax.box(s)


def is_railyard_labeling(system, t: PreTree, labeling: Mapping[int, Any], base) -> ControlReport:
    """Check a labeling of the worlds of ``t`` by statements.

    (a) every checked world satisfies exactly one label, (b) ``base``
    satisfies the label of a world in the root cluster, and (c) at every
    checked world whose label is node ``u``, label ``v`` is possible exactly
    when ``u`` precedes ``v`` in the pre-tree order.
    """
    nodes = list(range(t.n))
    missing = [v for v in nodes if v not in labeling]
    if missing:
        raise ValueError(f"labeling misses node {missing[0]}")
    cluster = {w: c for c, ws in enumerate(t.clusters) for w in ws}
    worlds = system.worlds()
    if base not in worlds:
        worlds = [base] + list(worlds)
    node_at = {}
    for w in worlds:
        true_at = [v for v in nodes if system.holds(w, labeling[v])]
        if len(true_at) != 1:
            return ControlReport(RAILYARD, False, (w, tuple(true_at)),
                                 "world does not satisfy exactly one label")
        node_at[w] = true_at[0]
    if node_at[base] not in t.clusters[t.root]:
        return ControlReport(RAILYARD, False, (base, node_at[base]),
                             "base world is not labeled by a root-cluster node")
    for w in worlds:
        u = node_at[w]
        for v in nodes:
            expected = t.leq(cluster[u], cluster[v])
            if system.possible(w, labeling[v]) != expected:
                return ControlReport(RAILYARD, False, (w, u, v),
                                     "possibility of a label disagrees with the tree order")
    return ControlReport(RAILYARD, True, details={"checked_worlds": len(worlds)})


def railyard_reach_witness(system, t: PreTree, labeling: Mapping[int, Any], base, target: int):
    """A checked world accessible from ``base`` that satisfies the label of ``target``."""
    for w in system.worlds():
        if system.accessible(base, w) and system.holds(w, labeling[target]):
            return w
    return None


# ---------------------------------------------------------------- JSON families

def family_from_json(obj: Mapping) -> tuple:
    """``{"kind": ..., "statements": [...]}`` -> (kind, statements).

    Strings are parsed as modal formulas; objects as sequence descriptors.
    """
    kind = obj["kind"]
    stmts = []
    for item in obj.get("statements", []):
        if isinstance(item, str):
            stmts.append(syntax.parse(item))
        else:
            stmts.append(sequences.stmt_from_json(item))
    return kind, stmts


def family_to_json(kind: str, statements: Sequence) -> dict:
    out = []
    for s in statements:
        out.append(sequences.stmt_to_json(s) if isinstance(s, SeqStatement) else str(s))
    return {"kind": kind, "statements": out}


def verify_family(system, kind: str, statements: Sequence) -> ControlReport:
    """Dispatch a family loaded from JSON to its verifier."""
    if kind == SWITCH:
        reports = [is_switch(system, s) for s in statements]
        bad = next((r for r in reports if not r.passed), None)
        return bad if bad is not None else ControlReport(SWITCH, True)
    if kind in ("switches", INDEPENDENT_SWITCHES):
        return are_independent_switches(system, statements)
    if kind == DIAL:
        return is_dial(system, statements)
    if kind in (BUTTON, "buttons"):
        reports = [is_button(system, s) for s in statements]
        bad = next((r for r in reports if not r.passed), None)
        return bad if bad is not None else ControlReport(BUTTON, True)
    if kind == INDEPENDENT_BUTTONS:
        return are_independent_buttons(system, statements)
    if kind == RAILWAY_SWITCH:
        reports = [is_railway_switch(system, s) for s in statements]
        bad = next((r for r in reports if not r.passed), None)
        return bad if bad is not None else ControlReport(RAILWAY_SWITCH, True)
    raise ValueError(f"unknown control family kind {kind!r}")
