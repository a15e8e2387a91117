"""Consistency-based modalities over toy theories and the maximality principle.

A toy theory has finitely many atomic sentences, literals over them, a
monotone consistency oracle, nested axiom fragments ``fragment(0) ⊆
fragment(1) ⊆ ...`` and a designated class ``E`` of persistent (existential)
sentences.  At a world (a complete assignment) with E-part ``E(w)``:

* ``possible(w, φ, K)``: ``fragment(k) ∪ E(w) ∪ {φ}`` is consistent for every ``k ≤ K``
* ``necessary(w, φ, K)``: some ``fragment(k) ∪ E(w)`` with ``k ≤ K`` derives ``φ``
* ``possibly_necessary(w, φ, K)``: via refutation tokens (persistent sentences
  serve as their own token)

Every verdict is stamped with its horizon ``K``: the unbounded quantifier over
all fragments is not finitely checkable, so answers are relative to ``K``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .syntax import BOX, DIA, Formula, box, dia, substitute, var


class UnsupportedQuery(ValueError):
    """The toy theory lacks the tokens needed to answer the query."""


class InconsistentBase(ValueError):
    """The base theory is already inconsistent."""


def negate(lit: str) -> str:
    return lit[1:] if lit.startswith("~") else "~" + lit


def atom_of(lit: str) -> str:
    return lit[1:] if lit.startswith("~") else lit


class ModelTableOracle:
    """Consistency means: some allowed assignment satisfies every literal."""

    def __init__(self, atoms: Sequence[str], models: Iterable[Iterable[str]]):
        self.atoms = list(atoms)
        self.models = [frozenset(m) for m in models]
        unknown = {a for m in self.models for a in m} - set(self.atoms)
        if unknown:
            raise ValueError(f"model names unknown atom {sorted(unknown)[0]!r}")

    def satisfies(self, model: frozenset, lits: Iterable[str]) -> bool:
        return all((atom_of(l) in model) != l.startswith("~") for l in lits)

    def consistent(self, lits: Iterable[str]) -> bool:
        lits = list(lits)
        return any(self.satisfies(m, lits) for m in self.models)

    def witness(self, lits: Iterable[str]) -> frozenset | None:
        lits = list(lits)
        for m in self.models:
            if self.satisfies(m, lits):
                return m
        return None

    def to_json(self) -> dict:
        return {"models": [sorted(m) for m in self.models]}


class NogoodOracle:
    """Consistency means: no complementary pair and no listed nogood inside."""

    def __init__(self, atoms: Sequence[str], nogoods: Iterable[Iterable[str]]):
        self.atoms = list(atoms)
        self.nogoods = [frozenset(n) for n in nogoods]

    def consistent(self, lits: Iterable[str]) -> bool:
        s = set(lits)
        if any(negate(l) in s for l in s):
            return False
        return not any(n <= s for n in self.nogoods)

    def witness(self, lits: Iterable[str]) -> frozenset | None:
        """Least completion (atoms in order, false preferred) staying consistent."""
        s = set(lits)
        if not self.consistent(s):
            return None
        for a in self.atoms:
            if a in s or "~" + a in s:
                continue
            s.add("~" + a) if self.consistent(s | {"~" + a}) else s.add(a)
            if not self.consistent(s):
                return None
        return frozenset(a for a in self.atoms if a in s)

    def to_json(self) -> dict:
        return {"nogoods": [sorted(n) for n in self.nogoods]}


@dataclass
class ToyTheory:
    atoms: list
    fragments: list                       # list of frozensets of literals, nested
    existential: list                     # persistent atoms (E), in enumeration order
    oracle: object
    tokens: dict = field(default_factory=dict)   # (n, literal) -> token atom

    def __post_init__(self):
        self.fragments = [frozenset(f) for f in self.fragments]
        if not self.fragments:
            self.fragments = [frozenset()]
        for a, b in zip(self.fragments, self.fragments[1:]):
            if not a <= b:
                raise ValueError("fragments must be nested")
        known = set(self.atoms)
        for lit in itertools.chain.from_iterable(self.fragments):
            if atom_of(lit) not in known:
                raise ValueError(f"fragment mentions unknown sentence {lit!r}")
        for e in self.existential:
            if e not in known:
                raise ValueError(f"existential sentence {e!r} is not in the universe")

    @property
    def fragment_count(self) -> int:
        return len(self.fragments)

    @property
    def max_horizon(self) -> int:
        return len(self.fragments) - 1

    def fragment(self, k: int) -> frozenset:
        return self.fragments[min(k, self.max_horizon)]

    def consistent(self, lits: Iterable[str]) -> bool:
        return self.oracle.consistent(lits)

    def derives(self, lits: Iterable[str], phi: str) -> bool:
        return not self.consistent(set(lits) | {negate(phi)})

    def is_persistent(self, phi: str) -> bool:
        return phi in self.existential

    def token(self, n: int, lit: str) -> str | None:
        return self.tokens.get((n, lit))

    def worlds(self) -> list:
        """Worlds consistent with the full theory, as world theories."""
        full = self.fragment(self.max_horizon)
        out = []
        for bits in range(1 << len(self.atoms)):
            lits = frozenset(a if bits >> i & 1 else "~" + a for i, a in enumerate(self.atoms))
            if full <= lits and self.consistent(lits):
                out.append(WorldTheory(self, lits))
        return out

    # JSON -------------------------------------------------------------------
    def to_json(self) -> dict:
        out = {"sentences": list(self.atoms), "existential": list(self.existential),
               "fragments": [sorted(f) for f in self.fragments], "oracle": self.oracle.to_json()}
        if self.tokens:
            out["tokens"] = [{"n": n, "refutes": lit, "token": t}
                             for (n, lit), t in sorted(self.tokens.items())]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ToyTheory":
        atoms = list(obj["sentences"])
        table = obj.get("oracle", {})
        if "models" in table:
            oracle = ModelTableOracle(atoms, table["models"])
        elif "nogoods" in table:
            oracle = NogoodOracle(atoms, table["nogoods"])
        else:
            raise ValueError("oracle table needs 'models' or 'nogoods'")
        tokens = {(int(t["n"]), t["refutes"]): t["token"] for t in obj.get("tokens", [])}
        return cls(atoms, obj.get("fragments", [[]]), list(obj.get("existential", [])),
                   oracle, tokens)


@dataclass(frozen=True)
class WorldTheory:
    toy: ToyTheory
    literals: frozenset

    def __contains__(self, lit: str) -> bool:
        return lit in self.literals

    @property
    def e_part(self) -> frozenset:
        return frozenset(e for e in self.toy.existential if e in self.literals)

    def is_closed(self) -> bool:
        """Every literal derivable from the world's own literals belongs to it."""
        for a in self.toy.atoms:
            for lit in (a, "~" + a):
                if self.toy.derives(self.literals, lit) and lit not in self.literals:
                    return False
        return True


def world_from_e_part(toy: ToyTheory, e_part: Iterable[str]) -> WorldTheory:
    """A world whose E-part is exactly ``e_part`` (plus the full theory)."""
    e_part = set(e_part)
    lits = set(toy.fragment(toy.max_horizon)) | e_part
    lits |= {"~" + e for e in toy.existential if e not in e_part}
    model = toy.oracle.witness(lits)
    if model is None:
        raise InconsistentBase("no world realizes that E-part")
    return WorldTheory(toy, frozenset(a if a in model else "~" + a for a in toy.atoms))


# ---------------------------------------------------------------- modalities

def _check_horizon(toy: ToyTheory, K: int):
    if K < 0 or K > toy.max_horizon:
        raise ValueError(f"horizon {K} outside 0..{toy.max_horizon}")


def possible(w: WorldTheory, phi: str, K: int) -> bool:
    toy = w.toy
    _check_horizon(toy, K)
    base = w.e_part | {phi}
    return all(toy.consistent(toy.fragment(k) | base) for k in range(K + 1))


def necessary(w: WorldTheory, phi: str, K: int) -> bool:
    toy = w.toy
    _check_horizon(toy, K)
    return any(toy.derives(toy.fragment(k) | w.e_part, phi) for k in range(K + 1))


def possibly_necessary(w: WorldTheory, phi: str, K: int) -> bool:
    """Some ``n ≤ K`` has its refutation token for ``~phi`` consistent at every ``k ≤ K``.

    A persistent sentence is its own token: once true it stays provable.
    """
    toy = w.toy
    _check_horizon(toy, K)
    if necessary(w, phi, K):
        return True
    if toy.is_persistent(phi):
        return possible(w, phi, K)
    tokens = [toy.token(n, negate(phi)) for n in range(K + 1)]
    tokens = [t for t in tokens if t is not None]
    if not tokens:
        raise UnsupportedQuery(f"no refutation tokens for {negate(phi)!r}")
    return any(all(toy.consistent(toy.fragment(k) | w.e_part | {t}) for k in range(K + 1))
               for t in tokens)


# ---------------------------------------------------------------- maximal theories

def greedy_pass(toy: ToyTheory, seed: Iterable[str] = (), order: Sequence[str] | None = None) -> list:
    """Starting from ``seed``, add each E-sentence in ``order`` that is consistent
    with the full fragment plus everything accepted so far."""
    base = toy.fragment(toy.max_horizon)
    order = list(toy.existential if order is None else order)
    accepted = list(seed)
    for s in order:
        if s not in accepted and toy.consistent(base | set(accepted) | {s}):
            accepted.append(s)
    return accepted


def build_maximal_existential_theory(toy: ToyTheory, order: Sequence[str] | None = None) -> WorldTheory:
    """Greedy pass over E in ``order``; the result is re-verified maximal."""
    base = toy.fragment(toy.max_horizon)
    if not toy.consistent(base):
        raise InconsistentBase("the full fragment is inconsistent")
    order = list(toy.existential if order is None else order)
    accepted = greedy_pass(toy, (), order)
    for s in order:
        if s not in accepted and toy.consistent(base | set(accepted) | {s}):
            raise AssertionError(f"rejected sentence {s!r} is consistent with the result")
    return world_from_e_part(toy, accepted)


def is_greedy_fixed_point(toy: ToyTheory, e_part: Iterable[str]) -> bool:
    """``e_part`` is consistent and a further greedy pass adds nothing."""
    e_part = list(e_part)
    if not toy.consistent(toy.fragment(toy.max_horizon) | set(e_part)):
        return False
    return set(greedy_pass(toy, e_part)) == set(e_part)


def is_maximal_e_part(toy: ToyTheory, e_part: Iterable[str], K: int | None = None) -> bool:
    """No further E-sentence is consistent with fragment(K) plus ``e_part``."""
    K = toy.max_horizon if K is None else K
    e_part = set(e_part)
    base = toy.fragment(K) | e_part
    if not toy.consistent(base):
        return False
    return all(not toy.consistent(base | {s}) for s in toy.existential if s not in e_part)


@dataclass
class MaximalityReport:
    horizon: int
    violations: list
    mp_pass: bool
    e_part_maximal: bool
    note: str = ("horizon-stamped: the quantifier over all fragments is checked "
                 "only up to the stated horizon")

    @property
    def equivalence_holds(self) -> bool:
        return self.mp_pass == self.e_part_maximal

    def to_json(self) -> dict:
        return {"horizon": self.horizon, "violations": list(self.violations),
                "mp_pass": self.mp_pass, "e_part_maximal": self.e_part_maximal,
                "equivalence_holds": self.equivalence_holds, "note": self.note}


def check_maximality_principle(w: WorldTheory, sentences: Sequence[str] | None, K: int) -> MaximalityReport:
    """Flag each sentence that is possibly necessary yet false at ``w``."""
    toy = w.toy
    sentences = list(toy.existential if sentences is None else sentences)
    violations = [s for s in sentences if s not in w and possibly_necessary(w, s, K)]
    return MaximalityReport(K, violations, not violations, is_maximal_e_part(toy, w.e_part, K))


# ---------------------------------------------------------------- system adapter

class MaximalitySystem:
    """A toy world as a single-world system for schema sampling.

    Statements are modal formulas whose variables are sentence names.
    Modalities are answered by the consistency oracles; only ``<>`` and
    ``[]`` of a literal and ``<>[]`` of a literal are supported.
    """

    def __init__(self, world: WorldTheory, horizon: int | None = None):
        self.world = world
        self.horizon = world.toy.max_horizon if horizon is None else horizon
        self.base = world

    def worlds(self) -> list:
        return [self.world]

    def accessible(self, w, u) -> bool:
        return w == u

    def instantiate(self, f: Formula, assignment) -> Formula:
        return substitute(f, assignment)

    def sample_statements(self) -> list:
        return [var(e) for e in self.world.toy.existential]

    def _literal(self, f: Formula) -> str | None:
        if f.op == "var":
            return f.name
        if f.op == "not" and f.args[0].op == "var":
            return "~" + f.args[0].name
        return None

    def holds(self, w: WorldTheory, f: Formula) -> bool:
        K = self.horizon
        op = f.op
        if op == "var":
            return f.name in w
        if op == "top":
            return True
        if op == "bot":
            return False
        if op == "not":
            return not self.holds(w, f.args[0])
        if op in ("and", "or", "imp", "iff"):
            a, b = (self.holds(w, x) for x in f.args)
            return {"and": a and b, "or": a or b, "imp": (not a) or b, "iff": a == b}[op]
        inner = f.args[0]
        lit = self._literal(inner)
        if op == DIA and lit is not None:
            return possible(w, lit, K)
        if op == BOX and lit is not None:
            return necessary(w, lit, K)
        if op == DIA and inner.op == BOX and self._literal(inner.args[0]) is not None:
            return possibly_necessary(w, self._literal(inner.args[0]), K)
        raise UnsupportedQuery(f"no oracle for {f}")

    def possible(self, w, f: Formula) -> bool:
        return self.holds(w, dia(f))

    def necessary(self, w, f: Formula) -> bool:
        return self.holds(w, box(f))

    def describe_world(self, w) -> str:
        return "{" + ",".join(sorted(w.literals)) + "}"


def load_toy(path: str) -> ToyTheory:
    with open(path, encoding="utf-8") as fh:
        return ToyTheory.from_json(json.load(fh))
