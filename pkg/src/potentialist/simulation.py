"""Simulate finite Kripke countermodels inside a system using control statements.

Given a formula outside S5 (or S4), take a cluster (or pre-tree)
countermodel, label its worlds by dial statements built from independent
switches (or by a railyard labeling), and substitute for each variable ``p``
the disjunction of the labels of the worlds where ``p`` holds.  Each system
world then behaves exactly like the model world whose label it satisfies, so
the base world refutes the substitution instance.  The engines verify this
biconditional world by world and subformula by subformula.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import controls, sequences
from .decide import TheoryId, decide, pad_cluster
from .kripke import KripkeModel, PreTree, model_from_masks, uniformize_pretree
from .syntax import Formula, neg, subformulas, substitute, var, variables


class SimulationError(ValueError):
    """Preconditions of a simulation are not met."""


@dataclass
class SimulationReport:
    formula: Formula
    theory: str
    verdict: str                      # "pass", "fail" or "member"
    countermodel: KripkeModel | None = None
    model_world: int | None = None
    assignment: dict = field(default_factory=dict)
    instance: Any = None
    base: Any = None
    pairs: list = field(default_factory=list)     # (system world, model world)
    subformulas_checked: int = 0
    mismatch: tuple | None = None                 # (system world, model world, subformula)
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def trace(self, describe_world=repr, limit: int | None = 20) -> str:
        lines = [f"{self.theory} simulation of {self.formula}: {self.verdict}"]
        if self.reason:
            lines.append(f"  reason: {self.reason}")
        for name, st in sorted(self.assignment.items()):
            lines.append(f"  {name} := {st}")
        shown = self.pairs if limit is None else self.pairs[:limit]
        for w, t in shown:
            lines.append(f"  {describe_world(w)} <-> model world {t}")
        if limit is not None and len(self.pairs) > limit:
            lines.append(f"  ... {len(self.pairs) - limit} more pairs")
        if self.mismatch:
            w, t, g = self.mismatch
            lines.append(f"  MISMATCH at {describe_world(w)} / world {t} on {g}")
        return "\n".join(lines)

    def to_json(self, describe_world=repr) -> dict:
        out = {"theory": self.theory, "formula": str(self.formula), "verdict": self.verdict,
               "subformulas_checked": self.subformulas_checked,
               "pairs_checked": len(self.pairs)}
        if self.countermodel is not None:
            out["countermodel"] = self.countermodel.to_json()
            out["model_world"] = self.model_world
        if self.assignment:
            out["assignment"] = {k: str(v) for k, v in sorted(self.assignment.items())}
        if self.base is not None:
            out["base"] = describe_world(self.base)
        if self.mismatch:
            w, t, g = self.mismatch
            out["mismatch"] = {"world": describe_world(w), "model_world": t, "subformula": str(g)}
        if self.reason:
            out["reason"] = self.reason
        return out


def _base_of(system, base):
    if base is not None:
        return base
    if hasattr(system, "base"):
        return system.base
    return system.worlds()[0]


def _relabel(model: KripkeModel, perm: Sequence[int]) -> KripkeModel:
    """Rename world ``w`` to ``perm[w]``."""
    n = model.n
    masks = [0] * n
    for w in range(n):
        masks[perm[w]] = sum(1 << perm[u] for u in model.succ[w])
    val = {k: [perm[w] for w in v] for k, v in model.valuation.items()}
    return model_from_masks(masks, val)


def _node_of(system, w, labels: Sequence) -> int:
    hits = [t for t, s in enumerate(labels) if system.holds(w, s)]
    if len(hits) != 1:
        raise SimulationError(f"world {w!r} satisfies {len(hits)} labels, expected exactly one")
    return hits[0]


def _check(system, worlds, node_of, model: KripkeModel, f: Formula,
           assignment: Mapping, report: SimulationReport) -> SimulationReport:
    subs = subformulas(f)
    insts = [system.instantiate(g, assignment) for g in subs]
    truth = [model.truth_set(g) for g in subs]
    for w in worlds:
        t = node_of[w]
        report.pairs.append((w, t))
        for g, inst, ts in zip(subs, insts, truth):
            report.subformulas_checked += 1
            if system.holds(w, inst) != bool(ts >> t & 1):
                report.verdict = "fail"
                report.mismatch = (w, t, g)
                report.reason = "truth transfer failed"
                return report
    return report


# ---------------------------------------------------------------- S5

def simulate_s5_refutation(system, switches: Sequence, f: Formula, base=None,
                           check_controls: bool = True) -> SimulationReport:
    """Refute ``f`` at the base world using dial statements from ``switches``."""
    result = decide(TheoryId.S5, f)
    if result.is_member:
        return SimulationReport(f, "S5", "member", reason="formula belongs to S5")
    if result.is_unknown:
        raise SimulationError("S5 decision exceeded its ceiling")
    switches = list(switches)
    m = len(switches)
    if m == 0 or (1 << m) < result.countermodel.n:
        raise SimulationError(f"{m} switches give {1 << m} dial values; "
                              f"the countermodel needs {result.countermodel.n}")
    if check_controls:
        rep = controls.are_independent_switches(system, switches)
        if not rep.passed:
            raise SimulationError(f"switch family is not independent: {rep.witness!r}")
    model, w0 = pad_cluster(result.countermodel, result.world, m)
    dial = controls.switches_to_dial(switches)
    base = _base_of(system, base)
    t0 = _node_of(system, base, dial)
    # a cluster's frame is symmetric: move the failing world onto the base's dial value
    perm = list(range(model.n))
    perm[w0], perm[t0] = t0, w0
    model = _relabel(model, perm)
    names = variables(f)
    _, _, disj = controls._ops_for(dial[0])
    assignment = {p: disj(dial[t] for t in range(model.n) if model.holds(t, p)) for p in names}
    report = SimulationReport(f, "S5", "pass", model, t0, assignment,
                              system.instantiate(f, assignment), base)
    worlds = system.worlds()
    node_of = {w: _node_of(system, w, dial) for w in worlds}
    _check(system, worlds, node_of, model, f, assignment, report)
    if report.passed and system.holds(base, report.instance):
        report.verdict = "fail"
        report.reason = "base world satisfies the instance"
    return report


# ---------------------------------------------------------------- S4

def simulate_s4_refutation(system, t: PreTree, labeling: Mapping[int, Any], f: Formula,
                           base=None, check_controls: bool = True) -> SimulationReport:
    """Refute ``f`` at the base world using a railyard labeling of ``t``.

    ``t`` carries the countermodel's valuation.
    """
    result = decide(TheoryId.S4, f)
    if result.is_member:
        return SimulationReport(f, "S4", "member", reason="formula belongs to S4")
    nodes = list(range(t.n))
    if sorted(labeling) != nodes:
        raise SimulationError("labeling must cover exactly the worlds of the pre-tree")
    base = _base_of(system, base)
    if check_controls:
        rep = controls.is_railyard_labeling(system, t, labeling, base)
        if not rep.passed:
            raise SimulationError(f"not a railyard labeling: {rep.reason} at {rep.witness!r}")
    model = t.to_model()
    labels = [labeling[v] for v in nodes]
    names = variables(f)
    _, _, disj = controls._ops_for(labels[0])
    assignment = {p: disj(labels[v] for v in nodes if model.holds(v, p)) for p in names}
    t0 = _node_of(system, base, labels)
    report = SimulationReport(f, "S4", "pass", model, t0, assignment,
                              system.instantiate(f, assignment), base)
    worlds = system.worlds()
    node_of = {w: _node_of(system, w, labels) for w in worlds}
    _check(system, worlds, node_of, model, f, assignment, report)
    if report.passed and system.holds(base, report.instance):
        report.verdict = "fail"
        report.reason = "base world's model world satisfies the formula"
    return report


def align_pretree(tree: PreTree, world: int, index: int) -> PreTree:
    """Permute the valuation inside the root cluster so ``world`` sits at
    position ``index`` of that cluster (a frame automorphism)."""
    root = list(tree.clusters[tree.root])
    if world not in root:
        raise ValueError("world must lie in the root cluster")
    target = root[index % len(root)]
    swap = {world: target, target: world}
    val = {k: [swap.get(w, w) for w in v] for k, v in tree.valuation.items()}
    return tree.with_valuation(val)


@dataclass
class S4Pipeline:
    tree: PreTree
    encoding: sequences.RailyardEncoding
    system: sequences.SequenceSystem
    report: SimulationReport


def s4_sequence_refutation(f: Formula, base: Sequence[int] = (),
                           check_controls: bool = True) -> S4Pipeline | SimulationReport:
    """Countermodel, uniformize, railyard-encode and simulate over the sequence system.

    With a nonempty ``base`` the decoder skips ``len(base)`` entries, so the
    base world plays the role of the empty sequence.
    """
    result = decide(TheoryId.S4, f)
    if result.is_member:
        return SimulationReport(f, "S4", "member", reason="formula belongs to S4")
    tree, world = result.pretree, result.world
    size = tree.max_cluster()
    degree = max(tree.max_branch(), 1)
    uni, old_to_new, _ = uniformize_pretree(tree, size, degree)
    uni = align_pretree(uni, old_to_new[world], degree % size)
    enc = sequences.RailyardEncoding(uni, offset=len(base))
    system = sequences.SequenceSystem.for_railyard(enc, base)
    report = simulate_s4_refutation(system, uni, enc.labeling(), f, base=sequences.SequenceWorld(base),
                                    check_controls=check_controls)
    return S4Pipeline(uni, enc, system, report)


# ---------------------------------------------------------------- corpus report

@dataclass
class ValidityEntry:
    formula: Formula
    classification: str              # "valid (sampled)", "refuted", "undetermined"
    detail: str = ""
    witness: Any = None


def _default_samples(system) -> list:
    if hasattr(system, "sample_statements"):
        return list(system.sample_statements())
    if isinstance(system, sequences.SequenceSystem):
        S = sequences.SeqStatement
        atoms = [S.sigma(0), S.sigma(1), S.rho(0), S.rho(1), S.first(2, 0)]
        return atoms + [sequences.neg(a) for a in atoms] + [atoms[0] & atoms[2],
                                                          atoms[1] | atoms[3]]
    if isinstance(system, controls.FiniteSystem):
        names = sorted(system.model.valuation)
        return [var(n) for n in names] + [neg(var(n)) for n in names]
    return []


def sample_validity(system, f: Formula, samples: Sequence, trials: int = 40, seed: int = 0):
    """Check random substitution instances of ``f`` at every checked world.

    Returns None when all pass, else ``(world, assignment)``.
    """
    names = variables(f)
    if not samples:
        return None
    rng = random.Random(seed)
    worlds = system.worlds()
    if len(samples) ** len(names) <= trials:
        combos = list(itertools.product(samples, repeat=len(names)))
    else:
        combos = [tuple(rng.choice(samples) for _ in names) for _ in range(trials)]
    for combo in combos:
        assignment = dict(zip(names, combo))
        inst = system.instantiate(f, assignment)
        for w in worlds:
            if not system.holds(w, inst):
                return w, assignment
    return None


def validity_bounds_report(system, corpus: Sequence[Formula], switches: Sequence | None = None,
                           samples: Sequence | None = None, railyards: bool | None = None,
                           trials: int = 40) -> list:
    """Classify each formula as valid (sampled), refuted or undetermined.

    Refutations come from failing sampled instances, from the S5 simulation
    when ``switches`` are supplied, and, over the sequence system, from the
    railyard simulation of an S4 countermodel.
    """
    if samples is None:
        samples = _default_samples(system)
    if railyards is None:
        railyards = isinstance(system, sequences.SequenceSystem)
    out = []
    for f in corpus:
        bad = sample_validity(system, f, samples, trials)
        if bad is not None:
            out.append(ValidityEntry(f, "refuted", "failing sampled instance", bad))
            continue
        in_s4 = decide(TheoryId.S4, f).is_member
        if in_s4:
            out.append(ValidityEntry(f, "valid (sampled)", "in S4; sampled instances hold"))
            continue
        if switches:
            s5 = decide(TheoryId.S5, f)
            if s5.is_non_member:
                rep = simulate_s5_refutation(system, switches, f)
                if rep.passed:
                    out.append(ValidityEntry(f, "refuted", "S5 simulation", rep))
                    continue
        if railyards:
            base = getattr(system, "base", ())
            pipe = s4_sequence_refutation(f, base)
            if isinstance(pipe, S4Pipeline) and pipe.report.passed:
                out.append(ValidityEntry(f, "refuted", "railyard simulation", pipe.report))
                continue
        if samples:
            out.append(ValidityEntry(f, "valid (sampled)", "outside S4; sampled instances hold"))
        else:
            out.append(ValidityEntry(f, "undetermined", "no refutation and no samples"))
    return out
