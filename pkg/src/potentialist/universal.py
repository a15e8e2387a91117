"""A desk-scale universal algorithm over pluggable fragment oracles.

The algorithm runs in stages.  Stage ``n`` succeeds when the oracle's proof
stream contains a certificate, in some theory fragment ``k`` strictly below
every fragment used at earlier stages, of the statement "program ``e`` does
not enumerate batch ``s`` at stage ``n`` as its last successful stage".  The
batch is then released.  Because fragment indices strictly descend, only
finitely many stages can succeed.

The self-reference is explicit: the program id is a parameter of every
target statement rather than the index of a literal self-quoting machine.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

BATCH = "batch"
SINGLE = "single"


@dataclass(frozen=True)
class TargetStatement:
    """``program`` does not enumerate ``batch`` at ``stage`` as its last stage.

    With kind ``single`` the batch has one number, read as "does not add this
    number at this stage as its next and last number".
    """

    program: int
    stage: int
    batch: tuple
    kind: str = BATCH

    def __post_init__(self):
        if self.stage < 0:
            raise ValueError("stage must be non-negative")
        if self.kind == SINGLE and len(self.batch) != 1:
            raise ValueError("a single-number target carries exactly one number")


@dataclass(frozen=True)
class Certificate:
    """A proof of ``target`` found in fragment ``k``."""

    target: TargetStatement
    k: int

    def to_json(self) -> dict:
        return {"program": self.target.program, "stage": self.target.stage,
                "k": self.k, "batch": list(self.target.batch), "kind": self.target.kind}

    @staticmethod
    def from_json(obj: dict, program: int = 0) -> "Certificate":
        kind = obj.get("kind", BATCH)
        batch = obj.get("batch")
        if batch is None and "number" in obj:
            batch = [obj["number"]]
            kind = SINGLE
        return Certificate(TargetStatement(int(obj.get("program", program)), int(obj["stage"]),
                                           tuple(int(x) for x in batch), kind), int(obj["k"]))


class FragmentOracle:
    """Interface for staged theories.

    ``proofs()`` streams certificates in the order proof search finds them.
    ``find_proof`` answers a targeted query within an effort budget and
    ``check`` re-verifies a certificate.  Fragments are monotone: a
    certificate valid at ``k`` is valid at every larger index.
    """

    fragment_count: int = 0

    def proofs(self) -> Iterator[Certificate]:
        raise NotImplementedError

    def find_proof(self, k: int, target: TargetStatement, effort: int) -> Certificate | None:
        for i, cert in enumerate(self.proofs()):
            if i >= effort:
                return None
            if cert.target == target and cert.k <= k:
                return Certificate(target, k)
        return None

    def check(self, cert: Certificate) -> bool:
        raise NotImplementedError


def _stream_key(cert: Certificate) -> tuple:
    b = cert.target.batch
    return (cert.k + len(b) + sum(b), cert.target.stage, cert.k, b, cert.target.program,
            cert.target.kind)


class ScriptedOracle(FragmentOracle):
    """Proves exactly the scripted certificates (and their fragment upgrades).

    The proof stream lists the script ordered by total encoding size
    ``k + len(batch) + sum(batch)``, ties broken lexicographically.
    """

    def __init__(self, script: Iterable[Certificate], fragment_count: int | None = None):
        self.script = sorted(set(script), key=_stream_key)
        top = max((c.k for c in self.script), default=0)
        self.fragment_count = top if fragment_count is None else fragment_count
        if any(c.k < 1 or c.k > self.fragment_count for c in self.script):
            raise ValueError("scripted fragment indices must lie in 1..fragment_count")
        self._best = {}
        for c in self.script:
            self._best[c.target] = min(c.k, self._best.get(c.target, c.k))

    @classmethod
    def from_grants(cls, grants: Iterable[tuple], program: int = 0, kind: str = BATCH,
                    fragment_count: int | None = None) -> "ScriptedOracle":
        """Grants are ``(stage, k, batch)`` triples (a number for kind single)."""
        certs = []
        for stage, k, batch in grants:
            b = (batch,) if kind == SINGLE and isinstance(batch, int) else tuple(batch)
            certs.append(Certificate(TargetStatement(program, stage, b, kind), k))
        return cls(certs, fragment_count)

    def proofs(self) -> Iterator[Certificate]:
        return iter(self.script)

    def check(self, cert: Certificate) -> bool:
        best = self._best.get(cert.target)
        return best is not None and best <= cert.k <= self.fragment_count

    def to_json(self) -> list:
        return [c.to_json() for c in self.script]


class NeverOracle(FragmentOracle):
    """Proof search that never proves a target: an endless stream of proofs
    about unrelated programs, none of which helps the run."""

    def __init__(self, fragment_count: int = 32, foreign_program: int = -1):
        self.fragment_count = fragment_count
        self.foreign = foreign_program

    def proofs(self) -> Iterator[Certificate]:
        for i in itertools.count():
            yield Certificate(TargetStatement(self.foreign, i, ()), self.fragment_count)

    def check(self, cert: Certificate) -> bool:
        return cert.target.program == self.foreign


@dataclass
class StageRecord:
    stage: int
    k: int
    batch: tuple
    certificate: Certificate


@dataclass
class UAState:
    program: int
    kind: str = BATCH
    enumerated: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    halted_at_budget: bool = False
    stream_exhausted: bool = False
    steps: int = 0
    valid: bool = True
    error: str = ""

    @property
    def fragment_bound(self) -> int | None:
        return self.stages[-1].k if self.stages else None

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "kind": self.kind,
            "enumerated": list(self.enumerated),
            "stages": [{"stage": s.stage, "k": s.k, "batch": list(s.batch),
                        "certificate": s.certificate.to_json()} for s in self.stages],
            "halted_at_budget": self.halted_at_budget,
            "stream_exhausted": self.stream_exhausted,
            "steps": self.steps,
            "valid": self.valid,
            **({"error": self.error} if self.error else {}),
        }


def _run(oracle: FragmentOracle, program: int, budget: int, kind: str) -> UAState:
    if budget < 0:
        raise ValueError("budget must be non-negative")
    state = UAState(program, kind)
    limit = None            # every later k must be strictly below this
    try:
        while True:
            stage = len(state.stages)
            found = None
            for cert in oracle.proofs():
                if state.steps >= budget:
                    state.halted_at_budget = True
                    return state
                state.steps += 1
                t = cert.target
                if (t.program == program and t.stage == stage and t.kind == kind
                        and 1 <= cert.k and (limit is None or cert.k < limit)
                        and oracle.check(cert)):
                    found = cert
                    break
            if found is None:
                state.stream_exhausted = True
                return state
            batch = found.target.batch
            state.stages.append(StageRecord(stage, found.k, batch, found))
            state.enumerated.extend(batch)
            limit = found.k
    except Exception as exc:  # oracle failure: keep the partial trace, mark it
        state.valid = False
        state.error = f"{type(exc).__name__}: {exc}"
        return state


def run_universal(oracle: FragmentOracle, program: int = 0, step_budget: int = 10_000) -> UAState:
    """Run the batch-releasing algorithm for at most ``step_budget`` proof inspections."""
    return _run(oracle, program, step_budget, BATCH)


def run_one_at_a_time(oracle: FragmentOracle, program: int = 0, step_budget: int = 10_000) -> UAState:
    """Variant adding a single number at each successful stage."""
    return _run(oracle, program, step_budget, SINGLE)


# ---------------------------------------------------------------- sequence coding

def encode_sequence(seq: Sequence[int]) -> int:
    """Bijection from finite sequences to naturals: [] -> 0, s -> 2**s0 * (2*code(rest) + 1)."""
    code = 0
    for x in reversed(seq):
        if x < 0:
            raise ValueError("entries must be natural numbers")
        code = (2 * code + 1) << x
    return code


def decode_sequence(code: int) -> list:
    if code < 0:
        raise ValueError("codes are natural numbers")
    out = []
    while code:
        x = (code & -code).bit_length() - 1
        out.append(x)
        code = ((code >> x) - 1) // 2
    return out


def derive_concatenated(state: UAState, decode: Callable[[int], Sequence[int]] = decode_sequence) -> list:
    """Concatenate the sequences coded by the numbers a one-at-a-time run added."""
    out: list = []
    for a in state.enumerated:
        out.extend(decode(a))
    return out


# ---------------------------------------------------------------- trace laws

def check_trace(state: UAState, oracle: FragmentOracle) -> list:
    """Violated trace laws (empty when the trace is sound)."""
    problems = []
    ks = [s.k for s in state.stages]
    if any(b >= a for a, b in zip(ks, ks[1:])):
        problems.append("fragment indices do not strictly descend")
    flat = [x for s in state.stages for x in s.batch]
    if flat != list(state.enumerated):
        problems.append("enumerated sequence is not the concatenation of batches")
    if [s.stage for s in state.stages] != list(range(len(state.stages))):
        problems.append("stages are not consecutive from 0")
    for s in state.stages:
        c = s.certificate
        if not oracle.check(c) or c.target.stage != s.stage or c.k != s.k \
                or c.target.batch != s.batch or c.target.program != state.program:
            problems.append(f"certificate of stage {s.stage} does not replay")
    if len(state.stages) > max(oracle.fragment_count, 0):
        problems.append("more successful stages than fragments")
    return problems


# ---------------------------------------------------------------- extension harness

class ExtensionExhausted(ValueError):
    """No fragment index remains below the ones already used."""


def script_extension(current: UAState, target: Sequence[int], base_script: Sequence[Certificate],
                     fragment_count: int) -> list:
    """Certificates that, added to ``base_script``, make a rerun enumerate exactly ``target``.

    ``current`` must be the completed run under ``base_script``.  A single new
    stage releases the missing tail in a fragment below every earlier one and
    no higher than any pending grant for the stage after it, so nothing more
    fires.  The result is verified by re-running.
    """
    target = list(target)
    have = list(current.enumerated)
    if target[:len(have)] != have:
        raise ValueError("target must extend the current enumeration")
    if current.halted_at_budget:
        raise ValueError("extend only runs that finished their proof search")
    if target == have:
        return []
    stage = len(current.stages)
    kind = current.kind
    rest = tuple(target[len(have):])
    if kind == SINGLE:
        if len(rest) != 1:
            raise ValueError("one-at-a-time runs extend by exactly one number")
    candidates = [fragment_count if not current.stages else current.stages[-1].k - 1]
    candidates += [c.k for c in base_script
                   if c.target.program == current.program and c.target.stage == stage + 1
                   and c.target.kind == kind]
    k = min(candidates)
    if k < 1:
        raise ExtensionExhausted("no fragment index left below the earlier stages")
    new = [Certificate(TargetStatement(current.program, stage, rest, kind), k)]
    oracle = ScriptedOracle(list(base_script) + new, fragment_count)
    rerun = _run(oracle, current.program, _verification_budget(oracle), kind)
    if rerun.enumerated != target or rerun.halted_at_budget:
        raise AssertionError("extension script failed verification")
    return new


def script_extension_one_at_a_time(current: UAState, target: Sequence[int],
                                   base_script: Sequence[Certificate], fragment_count: int) -> list:
    """Extend a one-at-a-time run so its derived concatenation equals ``target``."""
    have = derive_concatenated(current)
    target = list(target)
    if target[:len(have)] != have:
        raise ValueError("target must extend the derived sequence")
    if target == have:
        return []
    code = encode_sequence(target[len(have):])
    return script_extension(current, list(current.enumerated) + [code], base_script,
                            fragment_count)


def _verification_budget(oracle: ScriptedOracle) -> int:
    return (len(oracle.script) + 1) * (oracle.fragment_count + 2)


# ---------------------------------------------------------------- JSON

def oracle_from_json(obj, program: int = 0) -> FragmentOracle:
    """Scripts are lists of grants ``{"stage", "k", "batch"}`` (or ``"number"``),
    or ``{"kind": "never"}``, or ``{"kind": "scripted", "fragments": N, "script": [...]}``."""
    if isinstance(obj, dict):
        kind = obj.get("kind", "scripted")
        if kind == "never":
            return NeverOracle(int(obj.get("fragments", 32)))
        script = obj.get("script", [])
        return ScriptedOracle([Certificate.from_json(g, program) for g in script],
                              obj.get("fragments"))
    return ScriptedOracle([Certificate.from_json(g, program) for g in obj])


def load_oracle(path: str, program: int = 0) -> FragmentOracle:
    with open(path, encoding="utf-8") as fh:
        return oracle_from_json(json.load(fh), program)
