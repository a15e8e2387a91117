from __future__ import annotations

import itertools
import os
import sys

from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from potentialist import syntax  # noqa: E402
from potentialist.maximality import ModelTableOracle, ToyTheory  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# one line per acceptance criterion, repeated in the terminal summary so the
# verdicts survive output capture
ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def formulas(names=("p", "q"), max_leaves: int = 8, constants: bool = True):
    leaves = st.sampled_from([syntax.var(n) for n in names]
                             + ([syntax.TRUE, syntax.FALSE] if constants else []))

    def extend(children):
        unary = st.tuples(st.sampled_from([syntax.NOT, syntax.DIA, syntax.BOX]), children)
        binary = st.tuples(st.sampled_from([syntax.AND, syntax.OR, syntax.IMP, syntax.IFF]),
                           children, children)
        return st.one_of(unary, binary).map(lambda t: syntax.Formula(t[0], t[1:]))

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def all_relations(n: int):
    """Every accessibility relation on ``n`` worlds, as successor bitmasks."""
    full = (1 << n) - 1
    for masks in itertools.product(range(full + 1), repeat=n):
        yield list(masks)


def all_valuations(n: int, names):
    for code in range(1 << (n * len(names))):
        yield {v: {w for w in range(n) if code >> (i * n + w) & 1} for i, v in enumerate(names)}


def random_script(rng, fragment_budget: int = 32, max_batch: int = 4, max_stage: int = 6,
                  grants: int = 12, single: bool = False):
    """Random grants ``(stage, k, batch)``, including ones that must be rejected."""
    out = []
    for _ in range(rng.randint(0, grants)):
        stage = rng.randint(0, max_stage)
        k = rng.randint(1, fragment_budget)
        if single:
            batch = (rng.randint(0, 40),)
        else:
            batch = tuple(rng.randint(0, 9) for _ in range(rng.randint(0, max_batch)))
        out.append((stage, k, batch))
    return out


def random_toy(rng, max_e: int = 5, extra_atoms: int = 2, fragments: int = 3):
    """A toy theory whose oracle is a random nonempty table of allowed assignments.

    Fragments are nested literal sets all true in one designated table row, so
    the full theory is consistent.
    """
    n_e = rng.randint(0, max_e)
    e_atoms = [f"e{i}" for i in range(n_e)]
    atoms = e_atoms + [f"x{i}" for i in range(rng.randint(0, extra_atoms))]
    rows = [frozenset(a for a in atoms if rng.random() < 0.5) for _ in range(rng.randint(1, 8))]
    anchor = rows[0]
    frags, current = [], set()
    for _ in range(rng.randint(1, fragments)):
        for a in atoms:
            if rng.random() < 0.25:
                current.add(a if a in anchor else "~" + a)
        frags.append(sorted(current))
    return ToyTheory(atoms, frags, e_atoms, ModelTableOracle(atoms, rows))
