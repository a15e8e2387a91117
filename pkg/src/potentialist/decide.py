"""Membership in S4, S4.2, S4.3 and S5 with countermodel extraction.

* S5: exhaustive search over single clusters (complete relation) up to the
  small-model bound ``min(2**V, #modal subformulas + 1)``.
* S4: a negation-normal-form tableau with ancestor loop checking.  Open
  tableaux yield pre-tree countermodels.  A brute-force scan over pre-trees
  of at most three worlds runs first so that tiny countermodels come out
  minimal.
* S4.2: brute force over rooted directed preorders, then an exact
  Hintikka-atom elimination that fixes the top cluster.
* S4.3: brute force over finite linear preorders up to the selective
  filtration bound ``#modal subformulas + 1``.

No procedure returns Member unless the search it ran is complete; when a
search would exceed its bound or work ceiling the verdict is
``UnknownBeyondBound``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import kernels
from .kripke import (KripkeModel, PreTree, enumerate_preorders, enumerate_pretrees,
                     frame_class_of, is_directed, model_from_masks, pretree_of)
from .syntax import (AND, BOT, BOX, DIA, IFF, IMP, NOT, OR, TOP, VAR, Formula,
                     neg, subformulas, to_nnf, variables)

MEMBER = "Member"
NON_MEMBER = "NonMember"
UNKNOWN = "UnknownBeyondBound"

#: largest world count any brute-force search will consider
WORLD_CEILING = 64
#: largest number of (frame, valuation) pairs a brute-force search may scan
WORK_CEILING = 1 << 24
#: largest number of Hintikka atoms the elimination procedures will build
ATOM_CEILING = 1 << 14


class TheoryId(enum.Enum):
    S4 = "S4"
    S4_2 = "S4.2"
    S4_3 = "S4.3"
    S5 = "S5"

    @classmethod
    def parse(cls, text: "str | TheoryId") -> "TheoryId":
        if isinstance(text, TheoryId):
            return text
        key = text.strip().upper().replace("_", ".")
        for t in cls:
            if t.value == key:
                return t
        raise ValueError(f"unknown theory {text!r} (choose s4, s4.2, s4.3 or s5)")

    @property
    def frame_properties(self) -> frozenset:
        base = {"reflexive", "transitive"}
        extra = {TheoryId.S4: {"pretree"}, TheoryId.S4_2: {"directed"},
                 TheoryId.S4_3: {"linear_preorder"}, TheoryId.S5: {"equivalence"}}[self]
        return frozenset(base | extra)


@dataclass(frozen=True)
class DecisionResult:
    theory: TheoryId
    formula: Formula
    verdict: str
    countermodel: KripkeModel | None = None
    world: int | None = None
    bound: int | None = None
    pretree: PreTree | None = None
    method: str = ""

    @property
    def is_member(self) -> bool:
        return self.verdict == MEMBER

    @property
    def is_non_member(self) -> bool:
        return self.verdict == NON_MEMBER

    @property
    def is_unknown(self) -> bool:
        return self.verdict == UNKNOWN

    def to_json(self) -> dict:
        out = {"theory": self.theory.value, "formula": str(self.formula),
               "verdict": self.verdict, "method": self.method}
        if self.countermodel is not None:
            out["countermodel"] = self.countermodel.to_json()
            out["world"] = self.world
        if self.bound is not None:
            out["bound"] = self.bound
        return out


# ---------------------------------------------------------------- helpers

def _modal_subformulas(f: Formula) -> list:
    return [g for g in subformulas(f) if g.op in (DIA, BOX)]


def _model_from_code(masks, names, code) -> KripkeModel:
    n = len(masks)
    vm = kernels.decode_valuation(code, len(names), n)
    val = {name: [w for w in range(n) if vm[i] >> w & 1] for i, name in enumerate(names)}
    return model_from_masks(masks, val)


def _first_failure(model: KripkeModel, f: Formula, candidates) -> int:
    ts = model.truth_set(f)
    for w in candidates:
        if not ts >> w & 1:
            return w
    raise AssertionError("countermodel does not refute the formula")


def _work(nvars: int, sizes) -> int:
    return sum(1 << (nvars * n) for n in sizes)


def default_bound(f: Formula) -> int:
    return min(2 ** len(subformulas(f)), WORLD_CEILING)


# ---------------------------------------------------------------- S5

@lru_cache(maxsize=None)
def _cluster_batch(max_size: int) -> kernels.FrameBatch:
    return kernels.FrameBatch([[(1 << n) - 1] * n for n in range(1, max_size + 1)])


def s5_bound(f: Formula) -> int:
    """Cluster size sufficient for any S5 countermodel of ``f``."""
    return min(2 ** len(variables(f)), len(_modal_subformulas(f)) + 1)


def s5_cluster_countermodel(f: Formula, max_size: int | None = None):
    """Least cluster countermodel as ``(model, world)``, or None if valid.

    Returns the string ``UNKNOWN`` when the search would exceed the work
    ceiling, or when ``max_size`` is below the small-model bound and no
    countermodel was found.
    """
    names = variables(f)
    exact = s5_bound(f)
    limit = exact if max_size is None else min(max_size, exact)
    if _work(len(names), range(1, limit + 1)) > WORK_CEILING:
        return UNKNOWN
    prog = kernels.compile_formula(f, names)
    idx, code = kernels.find_countermodel(prog, _cluster_batch(limit))
    if idx < 0:
        return None if limit >= exact else UNKNOWN
    n = idx + 1
    model = _model_from_code([(1 << n) - 1] * n, names, code)
    return model, _first_failure(model, f, range(n))


def pad_cluster(model: KripkeModel, world: int, m: int | None = None) -> tuple:
    """Pad a single-cluster model to ``2**m`` worlds by duplicating worlds.

    With ``m`` omitted the next power of two is used.  Duplicates are
    bisimilar to their originals, so truth is unchanged.  The failing world
    keeps its id.
    """
    n = model.n
    if m is None:
        m = max(0, (n - 1).bit_length())
    size = 1 << m
    if size < n:
        raise ValueError(f"2**{m} worlds cannot hold a cluster of {n}")
    origin = [w % n for w in range(size)]
    val = {k: [w for w in range(size) if origin[w] in v] for k, v in model.valuation.items()}
    return model_from_masks([(1 << size) - 1] * size, val), world


# ---------------------------------------------------------------- S4 tableau

class _Closure:
    """NNF closure of a formula with bit-indexed subformulas."""

    def __init__(self, root: Formula):
        self.root = root
        self.items = subformulas(root)
        self.index = {g: i for i, g in enumerate(self.items)}
        self.implied = [0] * len(self.items)     # alpha consequences
        self.ors = []                             # (i, a, b)
        self.dias = []                            # (i, child)
        self.box_mask = 0
        self.clash_pairs = []
        self.bot_mask = 0
        pos = {}
        negs = {}
        for i, g in enumerate(self.items):
            if g.op == AND:
                self.implied[i] = (1 << self.index[g.args[0]]) | (1 << self.index[g.args[1]])
            elif g.op == BOX:
                self.implied[i] = 1 << self.index[g.args[0]]
                self.box_mask |= 1 << i
            elif g.op == OR:
                self.ors.append((i, self.index[g.args[0]], self.index[g.args[1]]))
            elif g.op == DIA:
                self.dias.append((i, self.index[g.args[0]]))
            elif g.op == VAR:
                pos[g.name] = i
            elif g.op == NOT:
                negs[g.args[0].name] = i
            elif g.op == BOT:
                self.bot_mask = 1 << i
        for name, i in pos.items():
            if name in negs:
                self.clash_pairs.append((1 << i) | (1 << negs[name]))
        self.var_bits = {name: i for name, i in pos.items()}

    def alpha(self, m: int) -> int:
        todo = m
        implied = self.implied
        while todo:
            low = todo & -todo
            todo ^= low
            extra = implied[low.bit_length() - 1] & ~m
            if extra:
                m |= extra
                todo |= extra
        return m

    def clashes(self, m: int) -> bool:
        if m & self.bot_mask:
            return True
        for pair in self.clash_pairs:
            if m & pair == pair:
                return True
        return False

    def saturations(self, m: int) -> list:
        out = []
        seen = set()
        stack = [m]
        while stack:
            cur = self.alpha(stack.pop())
            if self.clashes(cur):
                continue
            for i, a, b in self.ors:
                if cur >> i & 1 and not (cur >> a & 1 or cur >> b & 1):
                    stack.append(cur | (1 << b))
                    stack.append(cur | (1 << a))
                    break
            else:
                if cur not in seen:
                    seen.add(cur)
                    out.append(cur)
        return out


class _Node:
    __slots__ = ("pre", "label", "kids")

    def __init__(self, pre, label, kids):
        self.pre = pre
        self.label = label
        self.kids = kids          # list of _Node or ("back", prelabel)


class _Tableau:
    def __init__(self, root: Formula):
        self.cl = _Closure(root)
        self.unsat: set = set()
        self.steps = 0

    def solve(self, pre: int, path: tuple):
        if pre in self.unsat:
            return None
        cl = self.cl
        path = path + (pre,)
        for label in cl.saturations(pre):
            kids = []
            boxes = label & cl.box_mask
            ok = True
            for i, child in cl.dias:
                if not label >> i & 1 or label >> child & 1:
                    continue
                child_pre = boxes | (1 << child)
                if child_pre in path:
                    kids.append(("back", child_pre))
                    continue
                self.steps += 1
                sub = self.solve(child_pre, path)
                if sub is None:
                    ok = False
                    break
                kids.append(sub)
            if ok:
                return _Node(pre, label, kids)
        self.unsat.add(pre)
        return None


def _tableau_model(tab: _Tableau, node: _Node) -> KripkeModel:
    labels, edges = [], []

    def visit(nd, path_ids):
        wid = len(labels)
        labels.append(nd.label)
        path_ids = path_ids + ((nd.pre, wid),)
        for kid in nd.kids:
            if isinstance(kid, tuple):
                target = next(w for p, w in path_ids if p == kid[1])
                edges.append((wid, target))
            else:
                edges.append((wid, visit(kid, path_ids)))
        return wid

    visit(node, ())
    n = len(labels)
    reach = [(1 << w) for w in range(n)]
    for a, b in edges:
        reach[a] |= 1 << b
    changed = True
    while changed:
        changed = False
        for w in range(n):
            acc = reach[w]
            for u in range(n):
                if acc >> u & 1:
                    acc |= reach[u]
            if acc != reach[w]:
                reach[w] = acc
                changed = True
    val = {name: [w for w in range(n) if labels[w] >> bit & 1]
           for name, bit in tab.cl.var_bits.items()}
    return model_from_masks(reach, val)


def tableau_countermodel(f: Formula):
    """Run the tableau on ``~f``; return ``(model, 0)`` or None if ``f`` is valid."""
    tab = _Tableau(to_nnf(neg(f)))
    root_bit = 1 << tab.cl.index[tab.cl.root]
    node = tab.solve(root_bit, ())
    if node is None:
        return None
    model = _tableau_model(tab, node)
    # variables of f absent from the closure stay false everywhere
    if model.eval(0, f):
        raise AssertionError(f"tableau model fails to refute {f}")
    return model, 0


def canonical_pretree(model: KripkeModel, world: int) -> tuple:
    """Renumber a pre-tree model cluster by cluster (breadth first).

    Returns ``(PreTree, new_world_id)``; ``world`` must lie in the root cluster.
    """
    tree = pretree_of(model)
    if tree is None:
        raise ValueError("model is not a pre-tree")
    order, queue = [], [tree.root]
    while queue:
        c = queue.pop(0)
        order.append(c)
        queue.extend(tree.children(c))
    new_id, clusters, parent_of = {}, [], {}
    for c in order:
        members = sorted(tree.clusters[c], key=lambda w: (w != world, w))
        ids = []
        for w in members:
            new_id[w] = len(new_id)
            ids.append(new_id[w])
        clusters.append(tuple(ids))
        parent_of[c] = tree.parent[c]
    pos = {c: i for i, c in enumerate(order)}
    parent = [None if parent_of[c] is None else pos[parent_of[c]] for c in order]
    val = {k: [new_id[w] for w in v] for k, v in model.valuation.items()}
    return PreTree.from_parts(clusters, parent, val), new_id[world]


@lru_cache(maxsize=None)
def _small_pretree_batch(max_worlds: int):
    frames, targets = [], []
    trees = list(enumerate_pretrees(max_worlds, max_worlds, max_worlds, max_worlds))
    for t in trees:
        frames.append(t.to_model().succ_masks())
        targets.append(sum(1 << w for w in t.clusters[t.root]))
    return trees, kernels.FrameBatch(frames, targets)


#: pre-trees up to this many worlds are scanned before the tableau runs
S4_PRESEARCH_WORLDS = 3


def _s4_search(f: Formula, presearch: int | None):
    names = variables(f)
    limit = S4_PRESEARCH_WORLDS if presearch is None else presearch
    if limit > 0 and _work(len(names), range(1, limit + 1)) * 4 <= WORK_CEILING:
        trees, batch = _small_pretree_batch(limit)
        prog = kernels.compile_formula(f, names)
        idx, code = kernels.find_countermodel(prog, batch)
        if idx >= 0:
            tree = trees[idx]
            model = _model_from_code(batch.frames[idx], names, code)
            w = _first_failure(model, f, tree.clusters[tree.root])
            return tree.with_valuation(model.valuation), w, model
    found = tableau_countermodel(f)
    if found is None:
        return None
    tree, w = canonical_pretree(*found)
    return tree, w, tree.to_model()


def s4_pretree_countermodel(f: Formula, presearch: int | None = None):
    """Pre-tree countermodel ``(PreTree, root_world)`` or None if ``f`` is in S4.

    ``presearch`` caps the size of pre-trees scanned exhaustively before the
    tableau runs (0 disables the scan).
    """
    found = _s4_search(f, presearch)
    return None if found is None else found[:2]


# ---------------------------------------------------------------- Hintikka atoms

class _Atoms:
    """Hintikka atoms over the variables and modal subformulas of ``f``.

    An atom fixes the truth of every variable and every modal subformula and
    respects reflexivity: []g true forces g, and g true forces <>g.
    """

    def __init__(self, f: Formula):
        self.f = f
        self.names = variables(f)
        self.modal = _modal_subformulas(f)
        self.subs = subformulas(f)
        self.sidx = {g: i for i, g in enumerate(self.subs)}
        k = len(self.names) + len(self.modal)
        if (1 << k) > ATOM_CEILING:
            raise OverflowError("too many atoms")
        self.atoms = []      # list of (truth tuple over subs)
        for bits in range(1 << k):
            tv = self._evaluate(bits)
            if tv is not None:
                self.atoms.append(tv)
        self.box_sig = [self._sig(a) for a in self.atoms]

    def _evaluate(self, bits: int):
        nv = len(self.names)
        fixed = {}
        for i, name in enumerate(self.names):
            fixed[name] = bool(bits >> i & 1)
        for j, g in enumerate(self.modal):
            fixed[g] = bool(bits >> (nv + j) & 1)
        tv = [False] * len(self.subs)
        for i, g in enumerate(self.subs):
            if g.op == VAR:
                v = fixed[g.name]
            elif g.op in (DIA, BOX):
                v = fixed[g]
            else:
                v = _bool(g, [tv[self.sidx[a]] for a in g.args])
            tv[i] = v
        for g in self.modal:
            inner = tv[self.sidx[g.args[0]]]
            here = tv[self.sidx[g]]
            if g.op == BOX and here and not inner:
                return None
            if g.op == DIA and inner and not here:
                return None
        return tuple(tv)

    def _sig(self, atom) -> frozenset:
        out = set()
        for g in self.modal:
            t = atom[self.sidx[g]]
            if (g.op == BOX and t) or (g.op == DIA and not t):
                out.add(g)
        return frozenset(out)

    def value(self, a: int, g: Formula) -> bool:
        return self.atoms[a][self.sidx[g]]

    def demands(self, a: int) -> list:
        """(g, wanted truth) witnesses required by atom ``a``."""
        out = []
        for g in self.modal:
            t = self.atoms[a][self.sidx[g]]
            if g.op == DIA and t:
                out.append((self.sidx[g.args[0]], True))
            elif g.op == BOX and not t:
                out.append((self.sidx[g.args[0]], False))
        return out

    def eliminate(self, alive: set) -> set:
        alive = set(alive)
        changed = True
        while changed:
            changed = False
            for a in sorted(alive):
                sig = self.box_sig[a]
                for gi, want in self.demands(a):
                    if not any(self.atoms[b][gi] == want and sig <= self.box_sig[b]
                               for b in alive):
                        alive.discard(a)
                        changed = True
                        break
        return alive

    def refuting(self, alive: set) -> list:
        root = self.sidx[self.f]
        return sorted(a for a in alive if not self.atoms[a][root])

    def model(self, alive: set, world_atom: int) -> tuple:
        """Generated submodel from ``world_atom`` of the atom model on ``alive``."""
        reach = [b for b in sorted(alive) if self.box_sig[world_atom] <= self.box_sig[b]]
        order = [world_atom] + [b for b in reach if b != world_atom]
        n = len(order)
        masks = [sum(1 << j for j, b in enumerate(order)
                     if self.box_sig[a] <= self.box_sig[b]) for a in order]
        val = {name: [i for i, a in enumerate(order) if self.value(a, Formula(VAR, (), name))]
               for name in self.names}
        return model_from_masks(masks, val), 0


def _bool(g: Formula, vals: list) -> bool:
    op = g.op
    if op == TOP:
        return True
    if op == BOT:
        return False
    if op == NOT:
        return not vals[0]
    if op == AND:
        return vals[0] and vals[1]
    if op == OR:
        return vals[0] or vals[1]
    if op == IMP:
        return (not vals[0]) or vals[1]
    if op == IFF:
        return vals[0] == vals[1]
    raise ValueError(op)


def s4_valid_by_elimination(f: Formula) -> bool:
    """Independent S4 decision by Hintikka-atom elimination."""
    at = _Atoms(f)
    return not at.refuting(at.eliminate(set(range(len(at.atoms)))))


def s42_countermodel_by_elimination(f: Formula):
    """Exact S4.2 search.  Returns ``(model, world)`` or None if valid.

    For every candidate top-cluster signature the atoms allowed below it are
    those whose signature it extends; the top cluster itself must be closed
    under its own witness demands.
    """
    at = _Atoms(f)
    everyone = set(range(len(at.atoms)))
    for sig in sorted(set(at.box_sig), key=lambda s: sorted(map(str, s))):
        top = at.eliminate({a for a in everyone if at.box_sig[a] == sig})
        if not top:
            continue
        allowed = {a for a in everyone if at.box_sig[a] <= sig}
        alive = at.eliminate(allowed)
        bad = at.refuting(alive)
        if bad:
            model, w = at.model(alive, bad[0])
            return model, w
    return None


# ---------------------------------------------------------------- S4.2 / S4.3 brute force

@lru_cache(maxsize=None)
def _directed_batch(max_worlds: int):
    frames, targets = [], []
    for n in range(1, max_worlds + 1):
        for masks in enumerate_preorders(n):
            full = (1 << n) - 1
            roots = sum(1 << w for w in range(n) if masks[w] == full)
            if roots and is_directed(model_from_masks(masks)):
                frames.append(masks)
                targets.append(roots)
    return kernels.FrameBatch(frames, targets)


def _compositions(n: int):
    for cuts in itertools.product((0, 1), repeat=n - 1):
        sizes, run = [], 1
        for c in cuts:
            if c:
                sizes.append(run)
                run = 1
            else:
                run += 1
        sizes.append(run)
        yield tuple(sizes)


def linear_preorder_masks(sizes) -> tuple:
    """Successor masks of the chain of clusters with the given sizes."""
    masks, start = [], 0
    n = sum(sizes)
    for s in sizes:
        up = ((1 << n) - 1) & ~((1 << start) - 1)
        masks.extend([up] * s)
        start += s
    return tuple(masks)


@lru_cache(maxsize=None)
def _linear_batch(n: int):
    frames, targets = [], []
    for sizes in sorted(_compositions(n)):
        frames.append(linear_preorder_masks(sizes))
        targets.append((1 << sizes[0]) - 1)
    return kernels.FrameBatch(frames, targets)


def s43_bound(f: Formula) -> int:
    """Worlds sufficient for any linear countermodel (selective filtration)."""
    return len(_modal_subformulas(f)) + 1


# ---------------------------------------------------------------- decide

def decide(theory, f: Formula, bound: int | None = None) -> DecisionResult:
    theory = TheoryId.parse(theory)
    if bound is not None and bound < 1:
        raise ValueError("bound must be at least 1")
    if bound is None:
        bound = default_bound(f)
    bound = min(bound, WORLD_CEILING)
    if theory is TheoryId.S5:
        return _decide_s5(f, bound)
    if theory is TheoryId.S4:
        return _decide_s4(f)
    if theory is TheoryId.S4_2:
        return _decide_s42(f, bound)
    return _decide_s43(f, bound)


def _decide_s5(f: Formula, bound: int) -> DecisionResult:
    found = s5_cluster_countermodel(f, bound)
    if found == UNKNOWN:
        return DecisionResult(TheoryId.S5, f, UNKNOWN, bound=bound, method="cluster-search")
    if found is None:
        return DecisionResult(TheoryId.S5, f, MEMBER, method="cluster-search")
    model, w = found
    return DecisionResult(TheoryId.S5, f, NON_MEMBER, model, w, method="cluster-search")


def _decide_s4(f: Formula) -> DecisionResult:
    found = _s4_search(f, None)
    if found is None:
        return DecisionResult(TheoryId.S4, f, MEMBER, method="tableau")
    tree, w, model = found
    return DecisionResult(TheoryId.S4, f, NON_MEMBER, model, w, pretree=tree,
                          method="tableau")


#: directed preorders up to this many worlds are scanned exhaustively
S42_BRUTE_WORLDS = 4


def _decide_s42(f: Formula, bound: int) -> DecisionResult:
    names = variables(f)
    limit = min(bound, S42_BRUTE_WORLDS)
    if _work(len(names), range(1, limit + 1)) * 16 <= WORK_CEILING:
        batch = _directed_batch(limit)
        prog = kernels.compile_formula(f, names)
        idx, code = kernels.find_countermodel(prog, batch)
        if idx >= 0:
            model = _model_from_code(batch.frames[idx], names, code)
            roots = [w for w in range(model.n) if batch.targets[idx] >> w & 1]
            return DecisionResult(TheoryId.S4_2, f, NON_MEMBER, model,
                                  _first_failure(model, f, roots), method="directed-search")
    try:
        found = s42_countermodel_by_elimination(f)
    except OverflowError:
        return DecisionResult(TheoryId.S4_2, f, UNKNOWN, bound=limit, method="directed-search")
    if found is None:
        return DecisionResult(TheoryId.S4_2, f, MEMBER, method="atom-elimination")
    model, w = found
    return DecisionResult(TheoryId.S4_2, f, NON_MEMBER, model, w, method="atom-elimination")


def _decide_s43(f: Formula, bound: int) -> DecisionResult:
    names = variables(f)
    exact = s43_bound(f)
    limit = min(bound, exact)
    prog = kernels.compile_formula(f, names)
    spent = 0
    for n in range(1, limit + 1):
        batch = _linear_batch(n)
        spent += len(batch) << (len(names) * n)
        if spent > WORK_CEILING:
            return DecisionResult(TheoryId.S4_3, f, UNKNOWN, bound=n - 1, method="linear-search")
        idx, code = kernels.find_countermodel(prog, batch)
        if idx >= 0:
            model = _model_from_code(batch.frames[idx], names, code)
            roots = [w for w in range(model.n) if batch.targets[idx] >> w & 1]
            return DecisionResult(TheoryId.S4_3, f, NON_MEMBER, model,
                                  _first_failure(model, f, roots), method="linear-search")
    if limit < exact:
        return DecisionResult(TheoryId.S4_3, f, UNKNOWN, bound=limit, method="linear-search")
    return DecisionResult(TheoryId.S4_3, f, MEMBER, method="linear-search")


def verify_countermodel(result: DecisionResult) -> bool:
    """Countermodel refutes the formula and lies in the theory's frame class."""
    if not result.is_non_member:
        return False
    m = result.countermodel
    props = frame_class_of(m).properties
    return not m.eval(result.world, result.formula) and result.theory.frame_properties <= props
