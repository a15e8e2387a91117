"""Finite Kripke models, frame-class recognition and pre-trees.

Worlds are dense integers ``0..n-1``.  Accessibility is stored as successor
sets; the bitset view (``succ_masks``) feeds the evaluation kernels.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from . import kernels
from .syntax import Formula, variables

FRAME_PROPERTIES = ("reflexive", "transitive", "directed", "linear_preorder",
                    "equivalence", "pretree")


class KripkeModel:
    """Finite Kripke model.  Immutable after construction."""

    __slots__ = ("n", "succ", "valuation", "potentialist", "_masks")

    def __init__(self, n: int, access: Iterable[tuple[int, int]] = (),
                 valuation: Mapping[str, Iterable[int]] | None = None,
                 potentialist: bool = False, *, succ: Sequence[Iterable[int]] | None = None):
        if n < 1:
            raise ValueError("a model needs at least one world")
        if succ is not None:
            if len(succ) != n:
                raise ValueError("successor list length must equal the world count")
            succ = [set(ss) for ss in succ]
        else:
            succ = [set() for _ in range(n)]
        for i, j in access:
            if not 0 <= i < n:
                raise ValueError(f"edge {i}->{j} leaves the world set")
            succ[i].add(j)
        for w, ss in enumerate(succ):
            for u in ss:
                if not 0 <= u < n:
                    raise ValueError(f"edge {w}->{u} leaves the world set")
        self.n = n
        self.succ = tuple(frozenset(s) for s in succ)
        val = {}
        for name, ws in (valuation or {}).items():
            ws = frozenset(ws)
            if any(not 0 <= w < n for w in ws):
                raise ValueError(f"valuation of {name!r} names an unknown world")
            val[name] = ws
        self.valuation = val
        self.potentialist = potentialist
        self._masks = tuple(sum(1 << u for u in s) for s in self.succ)
        if potentialist and not (is_reflexive(self) and is_transitive(self)):
            raise ValueError("a potentialist frame must be reflexive and transitive")

    # -- basic access -------------------------------------------------------
    @property
    def worlds(self) -> range:
        return range(self.n)

    def accessible(self, w: int, u: int) -> bool:
        return u in self.succ[w]

    def succ_masks(self) -> tuple:
        return self._masks

    def var_mask(self, name: str) -> int:
        return sum(1 << w for w in self.valuation.get(name, ()))

    def holds(self, w: int, name: str) -> bool:
        return w in self.valuation.get(name, ())

    def edges(self) -> list:
        return [(w, u) for w in range(self.n) for u in sorted(self.succ[w])]

    def truth_set(self, f: Formula) -> int:
        names = variables(f)
        prog = kernels.compile_formula(f, names)
        return kernels.truth_set(prog, [self.var_mask(v) for v in names], self._masks)

    def eval(self, w: int, f: Formula) -> bool:
        if not 0 <= w < self.n:
            raise ValueError(f"unknown world {w}")
        return bool(self.truth_set(f) >> w & 1)

    def with_valuation(self, valuation: Mapping[str, Iterable[int]]) -> "KripkeModel":
        return KripkeModel(self.n, (), valuation, self.potentialist, succ=self.succ)

    def __eq__(self, other):
        return (isinstance(other, KripkeModel) and self.n == other.n and self.succ == other.succ
                and _norm_val(self.valuation) == _norm_val(other.valuation))

    def __hash__(self):
        return hash((self.n, self.succ, tuple(sorted(_norm_val(self.valuation).items()))))

    def __repr__(self):
        return f"KripkeModel(n={self.n}, edges={self.edges()}, valuation={_norm_val(self.valuation)})"

    # -- serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "worlds": self.n,
            "access": [[w, u] for w, u in self.edges()],
            "valuation": {k: sorted(v) for k, v in sorted(self.valuation.items())},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "KripkeModel":
        return cls(int(obj["worlds"]), [tuple(e) for e in obj.get("access", [])],
                   obj.get("valuation", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _norm_val(val: Mapping[str, frozenset]) -> dict:
    return {k: v for k, v in val.items() if v}


def evaluate(model: KripkeModel, world: int, f: Formula) -> bool:
    """Truth of ``f`` at ``world`` under the plain Kripke semantics."""
    return model.eval(world, f)


# ------------------------------------------------------------ frame classes

def reach_masks(model: KripkeModel) -> list:
    """Reflexive-transitive closure as successor masks."""
    reach = [m | (1 << w) for w, m in enumerate(model.succ_masks())]
    changed = True
    while changed:
        changed = False
        for w in range(model.n):
            acc = reach[w]
            m = acc
            while m:
                low = m & -m
                acc |= reach[low.bit_length() - 1]
                m ^= low
            if acc != reach[w]:
                reach[w] = acc
                changed = True
    return reach


def is_reflexive(model: KripkeModel) -> bool:
    return all(w in model.succ[w] for w in range(model.n))


def is_transitive(model: KripkeModel) -> bool:
    masks = model.succ_masks()
    for w in range(model.n):
        for u in model.succ[w]:
            if masks[u] & ~masks[w]:
                return False
    return True


def is_directed(model: KripkeModel) -> bool:
    """Every two worlds have a common successor."""
    masks = model.succ_masks()
    return all(masks[u] & masks[v] for u in range(model.n) for v in range(u, model.n))


def is_connected(model: KripkeModel) -> bool:
    return all(model.accessible(u, v) or model.accessible(v, u)
               for u in range(model.n) for v in range(u + 1, model.n))


def is_symmetric(model: KripkeModel) -> bool:
    return all(w in model.succ[u] for w in range(model.n) for u in model.succ[w])


def clusters_of(model: KripkeModel) -> list:
    """Strongly connected components, ordered by least member."""
    reach = reach_masks(model)
    seen = 0
    out = []
    for w in range(model.n):
        if seen >> w & 1:
            continue
        members = [u for u in range(model.n) if reach[w] >> u & 1 and reach[u] >> w & 1]
        for u in members:
            seen |= 1 << u
        out.append(members)
    return out


def pretree_of(model: KripkeModel) -> "PreTree | None":
    """Pre-tree decomposition when the frame is one, else None."""
    if not (is_reflexive(model) and is_transitive(model)):
        return None
    comps = clusters_of(model)
    cid = {}
    for i, c in enumerate(comps):
        for w in c:
            cid[w] = i
    masks = model.succ_masks()
    # strict predecessors of each cluster
    preds = [set() for _ in comps]
    for i, c in enumerate(comps):
        rep = c[0]
        for j, d in enumerate(comps):
            if i != j and masks[d[0]] >> rep & 1:
                preds[i].add(j)
    roots = [i for i in range(len(comps)) if not preds[i]]
    if len(roots) != 1:
        return None
    parent: list = [None] * len(comps)
    for i in range(len(comps)):
        if i == roots[0]:
            continue
        # strict predecessors must form a chain; the parent is the lowest one
        ps = sorted(preds[i], key=lambda j: -len(preds[j]))
        for x, y in zip(ps, ps[1:]):
            if not masks[comps[y][0]] >> comps[x][0] & 1:
                return None
        parent[i] = ps[0]
    return PreTree.from_parts(comps, parent, model.valuation)


@dataclass(frozen=True)
class FrameClass:
    properties: frozenset
    pretree: "PreTree | None" = None

    def __contains__(self, item) -> bool:
        return item in self.properties

    def __iter__(self):
        return iter(sorted(self.properties))

    def __le__(self, other):
        return self.properties <= set(other)


def frame_class_of(model: KripkeModel) -> FrameClass:
    props = set()
    refl = is_reflexive(model)
    trans = is_transitive(model)
    if refl:
        props.add("reflexive")
    if trans:
        props.add("transitive")
    if is_directed(model):
        props.add("directed")
    if refl and trans and is_connected(model):
        props.add("linear_preorder")
    if refl and trans and is_symmetric(model):
        props.add("equivalence")
    tree = pretree_of(model)
    if tree is not None:
        props.add("pretree")
    return FrameClass(frozenset(props), tree)


def generated_submodel(model: KripkeModel, w: int) -> tuple:
    """Submodel on worlds reachable from ``w``; returns (model, old->new map)."""
    reach = reach_masks(model)[w]
    keep = [u for u in range(model.n) if reach >> u & 1]
    idx = {u: i for i, u in enumerate(keep)}
    succ = [[idx[v] for v in model.succ[u]] for u in keep]
    val = {k: [idx[u] for u in v if u in idx] for k, v in model.valuation.items()}
    return KripkeModel(len(keep), (), val, succ=succ), idx


# ------------------------------------------------------------ pre-trees

@dataclass(frozen=True)
class PreTree:
    """Tree of clusters.  Worlds are numbered cluster by cluster."""

    clusters: tuple           # tuple of tuples of world ids, indexed by cluster id
    parent: tuple             # parent cluster id, None for the root
    valuation: Mapping = field(default_factory=dict, compare=False)
    root: int = 0

    @classmethod
    def from_parts(cls, clusters, parent, valuation=None) -> "PreTree":
        parent = tuple(parent)
        roots = [i for i, p in enumerate(parent) if p is None]
        if len(roots) != 1:
            raise ValueError("a pre-tree has exactly one root cluster")
        seen = sorted(w for c in clusters for w in c)
        if seen != list(range(len(seen))):
            raise ValueError("cluster membership must partition 0..n-1")
        tree = cls(tuple(tuple(c) for c in clusters), parent,
                   {k: frozenset(v) for k, v in (valuation or {}).items()}, roots[0])
        tree._check_acyclic()
        return tree

    def _check_acyclic(self):
        for c in range(len(self.clusters)):
            steps, x = 0, c
            while self.parent[x] is not None:
                x = self.parent[x]
                steps += 1
                if steps > len(self.clusters):
                    raise ValueError("cluster parent links contain a cycle")

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.clusters)

    def children(self, c: int) -> list:
        return [i for i, p in enumerate(self.parent) if p == c]

    def cluster_of(self, w: int) -> int:
        for i, c in enumerate(self.clusters):
            if w in c:
                return i
        raise ValueError(f"unknown world {w}")

    def ancestors(self, c: int) -> list:
        out = []
        while self.parent[c] is not None:
            c = self.parent[c]
            out.append(c)
        return out

    def leq(self, c: int, d: int) -> bool:
        """Tree order on clusters: ``c`` is ``d`` or an ancestor of it."""
        return c == d or c in self.ancestors(d)

    def depth(self) -> int:
        """Number of cluster levels."""
        return 1 + max(len(self.ancestors(c)) for c in range(len(self.clusters)))

    def max_branch(self) -> int:
        return max(len(self.children(c)) for c in range(len(self.clusters)))

    def max_cluster(self) -> int:
        return max(len(c) for c in self.clusters)

    def uniform_shape(self) -> tuple | None:
        """``(cluster_size, branch_degree)`` if uniform, else None."""
        sizes = {len(c) for c in self.clusters}
        degrees = {len(self.children(c)) for c in range(len(self.clusters))} - {0}
        if len(sizes) != 1 or len(degrees) > 1:
            return None
        return sizes.pop(), (degrees.pop() if degrees else 1)

    def to_model(self) -> KripkeModel:
        succ = [set() for _ in range(self.n)]
        for c, members in enumerate(self.clusters):
            below = [d for d in range(len(self.clusters)) if self.leq(c, d)]
            targets = [u for d in below for u in self.clusters[d]]
            for w in members:
                succ[w].update(targets)
        return KripkeModel(self.n, (), self.valuation, potentialist=True, succ=succ)

    def with_valuation(self, valuation) -> "PreTree":
        return PreTree.from_parts(self.clusters, self.parent, valuation)

    def shape_key(self):
        """Canonical unlabeled shape: (cluster size, sorted child shapes)."""
        def key(c):
            return (len(self.clusters[c]), tuple(sorted(key(d) for d in self.children(c))))
        return key(self.root)


def pretree_from_shape(shape, valuation=None) -> PreTree:
    """Build a pre-tree from a nested ``(cluster_size, children)`` shape.

    Clusters are numbered breadth-first and worlds cluster by cluster.
    """
    clusters, parent = [], []
    queue = [(shape, None)]
    next_world = 0
    while queue:
        (size, kids), par = queue.pop(0)
        cid = len(clusters)
        clusters.append(tuple(range(next_world, next_world + size)))
        parent.append(par)
        next_world += size
        for k in kids:
            queue.append((k, cid))
    return PreTree.from_parts(clusters, parent, valuation)


def uniformize_pretree(t: PreTree, cluster_size: int, branch_degree: int) -> tuple:
    """Duplicate worlds and subtrees until every cluster has ``cluster_size``
    worlds and every non-leaf cluster has ``branch_degree`` children.

    Returns ``(tree, old_to_new, new_to_old)``.  Every new world is a copy of
    ``new_to_old[w]`` and the copy relation is a bisimulation.
    """
    if cluster_size < t.max_cluster():
        raise ValueError(f"cluster_size {cluster_size} below existing maximum {t.max_cluster()}")
    if branch_degree < t.max_branch():
        raise ValueError(f"branch_degree {branch_degree} below existing maximum {t.max_branch()}")
    if branch_degree < 1:
        raise ValueError("branch_degree must be at least 1")
    clusters, parent, origin = [], [], []
    queue = [(t.root, None)]
    while queue:
        old, par = queue.pop(0)
        cid = len(clusters)
        members = t.clusters[old]
        start = len(origin)
        clusters.append(tuple(range(start, start + cluster_size)))
        parent.append(par)
        origin.extend(members[j % len(members)] for j in range(cluster_size))
        kids = t.children(old)
        if kids:
            for i in range(branch_degree):
                queue.append((kids[i % len(kids)], cid))
    valuation = {name: [w for w, o in enumerate(origin) if o in ws]
                 for name, ws in t.valuation.items()}
    tree = PreTree.from_parts(clusters, parent, valuation)
    old_to_new = {}
    for w, o in enumerate(origin):
        old_to_new.setdefault(o, w)
    return tree, old_to_new, tuple(origin)


def _tree_shapes(depth: int, branch: int, cluster: int, worlds: int | None = None) -> list:
    if depth < 1 or (worlds is not None and worlds < 1):
        return []
    smaller = _tree_shapes(depth - 1, branch, cluster, None if worlds is None else worlds - 1)
    out = []
    for size in range(1, cluster + 1):
        if worlds is not None and size > worlds:
            break
        for k in range(0, branch + 1):
            for kids in itertools.combinations_with_replacement(smaller, k):
                shape = (size, tuple(kids))
                if worlds is None or _shape_size(shape) <= worlds:
                    out.append(shape)
    return out


def enumerate_pretrees(max_depth: int, max_branch: int, max_cluster: int,
                       max_worlds: int | None = None) -> Iterator[PreTree]:
    """Every pre-tree within the bounds, once per isomorphism class.

    Shapes are ordered by world count, then by their canonical nested key.
    ``max_worlds`` optionally caps the total number of worlds.
    """
    if min(max_depth, max_branch, max_cluster) < 1:
        raise ValueError("bounds must be at least 1")
    shapes = _tree_shapes(max_depth, max_branch, max_cluster, max_worlds)
    shapes.sort(key=lambda s: (_shape_size(s), s))
    for s in shapes:
        yield pretree_from_shape(s)


def _shape_size(shape) -> int:
    return shape[0] + sum(_shape_size(k) for k in shape[1])


# ------------------------------------------------------------ canonical forms

def canonical_encoding(succ_masks: Sequence[int]) -> tuple:
    """Lexicographically least adjacency bit string over all relabelings."""
    n = len(succ_masks)
    best = None
    for perm in itertools.permutations(range(n)):
        # perm[i] = old world placed at position i
        code = tuple(int(succ_masks[perm[i]] >> perm[j] & 1)
                     for i in range(n) for j in range(n))
        if best is None or code < best:
            best = code
    return best


def enumerate_preorders(n: int) -> list:
    """Isomorphism classes of preorders on exactly ``n`` worlds (n <= 5).

    Each class is returned as a tuple of successor masks.  Built by adding
    one world at a time to every class on ``n-1`` worlds.
    """
    if n < 1:
        return []
    if n > 5:
        raise ValueError("desk-scale enumeration supports at most 5 worlds")
    classes = {canonical_encoding([1]): (1,)}
    for size in range(2, n + 1):
        nxt = {}
        new = size - 1
        for base in classes.values():
            for out_set in range(1 << new):
                for in_set in range(1 << new):
                    masks = [m | ((in_set >> w & 1) << new) for w, m in enumerate(base)]
                    masks.append(out_set | (1 << new))
                    if not _is_preorder(masks):
                        continue
                    key = canonical_encoding(masks)
                    if key not in nxt:
                        nxt[key] = _decode(key, size)
        classes = nxt
    return sorted(classes.values())


def _decode(code: tuple, n: int) -> tuple:
    return tuple(sum(code[i * n + j] << j for j in range(n)) for i in range(n))


def _is_preorder(masks: Sequence[int]) -> bool:
    n = len(masks)
    for w in range(n):
        if not masks[w] >> w & 1:
            return False
        m = masks[w]
        for u in range(n):
            if m >> u & 1 and masks[u] & ~m:
                return False
    return True


def model_from_masks(masks: Sequence[int], valuation=None) -> KripkeModel:
    n = len(masks)
    return KripkeModel(n, (), valuation or {},
                       succ=[[u for u in range(n) if masks[w] >> u & 1] for w in range(n)])


# ------------------------------------------------------------ DOT export

def to_dot(model: KripkeModel, name: str = "frame", highlight: int | None = None) -> str:
    """Graphviz rendering with one box per cluster.

    Edges inside a cluster are implied by the box.  Between clusters only
    immediate (non-composite) edges are drawn.
    """
    comps = clusters_of(model)
    cid = {w: i for i, c in enumerate(comps) for w in c}
    lines = [f"digraph {name} {{", "  rankdir=TB;", "  node [shape=circle];"]
    for i, c in enumerate(comps):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append("    style=rounded;")
        lines.append(f'    label="C{i}";')
        for w in c:
            true_vars = [k for k in sorted(model.valuation) if w in model.valuation[k]]
            label = f"{w}: " + (",".join(true_vars) if true_vars else "-")
            extra = ", style=bold, color=red" if w == highlight else ""
            lines.append(f'    w{w} [label="{label}"{extra}];')
        lines.append("  }")
    reach = reach_masks(model)
    cluster_edges = set()
    for w in range(model.n):
        for u in model.succ[w]:
            if cid[w] != cid[u]:
                cluster_edges.add((cid[w], cid[u]))
    for a, b in sorted(cluster_edges):
        # skip edges implied through an intermediate cluster
        rep_a, rep_b = comps[a][0], comps[b][0]
        implied = any(x not in (a, b) and (a, x) in cluster_edges
                      and reach[comps[x][0]] >> rep_b & 1 for x in range(len(comps)))
        if not implied:
            lines.append(f"  w{rep_a} -> w{rep_b} [ltail=cluster_{a}, lhead=cluster_{b}];")
    for w in range(model.n):
        for u in sorted(model.succ[w]):
            if cid[w] == cid[u] and w != u and not all(
                    v in model.succ[x] for x in comps[cid[w]] for v in comps[cid[w]]):
                lines.append(f"  w{w} -> w{u};")
    lines.append("}")
    return "\n".join(lines) + "\n"
