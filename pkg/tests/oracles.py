"""Independent brute-force oracles used by the tests.

None of these reuse the package's evaluation kernels or search code; they
work from first principles so that agreement is meaningful.
"""

from __future__ import annotations

import itertools

import numpy as np

from potentialist.syntax import AND, BOT, BOX, DIA, IFF, IMP, NOT, OR, TOP, VAR, Formula


def all_preorders(n: int) -> list:
    """Every preorder on ``n`` labelled worlds as a boolean matrix (slow, n <= 4)."""
    out = []
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for bits in range(1 << len(pairs)):
        r = np.eye(n, dtype=bool)
        for k, (i, j) in enumerate(pairs):
            if bits >> k & 1:
                r[i, j] = True
        # transitive: r∘r ⊆ r
        if np.array_equal((r.astype(int) @ r.astype(int)) > 0, r):
            out.append(r)
    return out


def canonical(r: np.ndarray) -> tuple:
    n = r.shape[0]
    return min(tuple(r[np.ix_(p, p)].flatten()) for p in map(list, itertools.permutations(range(n))))


def preorder_classes(max_n: int) -> list:
    """One representative matrix per isomorphism class, all sizes up to ``max_n``."""
    reps = []
    for n in range(1, max_n + 1):
        seen = {}
        for r in all_preorders(n):
            seen.setdefault(canonical(r), r)
        reps.extend(seen[k] for k in sorted(seen))
    return reps


def equivalence_classes(max_n: int) -> list:
    """One equivalence relation per integer partition of each n <= ``max_n``."""
    def partitions(n, largest):
        if n == 0:
            yield ()
            return
        for k in range(min(n, largest), 0, -1):
            for rest in partitions(n - k, k):
                yield (k,) + rest

    reps = []
    for n in range(1, max_n + 1):
        for parts in partitions(n, n):
            r = np.zeros((n, n), dtype=bool)
            start = 0
            for k in parts:
                r[start:start + k, start:start + k] = True
                start += k
            reps.append(r)
    return reps


class SignatureOracle:
    """Validity over a fixed finite set of frames, all valuations of ``names``.

    Every formula is mapped to the vector of its truth values at every
    (frame, valuation, world).  Vectors are interned, and the class of a
    compound formula is memoized on (operator, child classes), so evaluating
    an exhaustive stream costs one dictionary lookup per formula once the
    smaller classes are known.
    """

    def __init__(self, frames: list, names=("p", "q")):
        self.names = tuple(names)
        k = len(self.names)
        by_n: dict = {}
        for r in frames:
            by_n.setdefault(r.shape[0], []).append(r)
        self.groups = []       # (n, adjacency stack (F,n,n), valuations count)
        var_parts = {v: [] for v in self.names}
        for n in sorted(by_n):
            adj = np.stack(by_n[n]).astype(np.uint8)
            nval = 1 << (k * n)
            codes = np.arange(nval)
            for i, v in enumerate(self.names):
                bits = ((codes[:, None] >> (i * n + np.arange(n))[None, :]) & 1).astype(bool)
                var_parts[v].append(np.broadcast_to(bits, (adj.shape[0], nval, n)).reshape(-1))
            self.groups.append((n, adj, nval))
        self.length = sum(a.shape[0] * nval * n for n, a, nval in self.groups)
        self.vectors: list = []
        self.valid: list = []
        self.intern: dict = {}
        self.memo: dict = {}
        self.var_class = {v: self._add(np.concatenate(var_parts[v])) for v in self.names}
        self.top = self._add(np.ones(self.length, dtype=bool))
        self.bot = self._add(np.zeros(self.length, dtype=bool))

    def _add(self, vec: np.ndarray) -> int:
        key = np.packbits(vec).tobytes()
        cid = self.intern.get(key)
        if cid is None:
            cid = len(self.vectors)
            self.intern[key] = cid
            self.vectors.append(vec)
            self.valid.append(bool(vec.all()))
        return cid

    def _dia(self, vec: np.ndarray) -> np.ndarray:
        out, start = [], 0
        for n, adj, nval in self.groups:
            size = adj.shape[0] * nval * n
            x = vec[start:start + size].reshape(adj.shape[0], nval, n).astype(np.uint8)
            out.append((np.einsum("fvu,fwu->fvw", x, adj) > 0).reshape(-1))
            start += size
        return np.concatenate(out)

    def class_of(self, f: Formula) -> int:
        key = ("sigclass", id(self))
        cid = f.cache.get(key)
        if cid is not None:
            return cid
        op = f.op
        if op == VAR:
            cid = self.var_class[f.name]
        elif op == TOP:
            cid = self.top
        elif op == BOT:
            cid = self.bot
        else:
            kids = tuple(self.class_of(a) for a in f.args)
            mkey = (op,) + kids
            cid = self.memo.get(mkey)
            if cid is None:
                vs = [self.vectors[c] for c in kids]
                if op == NOT:
                    v = ~vs[0]
                elif op == AND:
                    v = vs[0] & vs[1]
                elif op == OR:
                    v = vs[0] | vs[1]
                elif op == IMP:
                    v = ~vs[0] | vs[1]
                elif op == IFF:
                    v = vs[0] == vs[1]
                elif op == DIA:
                    v = self._dia(vs[0])
                else:  # BOX
                    v = ~self._dia(~vs[0])
                cid = self._add(v)
                self.memo[mkey] = cid
        f.cache[key] = cid
        return cid

    def is_valid(self, f: Formula) -> bool:
        return self.valid[self.class_of(f)]


def naive_eval(succ: list, val: dict, w: int, f: Formula) -> bool:
    """Textbook recursive Kripke evaluation; ``succ[w]`` is an iterable of worlds."""
    op = f.op
    if op == VAR:
        return w in val.get(f.name, ())
    if op == TOP:
        return True
    if op == BOT:
        return False
    if op == NOT:
        return not naive_eval(succ, val, w, f.args[0])
    if op == AND:
        return naive_eval(succ, val, w, f.args[0]) and naive_eval(succ, val, w, f.args[1])
    if op == OR:
        return naive_eval(succ, val, w, f.args[0]) or naive_eval(succ, val, w, f.args[1])
    if op == IMP:
        return (not naive_eval(succ, val, w, f.args[0])) or naive_eval(succ, val, w, f.args[1])
    if op == IFF:
        return naive_eval(succ, val, w, f.args[0]) == naive_eval(succ, val, w, f.args[1])
    if op == DIA:
        return any(naive_eval(succ, val, u, f.args[0]) for u in succ[w])
    if op == BOX:
        return all(naive_eval(succ, val, u, f.args[0]) for u in succ[w])
    raise ValueError(op)


def valid_on_frames(frames: list, f: Formula, names) -> bool:
    """Naive validity: every frame (boolean matrix), valuation and world."""
    for r in frames:
        n = r.shape[0]
        succ = [[u for u in range(n) if r[w, u]] for w in range(n)]
        for code in range(1 << (len(names) * n)):
            val = {v: {w for w in range(n) if code >> (i * n + w) & 1}
                   for i, v in enumerate(names)}
            for w in range(n):
                if not naive_eval(succ, val, w, f):
                    return False
    return True
