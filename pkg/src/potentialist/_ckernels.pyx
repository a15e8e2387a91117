# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; same contract as ``_pykernels`` for n <= 64."""

from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

DEF OP_VAR = 0
DEF OP_NOT = 1
DEF OP_AND = 2
DEF OP_OR = 3
DEF OP_IMP = 4
DEF OP_IFF = 5
DEF OP_DIA = 6
DEF OP_BOX = 7
DEF OP_TOP = 8
DEF OP_BOT = 9

MAX_WORLDS = 64


cdef inline uint64_t _full(int n) nogil:
    if n >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return ((<uint64_t>1) << n) - 1


cdef inline uint64_t _preimage(uint64_t x, const uint64_t* succ, int n) nogil:
    cdef uint64_t out = 0
    cdef int w
    for w in range(n):
        if succ[w] & x:
            out |= (<uint64_t>1) << w
    return out


cdef void _run(const int* ops, const int* a, const int* b, int m,
               const uint64_t* var_masks, const uint64_t* succ, int n,
               uint64_t* slots) nogil:
    cdef uint64_t full = _full(n)
    cdef uint64_t r
    cdef int i, op
    for i in range(m):
        op = ops[i]
        if op == OP_VAR:
            r = var_masks[a[i]]
        elif op == OP_NOT:
            r = full & ~slots[a[i]]
        elif op == OP_AND:
            r = slots[a[i]] & slots[b[i]]
        elif op == OP_OR:
            r = slots[a[i]] | slots[b[i]]
        elif op == OP_IMP:
            r = (full & ~slots[a[i]]) | slots[b[i]]
        elif op == OP_IFF:
            r = full & ~(slots[a[i]] ^ slots[b[i]])
        elif op == OP_DIA:
            r = _preimage(slots[a[i]], succ, n)
        elif op == OP_BOX:
            r = full & ~_preimage(full & ~slots[a[i]], succ, n)
        elif op == OP_TOP:
            r = full
        else:
            r = 0
        slots[i] = r


cdef int64_t _search(const int* ops, const int* a, const int* b, int m, int nvars,
                     const uint64_t* succ, int n, uint64_t target,
                     uint64_t* masks, uint64_t* slots) nogil:
    cdef uint64_t full = _full(n)
    cdef int bits = nvars * n
    cdef uint64_t total = (<uint64_t>1) << bits
    cdef uint64_t c
    cdef int v
    for c in range(total):
        for v in range(nvars):
            masks[v] = (c >> (v * n)) & full
        _run(ops, a, b, m, masks, succ, n, slots)
        if slots[m - 1] & target != target:
            return <int64_t>c
    return -1


def _check_sizes(int n, int nvars=0):
    if n < 1 or n > 64:
        raise ValueError("compiled kernels support 1..64 worlds")
    if nvars * n > 62:
        raise ValueError("valuation space too large for the compiled search")


def eval_slots(int[::1] ops, int[::1] a, int[::1] b,
               uint64_t[::1] var_masks, uint64_t[::1] succ, int n):
    _check_sizes(n)
    cdef int m = ops.shape[0]
    cdef uint64_t* slots = <uint64_t*>malloc(max(m, 1) * sizeof(uint64_t))
    cdef const uint64_t* vm = &var_masks[0] if var_masks.shape[0] else NULL
    try:
        with nogil:
            _run(&ops[0], &a[0], &b[0], m, vm, &succ[0], n, slots)
        return [slots[i] for i in range(m)]
    finally:
        free(slots)


def truth_set(int[::1] ops, int[::1] a, int[::1] b,
              uint64_t[::1] var_masks, uint64_t[::1] succ, int n):
    return eval_slots(ops, a, b, var_masks, succ, n)[-1]


def find_refuting_valuation(int[::1] ops, int[::1] a, int[::1] b, int nvars,
                            uint64_t[::1] succ, int n, uint64_t target):
    _check_sizes(n, nvars)
    cdef int m = ops.shape[0]
    cdef uint64_t* slots = <uint64_t*>malloc(max(m, 1) * sizeof(uint64_t))
    cdef uint64_t* masks = <uint64_t*>malloc(max(nvars, 1) * sizeof(uint64_t))
    cdef int64_t res
    try:
        with nogil:
            res = _search(&ops[0], &a[0], &b[0], m, nvars, &succ[0], n, target,
                          masks, slots)
        return res
    finally:
        free(slots)
        free(masks)


def find_countermodel(int[::1] ops, int[::1] a, int[::1] b, int nvars,
                      uint64_t[::1] flat_succ, int[::1] sizes, uint64_t[::1] targets):
    """Scan concatenated frames; ``sizes[i]`` worlds of frame ``i`` are stored
    consecutively in ``flat_succ``."""
    cdef int nf = sizes.shape[0]
    cdef int m = ops.shape[0]
    cdef int i, n, off = 0
    cdef int64_t res = -1
    cdef int hit = -1
    for i in range(nf):
        _check_sizes(sizes[i], nvars)
    cdef uint64_t* slots = <uint64_t*>malloc(max(m, 1) * sizeof(uint64_t))
    cdef uint64_t* masks = <uint64_t*>malloc(max(nvars, 1) * sizeof(uint64_t))
    try:
        with nogil:
            for i in range(nf):
                n = sizes[i]
                res = _search(&ops[0], &a[0], &b[0], m, nvars, &flat_succ[off], n,
                              targets[i], masks, slots)
                if res >= 0:
                    hit = i
                    break
                off += n
        if hit < 0:
            return -1, -1
        return hit, res
    finally:
        free(slots)
        free(masks)
