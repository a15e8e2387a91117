"""Pure-Python evaluation kernels over bitset Kripke models.

A compiled program is three parallel integer sequences ``ops``, ``a``, ``b``.
Slot ``i`` holds the truth set of one subformula; operands ``a``/``b`` refer
to earlier slots (for ``OP_VAR``, ``a`` is the variable index).  World ``w``
is bit ``w`` of a mask and ``succ[w]`` is the mask of its successors.

These functions accept arbitrarily many worlds (Python ints are unbounded);
the compiled twin in ``_ckernels`` is limited to 64 worlds.
"""

OP_VAR, OP_NOT, OP_AND, OP_OR, OP_IMP, OP_IFF, OP_DIA, OP_BOX, OP_TOP, OP_BOT = range(10)


def _preimage(x, succ, n):
    """Mask of worlds with at least one successor inside ``x``."""
    out = 0
    for w in range(n):
        if succ[w] & x:
            out |= 1 << w
    return out


def eval_slots(ops, a, b, var_masks, succ, n):
    full = (1 << n) - 1
    slots = [0] * len(ops)
    for i in range(len(ops)):
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
    return slots


def truth_set(ops, a, b, var_masks, succ, n):
    return eval_slots(ops, a, b, var_masks, succ, n)[-1]


def find_refuting_valuation(ops, a, b, nvars, succ, n, target):
    """Least valuation code whose truth set misses a world of ``target``.

    Code ``c`` gives variable ``v`` the mask ``(c >> (v*n)) & full``.
    Returns -1 when every valuation makes the formula true on ``target``.
    """
    full = (1 << n) - 1
    masks = [0] * nvars
    for c in range(1 << (nvars * n)):
        for v in range(nvars):
            masks[v] = (c >> (v * n)) & full
        if truth_set(ops, a, b, masks, succ, n) & target != target:
            return c
    return -1


def find_countermodel(ops, a, b, nvars, frames, targets):
    """Scan ``frames`` (a list of successor-mask lists) in order.

    Returns ``(frame_index, valuation_code)`` for the first refutation, or
    ``(-1, -1)``.  ``targets[i]`` is the world mask that must be refuted on.
    """
    for idx, succ in enumerate(frames):
        c = find_refuting_valuation(ops, a, b, nvars, succ, len(succ), targets[idx])
        if c >= 0:
            return idx, c
    return -1, -1
