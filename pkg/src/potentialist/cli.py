"""Command-line front door: ``potentialist <command> ...``.

Exit codes: 0 success or pass, 1 refuted or failed (a witness is printed),
2 usage error, 3 undecided within the search ceiling.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

from . import controls, decide as decide_mod, maximality, sequences, simulation, universal
from .kripke import KripkeModel, PreTree, pretree_from_shape, to_dot
from .syntax import Formula, ParseError, parse

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNKNOWN = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _read_arg(text: str) -> str:
    """``@path`` reads the argument from a file."""
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                return fh.read().strip()
        except OSError as exc:
            raise UsageError(f"cannot read {text[1:]}: {exc.strerror}") from exc
    return text


def _formula(text: str) -> Formula:
    src = _read_arg(text)
    try:
        return parse(src)
    except ParseError as exc:
        raise UsageError(f"bad formula: {exc}") from exc


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _oracle(args) -> "universal.FragmentOracle":
    try:
        return universal.oracle_from_json(_load_json(args.oracle), args.program)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad oracle file: {exc}") from exc


def _int_list(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _emit(args, payload: dict, human: str):
    if args.json:
        out = {"schema_version": SCHEMA_VERSION, "command": args.command, **payload}
        print(json.dumps(out, sort_keys=True, indent=2))
    else:
        print(human)


def _write_dot(path: str | None, text: str):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _describe_model(model: KripkeModel, world: int | None) -> str:
    lines = [f"worlds: {model.n}"]
    for w in range(model.n):
        true_vars = [k for k in sorted(model.valuation) if w in model.valuation[k]]
        mark = " *" if w == world else ""
        succ = ",".join(str(u) for u in sorted(model.succ[w]))
        lines.append(f"  {w}{mark}: sees {{{succ}}} true {{{','.join(true_vars)}}}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands

def cmd_decide(args) -> int:
    f = _formula(args.formula)
    res = decide_mod.decide(args.theory, f, args.bound)
    if res.countermodel is not None:
        _write_dot(args.dot, to_dot(res.countermodel, "countermodel", res.world))
    _emit(args, res.to_json(), res.verdict)
    if res.is_member:
        return EXIT_OK
    return EXIT_FAIL if res.is_non_member else EXIT_UNKNOWN


def cmd_countermodel(args) -> int:
    f = _formula(args.formula)
    res = decide_mod.decide(args.theory, f, args.bound)
    if res.countermodel is not None:
        _write_dot(args.dot, to_dot(res.countermodel, "countermodel", res.world))
        human = (f"{res.verdict}: refuted at world {res.world}\n"
                 + _describe_model(res.countermodel, res.world))
    else:
        human = f"{res.verdict}: no countermodel"
    _emit(args, res.to_json(), human)
    if res.is_member:
        return EXIT_OK
    return EXIT_FAIL if res.is_non_member else EXIT_UNKNOWN


def _system_for(args):
    if args.model:
        return controls.FiniteSystem(KripkeModel.from_json(_load_json(args.model)))
    return sequences.SequenceSystem(_int_list(args.base), range(args.alphabet), args.depth)


def cmd_verify_controls(args) -> int:
    try:
        kind, stmts = controls.family_from_json(_load_json(args.family))
    except (KeyError, ValueError, ParseError) as exc:
        raise UsageError(f"bad family file: {exc}") from exc
    system = _system_for(args)
    try:
        rep = controls.verify_family(system, kind, stmts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    human = f"{rep.kind}: {rep.verdict}"
    if not rep.passed:
        human += f"\n  reason: {rep.reason}\n  witness: {rep.witness!r}"
    _emit(args, rep.to_json(system.describe_world), human)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    f = _formula(args.formula)
    base = _int_list(args.base)
    if args.theory == "s5":
        m = args.switches
        if m is None:
            res = decide_mod.decide("s5", f)
            size = res.countermodel.n if res.countermodel is not None else 1
            m = max(1, math.ceil(math.log2(size)))
        system = sequences.SequenceSystem.for_switches(m, base)
        switches = [sequences.SeqStatement.sigma(i) for i in range(m)]
        try:
            rep = simulation.simulate_s5_refutation(system, switches, f)
        except simulation.SimulationError as exc:
            raise UsageError(str(exc)) from exc
    else:
        pipe = simulation.s4_sequence_refutation(f, base)
        if isinstance(pipe, simulation.S4Pipeline):
            rep = pipe.report
            system = pipe.system
            _write_dot(args.dot, to_dot(pipe.tree.to_model(), "pretree", rep.model_world))
        else:
            rep, system = pipe, sequences.SequenceSystem(base)
    describe = repr
    _emit(args, rep.to_json(describe), rep.trace(describe, limit=args.limit))
    return EXIT_FAIL if rep.verdict == "fail" else EXIT_OK


def cmd_ua_run(args) -> int:
    oracle = _oracle(args)
    run = universal.run_one_at_a_time if args.one_at_a_time else universal.run_universal
    state = run(oracle, args.program, args.budget)
    payload = state.to_json()
    if args.one_at_a_time:
        payload["derived"] = universal.derive_concatenated(state)
    human = f"enumerated {state.enumerated}"
    if args.one_at_a_time:
        human += f"\nderived {payload['derived']}"
    human += f"\nstages {len(state.stages)}, steps {state.steps}"
    if state.halted_at_budget:
        human += " (budget reached)"
    if not state.valid:
        human += f"\ninvalid run: {state.error}"
    _emit(args, payload, human)
    return EXIT_OK if state.valid else EXIT_FAIL


def cmd_ua_extend(args) -> int:
    oracle = _oracle(args)
    if not isinstance(oracle, universal.ScriptedOracle):
        raise UsageError("ua-extend needs a scripted oracle")
    fragments = args.fragments or oracle.fragment_count
    target = _int_list(args.target)
    run = universal.run_one_at_a_time if args.one_at_a_time else universal.run_universal
    state = run(oracle, args.program, args.budget)
    try:
        if args.one_at_a_time:
            new = universal.script_extension_one_at_a_time(state, target, oracle.script, fragments)
        else:
            new = universal.script_extension(state, target, oracle.script, fragments)
    except universal.ExtensionExhausted as exc:
        _emit(args, {"verdict": "exhausted", "reason": str(exc)}, f"exhausted: {exc}")
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    certs = [c.to_json() for c in new]
    human = "\n".join(json.dumps(c, sort_keys=True) for c in certs) or "nothing to add"
    _emit(args, {"verdict": "extended", "certificates": certs}, human)
    return EXIT_OK


def _uniform_shape(depth: int, branch: int, cluster: int):
    if depth <= 1:
        return (cluster, ())
    child = _uniform_shape(depth - 1, branch, cluster)
    return (cluster, tuple([child] * branch))


def _tree_from_args(args) -> PreTree:
    if args.shape:
        try:
            shape = sequences._shape_from_json(json.loads(_read_arg(args.shape)))
        except (ValueError, TypeError, IndexError) as exc:
            raise UsageError(f"bad shape: {exc}") from exc
        return pretree_from_shape(shape)
    dims = _int_list(args.uniform)
    if len(dims) != 3 or min(dims) < 1:
        raise UsageError("--uniform takes DEPTH,BRANCH,CLUSTER, all positive")
    return pretree_from_shape(_uniform_shape(*dims))


def cmd_railyard(args) -> int:
    tree = _tree_from_args(args)
    try:
        enc = sequences.RailyardEncoding(tree, args.offset)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write_dot(args.dot, to_dot(tree.to_model(), "pretree"))
    payload = {"encoding": enc.to_json(), "k": enc.k, "m": enc.m, "worlds": tree.n}
    lines = [f"pre-tree with {tree.n} worlds, branch degree k={enc.k}, cluster size m={enc.m}"]
    code = EXIT_OK
    if args.decode is not None:
        seq = _int_list(args.decode)
        payload["decoded"] = {"sequence": seq, "world": enc.decode(seq)}
        lines.append(f"{sequences.SequenceWorld(seq)!r} -> world {enc.decode(seq)}")
    if args.verify:
        base = sequences.SequenceWorld([0] * args.offset)
        system = sequences.SequenceSystem.for_railyard(enc, base)
        rep = controls.is_railyard_labeling(system, tree, enc.labeling(), base)
        payload["verification"] = rep.to_json(repr)
        lines.append(f"railyard labeling: {rep.verdict}")
        if not rep.passed:
            lines.append(f"  reason: {rep.reason}; witness {rep.witness!r}")
            code = EXIT_FAIL
    _emit(args, payload, "\n".join(lines))
    return code


def cmd_maximality(args) -> int:
    try:
        toy = maximality.ToyTheory.from_json(_load_json(args.toy))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad toy theory: {exc}") from exc
    K = toy.max_horizon if args.horizon is None else args.horizon
    if not 0 <= K <= toy.max_horizon:
        raise UsageError(f"horizon must lie in 0..{toy.max_horizon}")
    try:
        if args.e_part is not None:
            chosen = [s for s in args.e_part.split(",") if s]
            w = maximality.world_from_e_part(toy, chosen)
        else:
            order = [s for s in args.order.split(",") if s] if args.order else None
            w = maximality.build_maximal_existential_theory(toy, order)
    except maximality.InconsistentBase as exc:
        _emit(args, {"verdict": "inconsistent", "reason": str(exc)}, f"inconsistent: {exc}")
        return EXIT_FAIL
    sentences = [s for s in args.sentences.split(",") if s] if args.sentences else None
    try:
        rep = maximality.check_maximality_principle(w, sentences, K)
    except maximality.UnsupportedQuery as exc:
        raise UsageError(str(exc)) from exc
    payload = {"world": sorted(w.literals), "e_part": sorted(w.e_part), **rep.to_json()}
    human = "\n".join([
        f"world: {{{','.join(sorted(w.literals))}}}",
        f"E-part: {{{','.join(sorted(w.e_part))}}}",
        f"maximality principle at horizon {K}: {'pass' if rep.mp_pass else 'fail'}",
        *(f"  violation: {s}" for s in rep.violations),
        f"E-part maximal: {rep.e_part_maximal}",
        f"note: {rep.note}",
    ])
    _emit(args, payload, human)
    return EXIT_OK if rep.mp_pass else EXIT_FAIL


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="potentialist", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    theories = ["s4", "s4.2", "s4.3", "s5"]

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    d = sub.add_parser("decide", help="decide membership of a formula in a modal theory")
    d.add_argument("formula", help="formula text, or @path to read it from a file")
    d.add_argument("--theory", choices=theories, required=True)
    d.add_argument("--bound", type=int, help="override the countermodel size bound")
    d.add_argument("--dot", metavar="PATH", help="write the countermodel as Graphviz DOT")
    common(d)
    d.set_defaults(func=cmd_decide)

    c = sub.add_parser("countermodel", help="print a countermodel, if one exists")
    c.add_argument("formula")
    c.add_argument("--theory", choices=theories, required=True)
    c.add_argument("--bound", type=int)
    c.add_argument("--dot", metavar="PATH")
    common(c)
    c.set_defaults(func=cmd_countermodel)

    v = sub.add_parser("verify-controls", help="verify a control family from JSON")
    v.add_argument("family", help='JSON file {"kind": ..., "statements": [...]}')
    v.add_argument("--model", metavar="PATH", help="finite Kripke model JSON (default: sequence window)")
    v.add_argument("--base", default="", help="base sequence of the window, e.g. 1,2")
    v.add_argument("--alphabet", type=int, default=4, help="window entries range over 0..N-1")
    v.add_argument("--depth", type=int, default=2, help="entries appended to the base")
    common(v)
    v.set_defaults(func=cmd_verify_controls)

    s = sub.add_parser("simulate", help="refute a formula over the sequence system")
    s.add_argument("formula")
    s.add_argument("--theory", choices=["s4", "s5"], required=True)
    s.add_argument("--switches", type=int, help="number of binary-digit switches (S5)")
    s.add_argument("--base", default="", help="base sequence, e.g. 3,1")
    s.add_argument("--limit", type=int, default=20, help="pairs shown in the human trace")
    s.add_argument("--dot", metavar="PATH", help="write the uniform pre-tree (S4)")
    common(s)
    s.set_defaults(func=cmd_simulate)

    u = sub.add_parser("ua-run", help="run the universal algorithm against an oracle script")
    u.add_argument("--oracle", required=True, help="oracle JSON file")
    u.add_argument("--budget", type=int, default=10_000, help="proof inspections allowed")
    u.add_argument("--program", type=int, default=0)
    u.add_argument("--one-at-a-time", action="store_true")
    common(u)
    u.set_defaults(func=cmd_ua_run)

    e = sub.add_parser("ua-extend", help="script certificates extending the enumeration")
    e.add_argument("--oracle", required=True)
    e.add_argument("--target", required=True, help="comma-separated target sequence")
    e.add_argument("--fragments", type=int, help="fragment count (default from the oracle)")
    e.add_argument("--budget", type=int, default=100_000)
    e.add_argument("--program", type=int, default=0)
    e.add_argument("--one-at-a-time", action="store_true")
    common(e)
    e.set_defaults(func=cmd_ua_extend)

    r = sub.add_parser("railyard", help="encode a pre-tree over the sequence system")
    g = r.add_mutually_exclusive_group(required=True)
    g.add_argument("--shape", help="nested JSON [cluster_size, [children...]] (or @path)")
    g.add_argument("--uniform", help="DEPTH,BRANCH,CLUSTER of a uniform pre-tree")
    r.add_argument("--offset", type=int, default=0, help="leading entries the decoder skips")
    r.add_argument("--decode", help="comma-separated sequence to decode")
    r.add_argument("--verify", action="store_true", help="check the labeling on its window")
    r.add_argument("--dot", metavar="PATH")
    common(r)
    r.set_defaults(func=cmd_railyard)

    m = sub.add_parser("maximality", help="check the maximality principle on a toy theory")
    m.add_argument("toy", help="toy theory JSON file")
    m.add_argument("--horizon", type=int, help="fragment horizon K (default: last fragment)")
    m.add_argument("--order", help="enumeration order for the greedy construction")
    m.add_argument("--e-part", help="check the world with exactly these E-sentences instead")
    m.add_argument("--sentences", help="sentences to check (default: the E-sentences)")
    common(m)
    m.set_defaults(func=cmd_maximality)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"potentialist: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
