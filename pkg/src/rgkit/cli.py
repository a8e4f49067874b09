"""Command-line interface.

Exit status is a pure function of the report verdict:
0 valid, 1 invalid, 2 input error, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import report as rpt
from .formula import EvalError, FormulaError, relation_to_assertion, \
    stateset_to_assertion
from .parser import ParseError, parse_program, parse_source
from .prog import await_global_test_notes, render_expr, render_program, \
    validate_program
from .proofs import check_proof_tree
from .removal import RemovalError, erase_auxiliary
from .satcheck import (CheckReport, SpecError, SpecifiedProgram, Statistics,
                       check_sat_general, check_sat_modified, check_sat_noaux,
                       strongest_relations)
from .semantics import (Budget, Configuration, EnvSpec, ResourceBudget,
                        SemanticsError, explore, hid_set, initial_states,
                        to_dot)
from .sorts import SortError


class InputError(Exception):
    pass


def _load(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    try:
        f = parse_source(text)
    except ParseError as e:
        raise InputError(f"{path}:{e}") from e
    return f


def _checked_file(f, path: str):
    if f.program is None:
        raise InputError(f"{path}: no program section")
    if f.spec is None:
        raise InputError(f"{path}: no spec section")
    st = f.structure()
    errs = validate_program(f.program, st)
    if errs:
        raise InputError(
            f"{path}: program is not well formed:\n  "
            + "\n  ".join(str(e) for e in errs))
    return st


def cmd_check(args) -> int:
    f = _load(args.file)
    st = _checked_file(f, args.file)
    sp = f.specified_program()
    if args.mode == "lsps":
        sp = SpecifiedProgram(sp.program, sp.spec, "square")
    elif args.mode == "lsp":
        sp = SpecifiedProgram(sp.program, sp.spec, "curly")
    witness = f.witness
    if args.witness:
        with open(args.witness) as fh:
            witness = parse_program(fh.read(), sorts=f.sorts,
                                    vars={**f.vars, **f.aux_vars})
    budget = Budget(args.budget)
    if sp.spec.aux:
        if witness is None:
            raise InputError("the aux-set is nonempty; a witness section or "
                             "--witness file is required")
        rep = check_sat_general(sp, witness, st, budget)
    elif sp.bracket == "square":
        rep = check_sat_modified(sp, None, st, budget)
    else:
        rep = check_sat_noaux(sp, st, budget)
    rep.notes.extend(await_global_test_notes(sp.program))
    return _finish("check", rep, st, args)


def cmd_prove(args) -> int:
    f = _load(args.file)
    if f.proof is None:
        raise InputError(f"{args.file}: no proof section")
    st = f.structure()
    preport = check_proof_tree(f.proof, st, lsp_b=(args.system == "lspb"))
    rep = CheckReport("valid" if preport.valid else "invalid")
    rep.stats = Statistics(obligations=preport.obligations_checked)
    if not preport.valid:
        rep.clause = "proof"
        rep.detail = preport.first_failure() or "proof invalid"
    extra = {"depth": preport.depth, "failures": preport.failures}
    if args.report_dir and preport.failed_obligations:
        os.makedirs(args.report_dir, exist_ok=True)
        for i, ob in enumerate(preport.failed_obligations, 1):
            path = os.path.join(args.report_dir, f"failed_obligation_{i}.txt")
            with open(path, "w") as fh:
                fh.write(f"# claim: {ob.claim}\n")
                fh.write(f"# origin: rule {ob.origin[0]}, "
                         f"premise {ob.origin[1]}\n")
                fh.write(f"# scope: {', '.join(ob.scope)}\n")
                fh.write(render_expr(ob.body) + "\n")
    return _finish("prove", rep, st, args, extra=extra)


def cmd_strongest(args) -> int:
    f = _load(args.file)
    st = _checked_file(f, args.file)
    spec = f.spec
    budget = Budget(args.budget)
    rel = strongest_relations(f.program, spec.glo, spec.pre, spec.rely,
                              args.what, st, budget)
    header, rows = rpt.relation_rows(rel)
    print("\t".join(header))
    for row in rows:
        print("\t".join(str(x) for x in row))
    if args.as_assertion:
        e = (stateset_to_assertion(rel) if args.what == "wait"
             else relation_to_assertion(rel))
        print("assertion:", render_expr(e))
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        rpt.write_relation_csv(
            os.path.join(args.report_dir, "relation.csv"), rel)
        rpt.plot_relation(
            os.path.join(args.report_dir, "relation.png"), rel, st)
        with open(os.path.join(args.report_dir, "report.json"), "w") as fh:
            json.dump({"command": "strongest", "what": args.what,
                       "vars": list(rel.vars), "rows": rows}, fh,
                      indent=2, default=str)
    return 0


def cmd_erase(args) -> int:
    f = _load(args.file)
    target = f.witness if (f.witness is not None and not args.program) \
        else f.program
    if target is None:
        raise InputError(f"{args.file}: no program to erase")
    aux = tuple(f.aux_vars)
    if args.aux:
        aux = tuple(x.strip() for x in args.aux.split(",") if x.strip())
    elif f.spec is not None and f.spec.aux:
        aux = f.spec.aux
    plain = erase_auxiliary(target, set(aux))
    print(render_program(plain))
    return 0


def cmd_graph(args) -> int:
    f = _load(args.file)
    st = _checked_file(f, args.file)
    spec = f.spec
    budget = Budget(args.budget)
    env = EnvSpec(spec.rely, frozenset(hid_set(f.program)) & set(st.var_order))
    graphs = []
    for s0 in initial_states(st, spec.pre):
        graphs.append(explore(Configuration(f.program, s0), st, env, budget))
        if len(graphs) >= args.max_graphs:
            break
    for i, g in enumerate(graphs):
        text = to_dot(g, st, name=f"config{i}")
        if args.emit:
            print(text)
        if args.render:
            os.makedirs(args.render, exist_ok=True)
            with open(os.path.join(args.render, f"graph_{i}.dot"), "w") as fh:
                fh.write(text)
            rpt.plot_graph(os.path.join(args.render, f"graph_{i}.png"), g, st)
    return 0


def _finish(command: str, rep: CheckReport, st, args, extra=None) -> int:
    if getattr(args, "json", False):
        print(json.dumps(rpt.report_json(command, rep, st, extra),
                         indent=2, default=str))
    else:
        print(rpt.render_text(rep, st))
        if extra and extra.get("depth"):
            print(f"proof depth: {extra['depth']}")
    if getattr(args, "report_dir", None):
        rpt.emit_report_dir(args.report_dir, command, rep, st, extra)
    return rpt.EXIT_FOR_VERDICT[rep.verdict]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rgkit",
        description="Rely/guarantee verification for a parallel "
                    "while-language over finite sorts")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file")
        p.add_argument("--budget", type=int, default=10**6,
                       help="configuration budget (default 1e6)")
        p.add_argument("--json", action="store_true",
                       help="machine-readable report on stdout")
        p.add_argument("--report-dir",
                       help="write report.json, CSVs and figures here")

    p = sub.add_parser("check", help="decide satisfaction of the "
                                     "specified program")
    common(p)
    p.add_argument("--mode", choices=["lsp", "lsps"], default=None,
                   help="force curly (lsp) or square (lsps) semantics")
    p.add_argument("--witness", help="file holding the augmented witness "
                                     "program (overrides the witness section)")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("prove", help="validate the proof tree in the file")
    common(p)
    p.add_argument("--system", choices=["lsp", "lspb"], default="lsp",
                   help="lspb forbids removals and the introduction rule")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("strongest", help="compute a strongest relation")
    common(p)
    p.add_argument("--what", choices=["eff", "wait", "guar"], required=True)
    p.add_argument("--as-assertion", action="store_true",
                   help="also print an explicit formula for the relation")
    p.set_defaults(fn=cmd_strongest)

    p = sub.add_parser("erase", help="strip auxiliary structure from the "
                                     "witness (or program) section")
    p.add_argument("file")
    p.add_argument("--aux", help="comma-separated auxiliary variables")
    p.add_argument("--program", action="store_true",
                   help="erase the program section even when a witness exists")
    p.set_defaults(fn=cmd_erase)

    p = sub.add_parser("graph", help="emit configuration graphs")
    p.add_argument("file")
    p.add_argument("--emit", action="store_true",
                   help="print DOT text to stdout")
    p.add_argument("--render", metavar="DIR",
                   help="write .dot and .png files to DIR")
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--max-graphs", type=int, default=8)
    p.set_defaults(fn=cmd_graph)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, SpecError, ParseError, SortError, FormulaError,
            EvalError, RemovalError, SemanticsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ResourceBudget as e:
        print(f"resource budget exceeded: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
