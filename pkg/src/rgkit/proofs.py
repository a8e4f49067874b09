"""Proof trees over specified programs: rule schemas and obligations.

A proof node names a rule, a conclusion (a specified program) and its
subproofs.  Validating a rule instance checks the structural schema and
side conditions, and returns the residual first-order obligations, which
are discharged by finite enumeration.  Removal premises are checked as
axioms.  Schema matching is structural up to associativity of conjunction,
disjunction and relational composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .formula import (App, Expr, Preserve, Quant, RelCompose, TransClose,
                      Var, conj, flatten, free_names, hook_expression,
                      identity_frame, unary_extension, valid, well_founded,
                      FALSE, TRUE)
from .prog import (Assign, Await, Block, If, Par, Program, Seq, Skip, While,
                   _assignable, hid_set, infer_sort)
from .removal import Removal, check_removal
from .satcheck import (SpecError, Specification, SpecifiedProgram,
                       validate_specified_program)
from .sorts import Structure

RULE_NAMES = (
    "consequence", "pre", "access", "skip", "assignment", "block",
    "sequential", "if", "while", "parallel", "parallel-general", "await",
    "elimination", "effect", "global", "auxiliary", "introduction",
    "lsps-while", "lsps-await")

BASIC_RULES = ("consequence", "pre", "access", "skip", "assignment", "block",
               "sequential", "if", "while", "parallel", "await", "elimination")


class SchemaError(Exception):
    """Rule instance does not match its schema."""

    def __init__(self, rule: str, what: str, expected: str):
        super().__init__(f"{rule}-rule: {what}; expected {expected}")
        self.rule = rule
        self.what = what
        self.expected = expected


@dataclass(frozen=True)
class Obligation:
    claim: str                 # "validity" | "wf"
    body: Expr
    scope: tuple[str, ...]
    origin: tuple[str, int]    # (rule name, premise position)


@dataclass
class ProofNode:
    conclusion: SpecifiedProgram
    rule: str
    premises: list["ProofNode"] = field(default_factory=list)
    removal: Optional[Removal] = None
    updates: dict[str, Expr] = field(default_factory=dict)


@dataclass
class ProofReport:
    valid: bool
    depth: int = 0
    failures: list[str] = field(default_factory=list)
    obligations_checked: int = 0
    failed_obligations: list[Obligation] = field(default_factory=list)

    def first_failure(self) -> Optional[str]:
        return self.failures[0] if self.failures else None


# ---------------------------------------------------------------------------
# Associativity-insensitive structural comparison


def _norm(e: Expr) -> Expr:
    """Right-nest and/or/relcompose chains; leave everything else alone."""
    if isinstance(e, App) and e.op in ("and", "or"):
        parts = [_norm(p) for p in flatten(e.op, e)]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = App(e.op, (p, out))
        return out
    if isinstance(e, App):
        return App(e.op, tuple(_norm(a) for a in e.args))
    if isinstance(e, Quant):
        return Quant(e.kind, e.binders, _norm(e.body))
    if isinstance(e, RelCompose):
        parts = [_norm(p) for p in _flat_compose(e)]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = RelCompose(p, out)
        return out
    if isinstance(e, TransClose):
        return TransClose(_norm(e.body), e.reflexive)
    if isinstance(e, Preserve):
        return Preserve(_norm(e.pre), _norm(e.step), e.hooked)
    return e


def _flat_compose(e: Expr) -> list[Expr]:
    if isinstance(e, RelCompose):
        return _flat_compose(e.left) + _flat_compose(e.right)
    return [e]


def same(a: Expr, b: Expr) -> bool:
    return _norm(a) == _norm(b)


def _split_chain(rule: str, what: str, op: str, whole: Expr,
                 prefix: Expr) -> Expr:
    """whole must be `prefix op rest` up to associativity; returns rest."""
    ws = flatten(op, whole)
    ps = flatten(op, prefix)
    if len(ws) <= len(ps) or any(not same(w, p) for w, p in zip(ws, ps)):
        raise SchemaError(rule, what,
                          f"a {op}-chain starting with the expected prefix")
    rest = ws[len(ps):]
    out = rest[-1]
    for p in reversed(rest[:-1]):
        out = App(op, (p, out))
    return out


def _expect(cond: bool, rule: str, what: str, expected: str) -> None:
    if not cond:
        raise SchemaError(rule, what, expected)


def _same_sets(rule: str, c: Specification, p: Specification,
               glo=True, aux=True) -> None:
    if glo:
        _expect(set(c.glo) == set(p.glo), rule, "glo-set mismatch",
                "identical glo-sets")
    if aux:
        _expect(set(c.aux) == set(p.aux), rule, "aux-set mismatch",
                "identical aux-sets")


def _same_fields(rule: str, c: Specification, p: Specification,
                 fields: tuple[str, ...]) -> None:
    for f in fields:
        if not same(getattr(c, f), getattr(p, f)):
            raise SchemaError(rule, f"{f}-condition mismatch",
                              f"identical {f}-conditions")


def _flat_par(z: Program) -> list[Program]:
    if isinstance(z, Par):
        return _flat_par(z.left) + _flat_par(z.right)
    return [z]


def _updates_for(rule: str, spec: Specification, updates: dict[str, Expr],
                 st: Structure) -> list[tuple[str, Expr]]:
    """Auxiliary update expressions in aux order; defaults are identities."""
    extra = set(updates) - set(spec.aux)
    _expect(not extra, rule, f"updates for non-auxiliary variables {sorted(extra)}",
            "update targets inside the aux-set")
    out = []
    for a in spec.aux:
        u = updates.get(a, Var(a))
        ok = free_names(u) <= set(spec.glo) | {a}
        _expect(ok, rule, f"update for {a} reads outside glo plus itself",
                "var[u] within the glo-set plus the target")
        errs: list = []
        got = infer_sort(u, st, rule, errs)
        _expect(not errs and _assignable(st.sort_of(a), got, st, u), rule,
                f"update expression for {a} ill-sorted",
                "an update expression of the target's sort")
        out.append((a, u))
    return out


def _split_rer(rule: str, eff: Expr, rely: Expr) -> Expr:
    """eff must be rely | core | rely up to associativity; returns core."""
    parts = _flat_compose(eff)
    _expect(len(parts) >= 3, rule, "eff-condition is not a composition",
            "an eff-condition of the shape R|E|R")
    _expect(same(parts[0], rely) and same(parts[-1], rely), rule,
            "eff-condition does not start and end with the rely-condition",
            "an eff-condition of the shape R|E|R")
    mid = parts[1:-1]
    out = mid[-1]
    for p in reversed(mid[:-1]):
        out = RelCompose(p, out)
    return out


def _aux_update_conj(pairs: list[tuple[str, Expr]]) -> Expr:
    return conj([App("=", (Var(a), hook_expression(u))) for a, u in pairs])


def _semantically_equal_sets(a: Expr, b: Expr, st: Structure,
                             scope: tuple[str, ...]) -> bool:
    ea = unary_extension(a, st, scope)
    eb = unary_extension(b, st, scope)
    return ea.members == eb.members


# ---------------------------------------------------------------------------
# Rule schemas


def validate_rule_instance(rule: str, premises: list[SpecifiedProgram],
                           conclusion: SpecifiedProgram, st: Structure,
                           removal: Optional[Removal] = None,
                           updates: dict[str, Expr] | None = None
                           ) -> list[Obligation]:
    """Check the structural schema; return the residual obligations."""
    if rule not in RULE_NAMES:
        raise SchemaError(rule, "unknown rule", "one of the nineteen rules")
    updates = updates or {}
    c = conclusion.spec
    z = conclusion.program
    scope = c.scope
    br = conclusion.bracket

    def want_premises(n: int) -> None:
        _expect(len(premises) == n, rule,
                f"{len(premises)} specified-program premises",
                f"{n} specified-program premises")

    def premise_brackets(kind: str) -> None:
        for p in premises:
            _expect(p.bracket == kind, rule,
                    f"premise bracket {p.bracket}", f"{kind} premises")

    if rule in ("while", "await"):
        _expect(br == "curly", rule, f"{br}-bracket conclusion",
                "a curly-bracket conclusion")
    elif rule in ("lsps-while", "lsps-await"):
        _expect(br == "square", rule, f"{br}-bracket conclusion",
                "a square-bracket conclusion")

    if rule in ("lsps-await", "await"):
        premise_brackets("curly")
    else:
        premise_brackets(br)

    if rule == "skip":
        want_premises(0)
        _expect(isinstance(z, Skip), rule, "conclusion program", "skip")
        _expect(same(c.eff, c.rely), rule, "eff-condition mismatch",
                "an eff-condition equal to the rely-condition")
        return []

    if rule == "assignment":
        want_premises(0)
        _expect(isinstance(z, Assign), rule, "conclusion program",
                "an assignment")
        pairs = _updates_for(rule, c, updates, st)
        core = _split_rer(rule, c.eff, c.rely)
        frame = identity_frame(set({z.var}) | set(c.aux), scope)
        lhs = conj([Preserve(c.pre, c.rely, hooked=True),
                    App("=", (Var(z.var), hook_expression(z.rhs))),
                    frame, _aux_update_conj(pairs)])
        ob = App("implies", (lhs, App("and", (c.guar, core))))
        return [Obligation("validity", ob, scope, (rule, 1))]

    if rule == "consequence":
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        _same_sets(rule, c, p)
        obs = [
            App("implies", (c.pre, p.pre)),
            App("implies", (c.rely, p.rely)),
            App("implies", (p.wait, c.wait)),
            App("implies", (p.guar, c.guar)),
            App("implies", (p.eff, c.eff)),
        ]
        return [Obligation("validity", ob, scope, (rule, i + 1))
                for i, ob in enumerate(obs)]

    if rule == "pre":
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        _same_sets(rule, c, p)
        _same_fields(rule, c, p, ("pre", "rely", "wait", "guar"))
        rest = _split_chain(rule, "eff-condition", "and", c.eff,
                            hook_expression(c.pre))
        _expect(same(rest, p.eff), rule, "eff-condition mismatch",
                "hooked pre-condition conjoined with the premise eff")
        return []

    if rule == "access":
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        _same_sets(rule, c, p)
        _same_fields(rule, c, p, ("pre", "wait", "guar", "eff"))
        rest = _split_chain(rule, "rely-condition", "and", p.rely, c.rely)
        eqs = flatten("and", rest)
        _expect(len(eqs) == 1, rule, "rely strengthening",
                "exactly one frame equality v = v~")
        eq = eqs[0]
        ok = (isinstance(eq, App) and eq.op == "=" and
              isinstance(eq.args[0], Var) and isinstance(eq.args[1], Var)
              and eq.args[0].name == eq.args[1].name
              and eq.args[0].hooked != eq.args[1].hooked)
        _expect(ok, rule, "rely strengthening", "a frame equality v = v~")
        v = eq.args[0].name
        _expect(v in hid_set(z) and v in c.glo, rule,
                f"variable {v} outside hid(z) intersected with glo",
                "a variable hidden from the environment")
        return []

    if rule == "block":
        want_premises(1)
        _expect(isinstance(z, Block), rule, "conclusion program", "a block")
        p = premises[0].spec
        _expect(premises[0].program == z.body, rule, "premise program",
                "the block body")
        decls = z.decls
        _expect(set(p.glo) == set(c.glo) | set(decls), rule,
                "premise glo-set", "conclusion glo-set plus the locals")
        _expect(set(c.glo) & set(decls) == set(), rule,
                "conclusion glo-set contains a local", "disjoint sets")
        _same_sets(rule, c, p, glo=False)
        _same_fields(rule, c, p, ("pre", "wait", "guar", "eff"))
        rest = _split_chain(rule, "rely-condition", "and", p.rely, c.rely)
        want = conj([App("=", (Var(v), Var(v, hooked=True))) for v in decls])
        _expect(same(rest, want), rule, "rely strengthening",
                "frame equalities for the declared locals")
        return []

    if rule == "sequential":
        want_premises(2)
        _expect(isinstance(z, Seq), rule, "conclusion program",
                "a sequential composition")
        p1, p2 = premises[0].spec, premises[1].spec
        _expect(premises[0].program == z.left
                and premises[1].program == z.right, rule,
                "premise programs", "the two components in order")
        for p in (p1, p2):
            _same_sets(rule, c, p)
        _same_fields(rule, c, p1, ("rely", "wait", "guar"))
        _same_fields(rule, c, p2, ("rely", "wait", "guar"))
        _expect(same(c.pre, p1.pre), rule, "pre-condition mismatch",
                "the first premise's pre-condition")
        e1 = _split_chain(rule, "first premise eff", "and", p1.eff, p2.pre)
        parts = _flat_compose(c.eff)
        want = _flat_compose(e1) + _flat_compose(p2.eff)
        _expect(len(parts) == len(want)
                and all(same(a, b) for a, b in zip(parts, want)),
                rule, "eff-condition mismatch",
                "the composition of the component effects")
        return []

    if rule == "if":
        want_premises(2)
        _expect(isinstance(z, If), rule, "conclusion program", "a conditional")
        p1, p2 = premises[0].spec, premises[1].spec
        _expect(premises[0].program == z.then
                and premises[1].program == z.els, rule,
                "premise programs", "the two branches in order")
        for p in (p1, p2):
            _same_sets(rule, c, p)
            _same_fields(rule, c, p, ("rely", "wait", "guar", "eff"))
        t1 = _split_chain(rule, "then-branch pre", "and", p1.pre, c.pre)
        _expect(same(t1, z.test), rule, "then-branch pre",
                "pre strengthened with the test")
        t2 = _split_chain(rule, "else-branch pre", "and", p2.pre, c.pre)
        _expect(same(t2, App("not", (z.test,))), rule, "else-branch pre",
                "pre strengthened with the negated test")
        return []

    if rule in ("while", "lsps-while"):
        want_premises(1)
        _expect(isinstance(z, While), rule, "conclusion program", "a loop")
        p = premises[0].spec
        _expect(premises[0].program == z.body, rule, "premise program",
                "the loop body")
        _same_sets(rule, c, p)
        _same_fields(rule, c, p, ("rely", "wait", "guar"))
        t = _split_chain(rule, "premise pre", "and", p.pre, c.pre)
        _expect(same(t, z.test), rule, "premise pre",
                "pre strengthened with the test")
        body_eff = _split_chain(rule, "premise eff", "and", p.eff, c.pre)
        parts = flatten("and", c.eff)
        _expect(len(parts) == 2, rule, "conclusion eff",
                "(closure(Z) \\/ R) /\\ not b")
        head, tail = parts
        _expect(same(tail, App("not", (z.test,))), rule, "conclusion eff",
                "a negated test conjunct")
        alts = flatten("or", head)
        _expect(len(alts) == 2 and isinstance(alts[0], TransClose)
                and not alts[0].reflexive
                and same(alts[0].body, body_eff)
                and same(alts[1], c.rely), rule, "conclusion eff",
                "closure of the body effect or the rely-condition")
        if rule == "while":
            return [Obligation("wf", body_eff, c.scope, (rule, 1))]
        return []

    if rule == "parallel":
        want_premises(2)
        _expect(isinstance(z, Par), rule, "conclusion program",
                "a parallel composition")
        p1, p2 = premises[0].spec, premises[1].spec
        _expect(premises[0].program == z.left
                and premises[1].program == z.right, rule,
                "premise programs", "the two arms in order")
        for p in (p1, p2):
            _same_sets(rule, c, p)
            _expect(same(p.pre, c.pre), rule, "premise pre",
                    "the conclusion's pre-condition")
        w1 = _split_chain(rule, "first premise wait", "or", p1.wait, c.wait)
        w2 = _split_chain(rule, "second premise wait", "or", p2.wait, c.wait)
        g1 = _split_chain(rule, "first premise guar", "and", p1.guar, c.guar)
        g2 = _split_chain(rule, "second premise guar", "and", p2.guar, c.guar)
        _expect(same(g1, p2.rely), rule, "first premise guar",
                "conclusion guar conjoined with the sibling rely")
        _expect(same(g2, p1.rely), rule, "second premise guar",
                "conclusion guar conjoined with the sibling rely")
        want = flatten("and", p1.rely) + flatten("and", p2.rely)
        got = flatten("and", c.rely)
        _expect(len(got) == len(want)
                and all(same(a, b) for a, b in zip(got, want)),
                rule, "conclusion rely", "the conjunction of premise relies")
        wante = flatten("and", p1.eff) + flatten("and", p2.eff)
        gote = flatten("and", c.eff)
        _expect(len(gote) == len(wante)
                and all(same(a, b) for a, b in zip(gote, wante)),
                rule, "conclusion eff", "the conjunction of premise effects")
        ob = conj([
            App("not", (App("and", (w1, p2.eff)),)),
            App("not", (App("and", (w2, p1.eff)),)),
            App("not", (App("and", (w1, w2)),)),
        ])
        return [Obligation("validity", ob, scope, (rule, 1))]

    if rule == "parallel-general":
        arms = _flat_par(z)
        m = len(arms)
        _expect(m >= 2 and len(premises) == m, rule,
                f"{len(premises)} premises for {m} arms",
                "one premise per parallel arm")
        specs = [p.spec for p in premises]
        for j, p in enumerate(premises):
            _expect(p.program == arms[j], rule, f"premise {j + 1} program",
                    "the corresponding arm, left to right")
            _same_sets(rule, c, specs[j])
            _expect(same(specs[j].pre, c.pre), rule, f"premise {j + 1} pre",
                    "the conclusion's pre-condition")
        waits = [_split_chain(rule, f"premise {j + 1} wait", "or",
                              specs[j].wait, c.wait) for j in range(m)]
        for j in range(m):
            gj = _split_chain(rule, f"premise {j + 1} guar", "and",
                              specs[j].guar, c.guar)
            want = conj([specs[k].rely for k in range(m) if k != j])
            _expect(same(gj, want), rule, f"premise {j + 1} guar",
                    "conclusion guar conjoined with the sibling relies")
        _expect(same(c.rely, conj([s.rely for s in specs])), rule,
                "conclusion rely", "the conjunction of premise relies")
        _expect(same(c.eff, conj([s.eff for s in specs])), rule,
                "conclusion eff", "the conjunction of premise effects")
        obs = []
        for j in range(m):
            others = conj([App("or", (waits[k], specs[k].eff))
                           for k in range(m) if k != j])
            obs.append(App("not", (App("and", (waits[j], others)),)))
        return [Obligation("validity", ob, scope, (rule, j + 1))
                for j, ob in enumerate(obs)]

    if rule in ("await", "lsps-await"):
        want_premises(1)
        _expect(isinstance(z, Await), rule, "conclusion program", "an await")
        p = premises[0].spec
        _expect(premises[0].program == z.body, rule, "premise program",
                "the await body")
        _same_sets(rule, c, p)
        pairs = _updates_for(rule, c, updates, st)
        _expect(same(p.rely, identity_frame(set(), scope)), rule,
                "premise rely", "the identity I")
        _expect(same(p.wait, FALSE), rule, "premise wait", "false")
        _expect(same(p.guar, TRUE), rule, "premise guar", "true")
        want_pre = App("and", (Preserve(c.pre, c.rely), z.test))
        _expect(_semantically_equal_sets(p.pre, want_pre, st, scope), rule,
                "premise pre", "a set equal to preserve(P, R) /\\ b")
        core = _split_rer(rule, c.eff, c.rely)
        ob1 = App("implies", (App("and", (Preserve(c.pre, c.rely),
                                          App("not", (z.test,)))), c.wait))
        step = App("and", (_aux_update_conj(pairs),
                           identity_frame(set(c.aux), scope)))
        ob2 = App("implies", (RelCompose(p.eff, step),
                              App("and", (c.guar, core))))
        return [Obligation("validity", ob1, scope, (rule, 1)),
                Obligation("validity", ob2, scope, (rule, 2))]

    if rule == "elimination":
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        _same_sets(rule, c, p, aux=False)
        dropped = set(p.aux) - set(c.aux)
        _expect(len(dropped) == 1 and set(c.aux) <= set(p.aux), rule,
                "aux-sets", "the conclusion drops exactly one auxiliary")
        a = dropped.pop()
        sort = st.sort_of(a)
        _expect(same(c.pre, Quant("exists", ((a, False, sort),), p.pre)),
                rule, "conclusion pre", "exists a : premise pre")
        _expect(same(c.rely, Quant("forall", ((a, True, sort),),
                                   Quant("exists", ((a, False, sort),),
                                         p.rely))),
                rule, "conclusion rely",
                "forall a~ : exists a : premise rely")
        _same_fields(rule, c, p, ("wait", "guar", "eff"))
        for f in ("wait", "guar", "eff"):
            _expect(a not in free_names(getattr(c, f)), rule,
                    f"{f}-condition mentions the eliminated variable",
                    "wait/guar/eff free of the eliminated auxiliary")
        return []

    if rule == "effect":
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        _same_sets(rule, c, p)
        _same_fields(rule, c, p, ("pre", "rely", "wait", "guar"))
        rest = _split_chain(rule, "conclusion eff", "and", c.eff, p.eff)
        want = TransClose(App("or", (c.rely, c.guar)))
        _expect(same(rest, want), rule, "conclusion eff",
                "premise eff strengthened with closure(R \\/ G)")
        return []

    if rule in ("global", "auxiliary"):
        want_premises(1)
        p = premises[0].spec
        _expect(premises[0].program == z, rule, "program mismatch",
                "the same program in premise and conclusion")
        if rule == "global":
            added = set(c.glo) - set(p.glo)
            _expect(len(added) == 1 and set(p.glo) <= set(c.glo), rule,
                    "glo-sets", "the conclusion adds exactly one global")
            _same_sets(rule, c, p, glo=False)
        else:
            added = set(c.aux) - set(p.aux)
            _expect(len(added) == 1 and set(p.aux) <= set(c.aux), rule,
                    "aux-sets", "the conclusion adds exactly one auxiliary")
            _same_sets(rule, c, p, aux=False)
        v = added.pop()
        _same_fields(rule, c, p, ("pre", "rely", "wait", "eff"))
        rest = _split_chain(rule, "conclusion guar", "and", c.guar, p.guar)
        _expect(same(rest, App("=", (Var(v), Var(v, hooked=True)))), rule,
                "conclusion guar",
                "premise guar conjoined with a frame equality for the "
                "introduced variable")
        return []

    if rule == "introduction":
        want_premises(1)
        _expect(removal is not None, rule, "missing removal premise",
                "a removal leaf")
        p = premises[0].spec
        _expect(not p.aux, rule, "premise aux-set", "an empty aux-set")
        _expect(set(c.glo) == set(p.glo) - set(c.aux)
                and set(c.aux) <= set(p.glo), rule, "variable sets",
                "conclusion glo = premise glo minus the new aux-set")
        _same_fields(rule, c, p, ("pre", "rely", "wait", "guar", "eff"))
        _expect(removal.augmented == premises[0].program, rule,
                "removal augmented program", "the premise program")
        _expect(removal.plain == z, rule, "removal plain program",
                "the conclusion program")
        _expect(removal.glo == frozenset(c.glo)
                and removal.aux == frozenset(c.aux), rule,
                "removal variable sets", "the conclusion's glo and aux sets")
        return []

    raise SchemaError(rule, "unhandled rule", "a supported rule")


# ---------------------------------------------------------------------------
# Obligation discharge


_discharge_cache: dict[tuple, bool] = {}


def discharge_obligation(ob: Obligation, st: Structure) -> bool:
    """Validity by enumeration; wf via finite-carrier acyclicity."""
    key = (ob.claim, _norm(ob.body), id(st))
    got = _discharge_cache.get(key)
    if got is None:
        if ob.claim == "wf":
            got = well_founded(ob.body, st)
        elif ob.claim == "validity":
            got = valid(ob.body, st) is None
        else:
            raise SpecError(f"unknown obligation claim {ob.claim!r}")
        _discharge_cache[key] = got
    return got


# ---------------------------------------------------------------------------
# Whole trees


def check_proof_tree(root: ProofNode, st: Structure,
                     lsp_b: bool = False) -> ProofReport:
    """Bottom-up validation of every node; reports depth and first failure."""
    report = ProofReport(valid=True)

    if lsp_b:
        def scan(node: ProofNode, path: str) -> None:
            if node.rule == "introduction" or node.removal is not None:
                report.valid = False
                report.failures.append(
                    f"{path}: removals are not available in the basic system")
            for i, child in enumerate(node.premises):
                scan(child, f"{path}.{i + 1}")
        scan(root, "root")
        if not report.valid:
            return report

    def visit(node: ProofNode, path: str) -> int:
        depths = [0]
        for i, child in enumerate(node.premises):
            depths.append(visit(child, f"{path}.{i + 1}"))
        if not report.valid:
            return max(depths) + 1
        try:
            validate_specified_program(node.conclusion, st)
            obs = validate_rule_instance(
                node.rule, [p.conclusion for p in node.premises],
                node.conclusion, st, removal=node.removal,
                updates=node.updates)
        except (SchemaError, SpecError) as e:
            report.valid = False
            report.failures.append(f"{path}: {e}")
            return max(depths) + 1
        if node.removal is not None:
            if not check_removal(node.removal):
                report.valid = False
                report.failures.append(f"{path}: removal premise is not valid")
                return max(depths) + 1
        for ob in obs:
            report.obligations_checked += 1
            if not discharge_obligation(ob, st):
                report.valid = False
                report.failed_obligations.append(ob)
                report.failures.append(
                    f"{path}: obligation {ob.origin[1]} of the "
                    f"{ob.origin[0]}-rule does not hold")
                return max(depths) + 1
        return max(depths) + 1

    report.depth = visit(root, "root")
    return report
