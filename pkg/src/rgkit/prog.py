"""Program syntax for the parallel while-language, plus static validation.

Statements: skip, assignment, block with local declarations, sequencing,
if/while with boolean tests, binary parallel composition with explicit
grouping, and await.  Program expressions (tests and right-hand sides) are
hook- and quantifier-free.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import (App, Expr, Lit, Quant, Preserve, RelCompose, TransClose,
                      Var, free_names)
from .sorts import Sort, Structure


@dataclass(frozen=True)
class Program:
    pass


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Assign(Program):
    var: str
    rhs: Expr


@dataclass(frozen=True)
class Block(Program):
    decls: tuple[str, ...]
    body: Program


@dataclass(frozen=True)
class Seq(Program):
    left: Program
    right: Program


@dataclass(frozen=True)
class If(Program):
    test: Expr
    then: Program
    els: Program


@dataclass(frozen=True)
class While(Program):
    test: Expr
    body: Program


@dataclass(frozen=True)
class Par(Program):
    left: Program
    right: Program


@dataclass(frozen=True)
class Await(Program):
    test: Expr
    body: Program


@dataclass(frozen=True)
class Violation:
    constraint: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"[{self.constraint}] at {self.where}: {self.message}"


# ---------------------------------------------------------------------------
# Variable analyses


def declared_vars(z: Program) -> set[str]:
    """All variables declared by loc clauses anywhere in z."""
    out: set[str] = set()

    def walk(p: Program) -> None:
        if isinstance(p, Block):
            out.update(p.decls)
            walk(p.body)
        elif isinstance(p, Seq):
            walk(p.left), walk(p.right)
        elif isinstance(p, If):
            walk(p.then), walk(p.els)
        elif isinstance(p, (While, Await)):
            walk(p.body)
        elif isinstance(p, Par):
            walk(p.left), walk(p.right)
    walk(z)
    return out


def hid_set(z: Program) -> set[str]:
    """Variables declared in z or occurring in an if/while test of z.

    Await tests do not contribute.
    """
    out: set[str] = set()

    def walk(p: Program) -> None:
        if isinstance(p, Block):
            out.update(p.decls)
            walk(p.body)
        elif isinstance(p, Seq) or isinstance(p, Par):
            walk(p.left), walk(p.right)
        elif isinstance(p, If):
            out.update(free_names(p.test))
            walk(p.then), walk(p.els)
        elif isinstance(p, While):
            out.update(free_names(p.test))
            walk(p.body)
        elif isinstance(p, Await):
            walk(p.body)
    walk(z)
    return out


def free_vars(t) -> set[str]:
    """var[t]: unhooked versions of all free variables of a term or program.

    For programs every occurrence counts, declarations included.
    """
    if isinstance(t, Expr):
        return free_names(t)
    out: set[str] = set()

    def walk(p: Program) -> None:
        if isinstance(p, Skip):
            return
        if isinstance(p, Assign):
            out.add(p.var)
            out.update(free_names(p.rhs))
        elif isinstance(p, Block):
            out.update(p.decls)
            walk(p.body)
        elif isinstance(p, (Seq, Par)):
            walk(p.left), walk(p.right)
        elif isinstance(p, If):
            out.update(free_names(p.test))
            walk(p.then), walk(p.els)
        elif isinstance(p, (While, Await)):
            out.update(free_names(p.test))
            walk(p.body)
    walk(t)
    return out


def global_vars(z: Program) -> set[str]:
    return free_vars(z) - declared_vars(z)


# ---------------------------------------------------------------------------
# Sort inference for program expressions

_INT = object()   # polymorphic integer literal / arithmetic result
_BOOL = object()


@dataclass(frozen=True)
class _CollLit:
    """Sort of a collection literal: the kind plus the joined element sort.

    `elem is None` for the empty literal, which matches any target.
    """
    kind: str  # "seq" | "set"
    elem: object = None


def infer_sort(e: Expr, st: Structure, where: str, errs: list[Violation]):
    """Sort of a program expression; None when already reported."""
    def bad(msg: str):
        errs.append(Violation("sort", where, msg))
        return None

    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return _BOOL
        if isinstance(e.value, int):
            return _INT
        for s in st.sorts.values():
            if s.kind == "enum" and e.value in s.members:
                return s
        return bad(f"literal {e.value!r} belongs to no declared sort")
    if isinstance(e, Var):
        if e.hooked:
            return bad("hooked variable in a program expression")
        if e.name not in st.vars:
            errs.append(Violation("unknown-variable", where,
                                  f"undeclared variable {e.name!r}"))
            return None
        return st.vars[e.name]
    if isinstance(e, Quant):
        return bad("quantifier in a program expression")
    if isinstance(e, (Preserve, RelCompose, TransClose)):
        return bad("relation operator in a program expression")
    assert isinstance(e, App)
    args = [infer_sort(a, st, where, errs) for a in e.args]
    if any(a is None for a in args):
        return None
    op = e.op
    if op in ("and", "or", "implies", "iff"):
        if not all(_is_bool(a) for a in args):
            return bad(f"{op} expects boolean operands")
        return _BOOL
    if op == "not":
        return _BOOL if _is_bool(args[0]) else bad("not expects a boolean")
    if op in ("=", "!="):
        if not _compatible(args[0], args[1]):
            return bad("comparison of differently sorted operands")
        return _BOOL
    if op in ("<", "<=", ">", ">="):
        if not (_is_nat(args[0]) and _is_nat(args[1])
                and _compatible(args[0], args[1])):
            return bad(f"{op} expects numeric operands of one sort")
        return _BOOL
    if op in ("+", "-", "*"):
        if not (_is_nat(args[0]) and _is_nat(args[1])
                and _compatible(args[0], args[1])):
            return bad(f"{op} expects numeric operands of one sort")
        return _join(args[0], args[1])
    if op in ("addmod", "submod"):
        if not all(_is_nat(a) for a in args):
            return bad(f"{op} expects numeric operands")
        return _join(args[0], args[1])
    if op == "len":
        return _INT if _is_seq(args[0]) else bad("len expects a sequence")
    if op == "card":
        return _INT if _is_set(args[0]) else bad("card expects a set")
    if op == "index":
        if not _is_seq(args[0]):
            return bad("indexing expects a sequence")
        if not _is_nat(args[1]):
            return bad("index must be numeric")
        return args[0].elem
    if op == "concat":
        if not (_is_seq(args[0]) and _is_seq(args[1])
                and _compatible(args[0], args[1])):
            return bad("concatenation expects sequences of one sort")
        return _join(args[0], args[1])
    if op in ("max", "min"):
        if not _is_set(args[0]) or not _is_nat(args[0].elem):
            return bad(f"{op} expects a set of numbers")
        return args[0].elem
    if op in ("union", "inter", "diff"):
        if not (_is_set(args[0]) and _is_set(args[1])
                and _compatible(args[0], args[1])):
            return bad(f"{op} expects sets of one sort")
        return _join(args[0], args[1])
    if op in ("in", "notin"):
        if not _is_set(args[1]) or not _compatible(args[0], args[1].elem):
            return bad("membership expects an element and a matching set")
        return _BOOL
    if op in ("seq", "set"):
        elem = None
        for a in args:
            if elem is None or elem in (_INT, _BOOL):
                elem = a if _compatible(elem, a) or elem is None else elem
            if not _compatible(elem, a):
                return bad(f"{op} literal mixes element sorts")
        return _CollLit(op, elem)
    return bad(f"unknown operator {op!r}")


def _is_bool(s) -> bool:
    return s is _BOOL or (isinstance(s, Sort) and s.kind == "bool")


def _is_nat(s) -> bool:
    return s is _INT or (isinstance(s, Sort) and s.kind == "nat")


def _is_seq(s) -> bool:
    return (isinstance(s, Sort) and s.kind == "seq") \
        or (isinstance(s, _CollLit) and s.kind == "seq")


def _is_set(s) -> bool:
    return (isinstance(s, Sort) and s.kind == "set") \
        or (isinstance(s, _CollLit) and s.kind == "set")


def _elem_of(s):
    return s.elem


def _compatible(a, b) -> bool:
    if a is None or b is None:
        return True
    if a is _INT and _is_nat(b):
        return True
    if b is _INT and _is_nat(a):
        return True
    if a is _BOOL and _is_bool(b):
        return True
    if b is _BOOL and _is_bool(a):
        return True
    if isinstance(a, _CollLit):
        return _is_coll_kind(b, a.kind) and _compatible(a.elem, _elem_of(b))
    if isinstance(b, _CollLit):
        return _is_coll_kind(a, b.kind) and _compatible(b.elem, _elem_of(a))
    return a == b


def _is_coll_kind(s, kind: str) -> bool:
    return isinstance(s, (Sort, _CollLit)) and s.kind == kind


def _join(a, b):
    if a in (_INT, _BOOL) or a is None or isinstance(a, _CollLit):
        return b if isinstance(b, Sort) else a
    return a


def _assignable(target: Sort, value, st: Structure, rhs: Expr) -> bool:
    """Assignment compatibility, letting literals adopt the target sort."""
    if value is None:
        return True  # already reported
    if value is _INT:
        return target.kind == "nat"
    if value is _BOOL:
        return target.kind == "bool"
    if isinstance(value, _CollLit):
        return target.kind == value.kind \
            and _assignable(target.elem, value.elem, st, rhs) \
            if value.elem is not None else target.kind == value.kind
    return value == target


# ---------------------------------------------------------------------------
# Validation: the four supplementary constraints plus sort checks


def validate_program(z: Program, st: Structure) -> list[Violation]:
    """Empty list means the program is well formed.

    Violations carry a constraint id: "sort", "redeclaration",
    "local-escape", "init-before-read", "boolean-test", plus
    "unknown-variable"/"unknown-sort" for plain declaration errors.
    Await tests that read globals hidden by a sibling arm are legal; they
    are reported as notes by `await_global_test_notes`.
    """
    errs: list[Violation] = []
    _check_decls(z, st, errs)
    _check_sorts(z, st, errs)
    _check_boolean_tests(z, errs)
    locs = declared_vars(z)
    _check_init(z, frozenset(), frozenset(locs), errs)
    return errs


def _check_decls(z: Program, st: Structure, errs: list[Violation]) -> None:
    seen: set[str] = set()

    def walk(p: Program, path: str) -> None:
        if isinstance(p, Block):
            for v in p.decls:
                if v in seen:
                    errs.append(Violation(
                        "redeclaration", path,
                        f"variable {v!r} declared more than once"))
                seen.add(v)
                if v not in st.vars:
                    errs.append(Violation(
                        "unknown-variable", path,
                        f"declared variable {v!r} has no sort declaration"))
            walk(p.body, path + ".body")
        elif isinstance(p, Seq):
            walk(p.left, path + ".1"), walk(p.right, path + ".2")
        elif isinstance(p, If):
            walk(p.then, path + ".then"), walk(p.els, path + ".else")
        elif isinstance(p, (While, Await)):
            walk(p.body, path + ".body")
        elif isinstance(p, Par):
            walk(p.left, path + ".L"), walk(p.right, path + ".R")
    walk(z, "prog")

    # a local never appears outside its own block
    def escapes(p: Program, in_scope: frozenset) -> None:
        if isinstance(p, Assign):
            for v in {p.var} | free_names(p.rhs):
                if v in seen and v not in in_scope:
                    errs.append(Violation(
                        "local-escape", "prog",
                        f"local variable {v!r} used outside its block"))
        elif isinstance(p, Block):
            escapes(p.body, in_scope | set(p.decls))
        elif isinstance(p, Seq):
            escapes(p.left, in_scope), escapes(p.right, in_scope)
        elif isinstance(p, If):
            _test_escape(p.test, in_scope)
            escapes(p.then, in_scope), escapes(p.els, in_scope)
        elif isinstance(p, (While, Await)):
            _test_escape(p.test, in_scope)
            escapes(p.body, in_scope)
        elif isinstance(p, Par):
            escapes(p.left, in_scope), escapes(p.right, in_scope)

    def _test_escape(test: Expr, in_scope: frozenset) -> None:
        for v in free_names(test):
            if v in seen and v not in in_scope:
                errs.append(Violation(
                    "local-escape", "prog",
                    f"local variable {v!r} used outside its block"))

    escapes(z, frozenset())


def _check_sorts(z: Program, st: Structure, errs: list[Violation]) -> None:
    def walk(p: Program, path: str) -> None:
        if isinstance(p, Assign):
            if p.var not in st.vars:
                errs.append(Violation("unknown-variable", path,
                                      f"undeclared variable {p.var!r}"))
                return
            got = infer_sort(p.rhs, st, path, errs)
            target = st.vars[p.var]
            if not _assignable(target, got, st, p.rhs):
                errs.append(Violation(
                    "sort", path,
                    f"assignment to {p.var}:{target.name} from a "
                    f"differently sorted expression"))
        elif isinstance(p, Block):
            walk(p.body, path + ".body")
        elif isinstance(p, Seq):
            walk(p.left, path + ".1"), walk(p.right, path + ".2")
        elif isinstance(p, (If, While, Await)):
            got = infer_sort(p.test, st, path, errs)
            if got is not None and not _is_bool(got):
                errs.append(Violation("sort", path,
                                      "test is not boolean-sorted"))
            if isinstance(p, If):
                walk(p.then, path + ".then"), walk(p.els, path + ".else")
            else:
                walk(p.body, path + ".body")
        elif isinstance(p, Par):
            walk(p.left, path + ".L"), walk(p.right, path + ".R")
    walk(z, "prog")


def _check_boolean_tests(z: Program, errs: list[Violation]) -> None:
    def arm_check(arm: Program, path: str) -> None:
        locals_of_arm = declared_vars(arm)

        def tests(p: Program, q: str) -> None:
            if isinstance(p, (If, While)):
                outside = free_names(p.test) - locals_of_arm
                if outside:
                    errs.append(Violation(
                        "boolean-test", q,
                        f"test of a statement inside a parallel arm reads "
                        f"variables not local to the arm: {sorted(outside)}"))
            if isinstance(p, Block):
                tests(p.body, q + ".body")
            elif isinstance(p, Seq):
                tests(p.left, q + ".1"), tests(p.right, q + ".2")
            elif isinstance(p, If):
                tests(p.then, q + ".then"), tests(p.els, q + ".else")
            elif isinstance(p, (While, Await)):
                tests(p.body, q + ".body")
            elif isinstance(p, Par):
                tests(p.left, q + ".L"), tests(p.right, q + ".R")
        tests(arm, path)

    def walk(p: Program, path: str) -> None:
        if isinstance(p, Par):
            arm_check(p.left, path + ".L")
            arm_check(p.right, path + ".R")
            walk(p.left, path + ".L"), walk(p.right, path + ".R")
        elif isinstance(p, Block):
            walk(p.body, path + ".body")
        elif isinstance(p, Seq):
            walk(p.left, path + ".1"), walk(p.right, path + ".2")
        elif isinstance(p, If):
            walk(p.then, path + ".then"), walk(p.els, path + ".else")
        elif isinstance(p, (While, Await)):
            walk(p.body, path + ".body")
    walk(z, "prog")


def await_global_test_notes(z: Program) -> list[str]:
    """Awaits inside a parallel arm whose test reads non-arm variables."""
    notes: list[str] = []

    def arm_scan(arm: Program, path: str) -> None:
        locals_of_arm = declared_vars(arm)

        def scan(p: Program, q: str) -> None:
            if isinstance(p, Await):
                outside = free_names(p.test) - locals_of_arm
                if outside:
                    notes.append(
                        f"await test at {q} reads variables shared with the "
                        f"sibling arm: {sorted(outside)}")
                scan(p.body, q + ".body")
            elif isinstance(p, Block):
                scan(p.body, q + ".body")
            elif isinstance(p, Seq):
                scan(p.left, q + ".1"), scan(p.right, q + ".2")
            elif isinstance(p, If):
                scan(p.then, q + ".then"), scan(p.els, q + ".else")
            elif isinstance(p, While):
                scan(p.body, q + ".body")
            elif isinstance(p, Par):
                scan(p.left, q + ".L"), scan(p.right, q + ".R")
        scan(arm, path)

    def walk(p: Program, path: str) -> None:
        if isinstance(p, Par):
            arm_scan(p.left, path + ".L")
            arm_scan(p.right, path + ".R")
            walk(p.left, path + ".L"), walk(p.right, path + ".R")
        elif isinstance(p, Block):
            walk(p.body, path + ".body")
        elif isinstance(p, Seq):
            walk(p.left, path + ".1"), walk(p.right, path + ".2")
        elif isinstance(p, If):
            walk(p.then, path + ".then"), walk(p.els, path + ".else")
        elif isinstance(p, (While, Await)):
            walk(p.body, path + ".body")
    walk(z, "prog")
    return notes


def _check_init(z: Program, assigned: frozenset, locs: frozenset,
                errs: list[Violation]) -> frozenset:
    """Forward must-assign pass; returns the must-assigned set afterwards.

    Only locals need initialisation before a read; parallel arms are
    analysed independently.
    """
    def reads(e: Expr, have: frozenset, path: str) -> None:
        for v in free_names(e):
            if v in locs and v not in have:
                errs.append(Violation(
                    "init-before-read", path,
                    f"local variable {v!r} may be read before initialisation"))

    def go(p: Program, have: frozenset, path: str) -> frozenset:
        if isinstance(p, Skip):
            return have
        if isinstance(p, Assign):
            reads(p.rhs, have, path)
            return have | {p.var}
        if isinstance(p, Block):
            return go(p.body, have, path + ".body")
        if isinstance(p, Seq):
            mid = go(p.left, have, path + ".1")
            return go(p.right, mid, path + ".2")
        if isinstance(p, If):
            reads(p.test, have, path)
            a = go(p.then, have, path + ".then")
            b = go(p.els, have, path + ".else")
            return a & b
        if isinstance(p, While):
            reads(p.test, have, path)
            go(p.body, have, path + ".body")
            return have
        if isinstance(p, Await):
            reads(p.test, have, path)
            return go(p.body, have, path + ".body")
        if isinstance(p, Par):
            a = go(p.left, have, path + ".L")
            b = go(p.right, have, path + ".R")
            return a | b
        raise TypeError(p)

    return go(z, assigned, "prog")


# ---------------------------------------------------------------------------
# Pretty-printing (parse-stable)


def render_program(z: Program, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(z, Skip):
        return pad + "skip"
    if isinstance(z, Assign):
        return f"{pad}{z.var} := {render_expr(z.rhs)}"
    if isinstance(z, Block):
        body = render_program(z.body, indent + 1)
        return (f"{pad}begin loc {', '.join(z.decls)};\n{body}\n{pad}end")
    if isinstance(z, Seq):
        return f"{render_program(z.left, indent)};\n{render_program(z.right, indent)}"
    if isinstance(z, If):
        return (f"{pad}if {render_expr(z.test)} then\n"
                f"{render_program(z.then, indent + 1)}\n{pad}else\n"
                f"{render_program(z.els, indent + 1)}\n{pad}fi")
    if isinstance(z, While):
        return (f"{pad}while {render_expr(z.test)} do\n"
                f"{render_program(z.body, indent + 1)}\n{pad}od")
    if isinstance(z, Par):
        return (f"{pad}{{\n{render_program(z.left, indent + 1)}\n{pad}||\n"
                f"{render_program(z.right, indent + 1)}\n{pad}}}")
    if isinstance(z, Await):
        return (f"{pad}await {render_expr(z.test)} do\n"
                f"{render_program(z.body, indent + 1)}\n{pad}od")
    raise TypeError(z)


_PREC = {
    "iff": 1, "implies": 2, "or": 3, "and": 4, "not": 5,
    "=": 6, "!=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6,
    "in": 6, "notin": 6,
    "union": 7, "inter": 7, "diff": 7, "concat": 7,
    "+": 8, "-": 8, "*": 9,
}

_SYM = {"and": "/\\", "or": "\\/", "implies": "=>", "iff": "<=>",
        "union": "union", "inter": "inter", "diff": "diff",
        "concat": "++", "in": "in", "notin": "notin"}


def render_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        if isinstance(e.value, tuple):
            return "[" + ", ".join(render_expr(Lit(v)) for v in e.value) + "]"
        if isinstance(e.value, frozenset):
            return "{" + ", ".join(sorted(render_expr(Lit(v))
                                          for v in e.value)) + "}"
        return str(e.value)
    if isinstance(e, Var):
        return e.name + ("~" if e.hooked else "")
    if isinstance(e, Quant):
        bs = ", ".join(f"{n}{'~' if h else ''} : {s.name}"
                       for n, h, s in e.binders)
        body = render_expr(e.body, 1)
        s = f"{e.kind} {bs} . {body}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, RelCompose):
        s = f"{render_expr(e.left, 10)} | {render_expr(e.right, 10)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, TransClose):
        return f"{'star' if e.reflexive else 'closure'}({render_expr(e.body)})"
    if isinstance(e, Preserve):
        inner = f"preserve({render_expr(e.pre)}, {render_expr(e.step)})"
        return f"old({inner})" if e.hooked else inner
    assert isinstance(e, App)
    op = e.op
    if op == "not":
        return f"not {render_expr(e.args[0], _PREC['not'])}"
    if op == "seq":
        return "[" + ", ".join(render_expr(a) for a in e.args) + "]"
    if op == "set":
        return "{" + ", ".join(render_expr(a) for a in e.args) + "}"
    if op == "index":
        return f"{render_expr(e.args[0], 10)}[{render_expr(e.args[1])}]"
    if op in ("len", "card", "max", "min", "addmod", "submod"):
        return f"{op}(" + ", ".join(render_expr(a) for a in e.args) + ")"
    sym = _SYM.get(op, op)
    p = _PREC[op]
    if op == "implies":  # right-associative
        left = render_expr(e.args[0], p + 1)
        right = render_expr(e.args[1], p)
    else:
        left = render_expr(e.args[0], p)
        right = render_expr(e.args[1], p + 1)
    s = f"{left} {sym} {right}"
    return f"({s})" if prec > p else s
