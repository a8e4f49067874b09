"""Text format for verification problems.

A source file is a sequence of sections::

    sorts   NAME = bool | nat LO..HI | enum {A, B}
            NAME = seq of ELEM max N | set of ELEM          ... end
    vars    x, y : SortName ...                              end
    aux     a : SortName ...                                 end
    program <statements>                                     end
    spec    curly|square
            glo x, y
            aux a
            pre/rely/wait/guar/eff <assertion>               end
    witness <statements>                                     end
    proof   node rule { ... }                                end

Assertions use `v~` for the hooked (old-state) variable, `/\\`, `\\/`,
`=>`, `<=>`, `not`, quantifiers `forall x : S . ...`, the identity frame
`I` / `I[x, y]`, relational composition `A | B`, `closure(A)`, `star(A)`,
`preserve(P, R)` and `old(...)` for hooking a subformula.  One file holds
one specified program plus an optional proof and witness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .formula import (App, Expr, Lit, Preserve, Quant, RelCompose, TransClose,
                      Var, hook_expression, identity_frame)
from .prog import (Assign, Await, Block, If, Par, Program, Seq, Skip, While)
from .proofs import ProofNode, RULE_NAMES
from .removal import Removal
from .satcheck import Specification, SpecifiedProgram
from .sorts import (Sort, Structure, bool_sort, enum_sort, nat_sort, seq_sort,
                    set_sort)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass
class SourceFile:
    sorts: dict[str, Sort] = field(default_factory=dict)
    vars: dict[str, Sort] = field(default_factory=dict)
    aux_vars: dict[str, Sort] = field(default_factory=dict)
    program: Optional[Program] = None
    spec: Optional[Specification] = None
    bracket: str = "curly"
    witness: Optional[Program] = None
    proof: Optional[ProofNode] = None

    def structure(self) -> Structure:
        all_vars = dict(self.vars)
        all_vars.update(self.aux_vars)
        return Structure(sorts=dict(self.sorts), vars=all_vars)

    def specified_program(self) -> SpecifiedProgram:
        if self.program is None or self.spec is None:
            raise ValueError("file lacks a program or spec section")
        return SpecifiedProgram(self.program, self.spec, self.bracket)


_TOKEN_RE = re.compile(r"""
  (?P<ws>[ \t\r\n]+)
| (?P<comment>\#[^\n]*)
| (?P<num>\d+)
| (?P<name>[A-Za-z_][A-Za-z0-9_]*)
| (?P<op>:=|\.\.|\+\+|/\\|\\/|=>|<=>|!=|<=|>=|\|\||[()\[\]{},.:;=<>+\-*|~\\])
""", re.VERBOSE)

_KEYWORDS = {
    "sorts", "vars", "aux", "program", "spec", "witness", "proof", "end",
    "bool", "nat", "enum", "seq", "set", "of", "max", "min",
    "skip", "begin", "loc", "if", "then", "else", "fi", "while", "do", "od",
    "await", "true", "false", "not", "and", "or", "in", "notin",
    "union", "inter", "diff", "len", "card", "addmod", "submod",
    "closure", "star", "preserve", "old", "I",
    "forall", "exists", "glo", "pre", "rely", "wait", "guar", "eff",
    "curly", "square", "node", "from", "prog", "updates", "removal",
    "augmented", "bracket",
}

_RULE_TOKENS = {name.replace("-", "_"): name for name in RULE_NAMES}


@dataclass
class Token:
    kind: str  # "num" | "name" | "op" | "kw" | "eof"
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            if kind == "name" and text in _KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0
        self.file = SourceFile()
        self.scope: tuple[str, ...] = ()

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind in ("op", "kw", "name")

    def eat(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}",
                             t.line, t.col)
        return self.next()

    def name(self, what: str = "a name") -> str:
        t = self.peek()
        if t.kind != "name":
            raise ParseError(f"expected {what}, found {t.text!r}",
                             t.line, t.col)
        return self.next().text

    def err(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg + f" (found {t.text!r})", t.line, t.col)

    # -- file

    def parse_file(self) -> SourceFile:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "sorts":
                self.next()
                self.parse_sorts()
            elif t.text == "vars":
                self.next()
                self.parse_vardecls(self.file.vars)
            elif t.text == "aux":
                self.next()
                self.parse_vardecls(self.file.aux_vars)
            elif t.text == "program":
                self.next()
                self.file.program = self.parse_program_until(("end",))
                self.eat("end")
            elif t.text == "witness":
                self.next()
                self.file.witness = self.parse_program_until(("end",))
                self.eat("end")
            elif t.text == "spec":
                self.next()
                self.parse_spec()
            elif t.text == "proof":
                self.next()
                self.file.proof = self.parse_proof_node()
                self.eat("end")
            else:
                raise self.err("expected a section keyword")
        return self.file

    def parse_sorts(self) -> None:
        while not self.at("end"):
            name = self.name("a sort name")
            self.eat("=")
            self.file.sorts[name] = self.parse_sort_expr(name)
        self.eat("end")

    def parse_sort_expr(self, name: str) -> Sort:
        t = self.next()
        if t.text == "bool":
            return bool_sort(name)
        if t.text == "nat":
            lo = int(self.next().text)
            self.eat("..")
            hi = int(self.next().text)
            return nat_sort(name, lo, hi)
        if t.text == "enum":
            self.eat("{")
            members = [self.name("an enum member")]
            while self.at(","):
                self.next()
                members.append(self.name("an enum member"))
            self.eat("}")
            return enum_sort(name, tuple(members))
        if t.text == "seq":
            self.eat("of")
            elem = self.sort_ref()
            self.eat("max")
            n = int(self.next().text)
            return seq_sort(name, elem, n)
        if t.text == "set":
            self.eat("of")
            elem = self.sort_ref()
            return set_sort(name, elem)
        raise ParseError(f"unknown sort form {t.text!r}", t.line, t.col)

    def sort_ref(self) -> Sort:
        t = self.peek()
        name = self.name("a sort name")
        if name not in self.file.sorts:
            raise ParseError(f"undeclared sort {name!r}", t.line, t.col)
        return self.file.sorts[name]

    def parse_vardecls(self, into: dict[str, Sort]) -> None:
        while not self.at("end"):
            names = [self.name("a variable name")]
            while self.at(","):
                self.next()
                names.append(self.name("a variable name"))
            self.eat(":")
            sort = self.sort_ref()
            for n in names:
                if n in self.file.vars or n in self.file.aux_vars:
                    t = self.peek()
                    raise ParseError(f"variable {n!r} declared twice",
                                     t.line, t.col)
                into[n] = sort
        self.eat("end")

    def parse_namelist(self) -> tuple[str, ...]:
        names: list[str] = []
        if self.peek().kind == "name":
            names.append(self.name())
            while self.at(","):
                self.next()
                names.append(self.name())
        return tuple(names)

    def parse_spec(self) -> None:
        bracket = self.next().text
        if bracket not in ("curly", "square"):
            raise self.err("expected curly or square")
        self.file.bracket = bracket
        glo, aux, fields = self.parse_spec_fields(
            default_aux=tuple(self.file.aux_vars))
        self.file.spec = Specification(glo, aux, *fields)
        self.eat("end")

    def parse_spec_fields(self, default_aux: tuple[str, ...] = ()
                          ) -> tuple[tuple, tuple, list[Expr]]:
        glo: tuple[str, ...] = ()
        aux: tuple[str, ...] = default_aux
        if self.at("glo"):
            self.next()
            glo = self.parse_namelist()
        if self.at("aux"):
            self.next()
            aux = self.parse_namelist()
        self.scope = glo + aux
        fields = []
        for kw in ("pre", "rely", "wait", "guar", "eff"):
            self.eat(kw)
            fields.append(self.parse_expr())
        return glo, aux, fields

    # -- programs

    def parse_program_until(self, stops: tuple[str, ...]) -> Program:
        stmts = [self.parse_stmt()]
        while self.at(";"):
            self.next()
            stmts.append(self.parse_stmt())
        t = self.peek()
        if t.text not in stops:
            raise self.err("expected " + " or ".join(repr(s) for s in stops))
        out = stmts[-1]
        for s in reversed(stmts[:-1]):
            out = Seq(s, out)
        return out

    def parse_stmt(self) -> Program:
        t = self.peek()
        if t.text == "skip":
            self.next()
            return Skip()
        if t.text == "begin":
            self.next()
            self.eat("loc")
            decls = [self.name("a local variable")]
            while self.at(","):
                self.next()
                decls.append(self.name("a local variable"))
            self.eat(";")
            body = self.parse_program_until(("end",))
            self.eat("end")
            return Block(tuple(decls), body)
        if t.text == "if":
            self.next()
            test = self.parse_expr()
            self.eat("then")
            then = self.parse_program_until(("else",))
            self.eat("else")
            els = self.parse_program_until(("fi",))
            self.eat("fi")
            return If(test, then, els)
        if t.text == "while":
            self.next()
            test = self.parse_expr()
            self.eat("do")
            body = self.parse_program_until(("od",))
            self.eat("od")
            return While(test, body)
        if t.text == "await":
            self.next()
            test = self.parse_expr()
            self.eat("do")
            body = self.parse_program_until(("od",))
            self.eat("od")
            return Await(test, body)
        if t.text == "{":
            self.next()
            left = self.parse_program_until(("||",))
            self.eat("||")
            right = self.parse_program_until(("}",))
            self.eat("}")
            return Par(left, right)
        if t.kind == "name":
            var = self.name()
            self.eat(":=")
            rhs = self.parse_expr()
            return Assign(var, rhs)
        raise self.err("expected a statement")

    # -- assertions / expressions (precedence climbing)

    def parse_expr(self) -> Expr:
        return self.parse_compose()

    def parse_compose(self) -> Expr:
        left = self.parse_iff()
        while self.at("|"):
            self.next()
            right = self.parse_iff()
            left = RelCompose(left, right)
        return left

    def parse_iff(self) -> Expr:
        left = self.parse_implies()
        while self.at("<=>"):
            self.next()
            left = App("iff", (left, self.parse_implies()))
        return left

    def parse_implies(self) -> Expr:
        left = self.parse_or()
        if self.at("=>"):
            self.next()
            return App("implies", (left, self.parse_implies()))
        return left

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at("\\/") or self.at("or"):
            self.next()
            left = App("or", (left, self.parse_and()))
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at("/\\") or self.at("and"):
            self.next()
            left = App("and", (left, self.parse_not()))
        return left

    def parse_not(self) -> Expr:
        if self.at("not"):
            self.next()
            return App("not", (self.parse_not(),))
        return self.parse_cmp()

    _CMP = ("=", "!=", "<", "<=", ">", ">=")

    def parse_cmp(self) -> Expr:
        left = self.parse_additive()
        t = self.peek()
        if t.text in self._CMP and t.kind == "op":
            self.next()
            return App(t.text, (left, self.parse_additive()))
        if self.at("in") or self.at("notin"):
            op = self.next().text
            return App(op, (left, self.parse_additive()))
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_mult()
        while True:
            t = self.peek()
            if t.text in ("+", "-") and t.kind == "op":
                self.next()
                left = App(t.text, (left, self.parse_mult()))
            elif t.text == "++":
                self.next()
                left = App("concat", (left, self.parse_mult()))
            elif t.text in ("union", "diff") and t.kind == "kw":
                self.next()
                left = App(t.text, (left, self.parse_mult()))
            elif t.text == "\\":
                self.next()
                left = App("diff", (left, self.parse_mult()))
            else:
                return left

    def parse_mult(self) -> Expr:
        left = self.parse_postfix()
        while True:
            t = self.peek()
            if t.text == "*" and t.kind == "op":
                self.next()
                left = App("*", (left, self.parse_postfix()))
            elif t.text == "inter":
                self.next()
                left = App("inter", (left, self.parse_postfix()))
            else:
                return left

    def parse_postfix(self) -> Expr:
        e = self.parse_atom()
        while True:
            if self.at("["):
                self.next()
                idx = self.parse_expr()
                self.eat("]")
                e = App("index", (e, idx))
            elif self.at("~"):
                t = self.next()
                if not isinstance(e, Var) or e.hooked:
                    raise ParseError("~ attaches to an unhooked variable",
                                     t.line, t.col)
                e = Var(e.name, hooked=True)
            else:
                return e

    _FUNCS = {"len": 1, "card": 1, "max": 1, "min": 1,
              "addmod": 3, "submod": 3}

    def parse_atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Lit(int(t.text))
        if t.text == "true":
            self.next()
            return Lit(True)
        if t.text == "false":
            self.next()
            return Lit(False)
        if t.text in self._FUNCS:
            self.next()
            self.eat("(")
            args = [self.parse_expr()]
            while self.at(","):
                self.next()
                args.append(self.parse_expr())
            self.eat(")")
            if len(args) != self._FUNCS[t.text]:
                raise ParseError(f"{t.text} takes {self._FUNCS[t.text]} "
                                 f"arguments", t.line, t.col)
            return App(t.text, tuple(args))
        if t.text in ("closure", "star"):
            self.next()
            self.eat("(")
            body = self.parse_expr()
            self.eat(")")
            if t.text == "closure":
                return TransClose(body)
            ident = identity_frame(set(), self.scope)
            return TransClose(App("or", (body, ident)))
        if t.text == "preserve":
            self.next()
            self.eat("(")
            pre = self.parse_expr()
            self.eat(",")
            step = self.parse_expr()
            self.eat(")")
            return Preserve(pre, step)
        if t.text == "old":
            self.next()
            self.eat("(")
            body = self.parse_expr()
            self.eat(")")
            return hook_expression(body)
        if t.text == "I":
            self.next()
            changeable: set[str] = set()
            if self.at("["):
                self.next()
                while not self.at("]"):
                    changeable.add(self.name("a variable"))
                    if self.at(","):
                        self.next()
                self.eat("]")
            return identity_frame(changeable, self.scope)
        if t.text in ("forall", "exists"):
            kind = self.next().text
            binders = []
            pending: list[tuple[str, bool]] = []
            while True:
                n = self.name("a bound variable")
                hooked = False
                if self.at("~"):
                    self.next()
                    hooked = True
                pending.append((n, hooked))
                if self.at(":"):
                    self.next()
                    sort = self.sort_ref()
                    binders.extend((n, h, sort) for n, h in pending)
                    pending = []
                if self.at(","):
                    self.next()
                    continue
                break
            for (n, h) in pending:
                sort = self.file.vars.get(n) or self.file.aux_vars.get(n)
                if sort is None:
                    raise self.err(f"bound variable {n!r} needs a sort")
                binders.append((n, h, sort))
            self.eat(".")
            body = self.parse_iff()
            return Quant(kind, tuple(binders), body)
        if t.text == "(":
            self.next()
            e = self.parse_expr()
            self.eat(")")
            return e
        if t.text == "[":
            self.next()
            args = []
            while not self.at("]"):
                args.append(self.parse_expr())
                if self.at(","):
                    self.next()
            self.eat("]")
            return App("seq", tuple(args))
        if t.text == "{":
            self.next()
            args = []
            while not self.at("}"):
                args.append(self.parse_expr())
                if self.at(","):
                    self.next()
            self.eat("}")
            return App("set", tuple(args))
        if t.kind == "name":
            self.next()
            # enum members are plain names; declared variables shadow them
            if t.text not in self.file.vars and t.text not in self.file.aux_vars:
                for sort in self.file.sorts.values():
                    if sort.kind == "enum" and t.text in sort.members:
                        return Lit(t.text)
            return Var(t.text)
        raise self.err("expected an expression")

    # -- proof trees

    def parse_proof_node(self) -> ProofNode:
        self.eat("node")
        t = self.peek()
        if t.kind not in ("name", "kw"):
            raise ParseError(f"expected a rule name, found {t.text!r}",
                             t.line, t.col)
        rule_tok = self.next().text
        rule = _RULE_TOKENS.get(rule_tok)
        if rule is None:
            raise ParseError(f"unknown rule {rule_tok!r}", t.line, t.col)
        self.eat("{")
        self.eat("prog")
        self.eat("{")
        prog = self.parse_program_until(("}",))
        self.eat("}")
        bracket = "curly"
        if self.at("bracket"):
            self.next()
            bracket = self.next().text
            if bracket not in ("curly", "square"):
                raise self.err("expected curly or square")
        outer_scope = self.scope
        glo, aux, fields = self.parse_spec_fields()
        spec = Specification(glo, aux, *fields)
        node = ProofNode(SpecifiedProgram(prog, spec, bracket), rule)
        if self.at("updates"):
            self.next()
            self.eat("{")
            while not self.at("}"):
                var = self.name("an auxiliary variable")
                self.eat(":=")
                node.updates[var] = self.parse_expr()
                if self.at(";"):
                    self.next()
            self.eat("}")
        if self.at("removal"):
            self.next()
            self.eat("{")
            self.eat("glo")
            rglo = self.parse_namelist()
            self.eat("aux")
            raux = self.parse_namelist()
            self.eat("augmented")
            self.eat("{")
            augmented = self.parse_program_until(("}",))
            self.eat("}")
            self.eat("}")
            node.removal = Removal(augmented, frozenset(rglo),
                                   frozenset(raux), prog)
        if self.at("from"):
            self.next()
            self.eat("{")
            while self.at("node"):
                child = self.parse_proof_node()
                node.premises.append(child)
                self.scope = glo + aux
            self.eat("}")
        self.eat("}")
        self.scope = outer_scope
        return node


def parse_source(text: str) -> SourceFile:
    """Parse a verification problem file; raises ParseError with position."""
    return Parser(text).parse_file()


def parse_program(text: str, scope: tuple[str, ...] = (),
                  sorts: dict[str, Sort] | None = None,
                  vars: dict[str, Sort] | None = None) -> Program:
    p = Parser(text)
    p.scope = scope
    if sorts:
        p.file.sorts.update(sorts)
    if vars:
        p.file.vars.update(vars)
    out = p.parse_program_until(("",))
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return out


def parse_assertion(text: str, scope: tuple[str, ...] = (),
                    sorts: dict[str, Sort] | None = None,
                    vars: dict[str, Sort] | None = None) -> Expr:
    p = Parser(text)
    p.scope = scope
    if sorts:
        p.file.sorts.update(sorts)
    if vars:
        p.file.vars.update(vars)
    out = p.parse_expr()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return out
