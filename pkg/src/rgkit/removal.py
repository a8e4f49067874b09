"""Auxiliary-variable removal: relating augmented and plain programs.

An augmented program arises from a plain one by two substitution schemes:

  * an assignment `v := r` (outside await bodies) may become
    `await true do a1:=u1; ...; an:=un; v:=r od` with n >= 1 distinct
    auxiliary targets, each update reading only globals and its own target;
  * an await `await b do z od` (outside other awaits) becomes
    `await b do z'; a1:=u1; ...; an:=un od` where z' relates to z
    recursively and the trailing updates obey the same side conditions.

A wrapper with an empty update list is not distinguishable from the bare
assignment, so the empty instance of the first scheme is identified with
the assignment itself; this keeps erasure unique and makes every plain
program its own augmentation when the auxiliary set is empty.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import Lit, free_names
from .prog import (Assign, Await, Block, If, Par, Program, Seq, Skip, While,
                   free_vars, global_vars)


class RemovalError(Exception):
    """The program is not in augmentation shape for the given aux set."""


@dataclass(frozen=True)
class Removal:
    augmented: Program
    glo: frozenset[str]
    aux: frozenset[str]
    plain: Program

    def well_formed(self) -> tuple[bool, str]:
        if self.glo & self.aux:
            return False, "glo and aux sets overlap"
        if free_vars(self.plain) & self.aux:
            return False, "auxiliary variable occurs in the plain program"
        globs = global_vars(self.plain)
        if not globs <= self.glo:
            return False, f"plain globals missing from glo: {sorted(globs - self.glo)}"
        extra_local = {v for v in self.glo if v in free_vars(self.plain)} - globs
        if extra_local:
            return False, f"glo contains plain locals: {sorted(extra_local)}"
        return True, ""


def _mentions_aux(e, aux: frozenset) -> bool:
    return bool(free_names(e) & aux)


def _peel_trailing_aux(body: Program, aux: frozenset):
    """Split an await body into (core, trailing aux assignments).

    Peels assignment leaves off the right spine while their target is
    auxiliary; association of the remaining tree is preserved.
    """
    tail: list[Assign] = []

    def rightmost(p: Program):
        if isinstance(p, Seq):
            rest, leaf = rightmost(p.right)
            if leaf is None:
                return p, None
            if rest is None:
                return p.left, leaf
            return Seq(p.left, rest), leaf
        if isinstance(p, Assign) and p.var in aux:
            return None, p
        return p, None

    core = body
    while True:
        rest, leaf = rightmost(core)
        if leaf is None:
            return core, tail
        tail.insert(0, leaf)
        if rest is None:
            return None, tail
        core = rest


def _updates_ok(tail: list[Assign], glo: frozenset, aux: frozenset) -> bool:
    targets = [a.var for a in tail]
    if len(set(targets)) != len(targets):
        return False
    for a in tail:
        if a.var not in aux:
            return False
        if not free_names(a.rhs) <= (glo | {a.var}):
            return False
    return True


def check_removal(r: Removal) -> bool:
    """Validity of the removal: augmented arises from plain by the schemes."""
    ok, _ = r.well_formed()
    if not ok:
        return False
    return _match(r.augmented, r.plain, r.glo, r.aux)


def _match(z1: Program, z2: Program, glo: frozenset, aux: frozenset) -> bool:
    if isinstance(z1, Skip) and isinstance(z2, Skip):
        return True
    if isinstance(z1, Assign) and isinstance(z2, Assign):
        return z1 == z2 and not _mentions_aux(z1.rhs, aux) and z1.var not in aux
    if isinstance(z1, Await) and isinstance(z2, Assign):
        # first scheme: await true wrapper with a nonempty update prefix
        if z1.test != Lit(True):
            return False
        stmts = _flatten_seq(z1.body)
        if len(stmts) < 2:
            return False
        *prefix, last = stmts
        if not all(isinstance(a, Assign) for a in prefix):
            return False
        if not _updates_ok(list(prefix), glo, aux):
            return False
        return (isinstance(last, Assign) and last == z2
                and last.var not in aux and not _mentions_aux(last.rhs, aux))
    if isinstance(z1, Await) and isinstance(z2, Await):
        if z1.test != z2.test or _mentions_aux(z1.test, aux):
            return False
        core, tail = _peel_trailing_aux(z1.body, aux)
        if core is None or not _updates_ok(tail, glo, aux):
            return False
        return _match(core, z2.body, glo, aux)
    if isinstance(z1, Block) and isinstance(z2, Block):
        return z1.decls == z2.decls and not (set(z1.decls) & aux) \
            and _match(z1.body, z2.body, glo, aux)
    if isinstance(z1, Seq) and isinstance(z2, Seq):
        return (_match(z1.left, z2.left, glo, aux)
                and _match(z1.right, z2.right, glo, aux))
    if isinstance(z1, If) and isinstance(z2, If):
        return (z1.test == z2.test and not _mentions_aux(z1.test, aux)
                and _match(z1.then, z2.then, glo, aux)
                and _match(z1.els, z2.els, glo, aux))
    if isinstance(z1, While) and isinstance(z2, While):
        return (z1.test == z2.test and not _mentions_aux(z1.test, aux)
                and _match(z1.body, z2.body, glo, aux))
    if isinstance(z1, Par) and isinstance(z2, Par):
        return (_match(z1.left, z2.left, glo, aux)
                and _match(z1.right, z2.right, glo, aux))
    return False


def _flatten_seq(p: Program) -> list[Program]:
    if isinstance(p, Seq):
        return _flatten_seq(p.left) + _flatten_seq(p.right)
    return [p]


def erase_auxiliary(z1: Program, aux: set[str] | frozenset[str]) -> Program:
    """The unique plain program related to z1 by the removal schemes.

    Raises RemovalError naming the offending statement when z1 is not in
    augmentation shape with respect to aux.  The glo-set of the resulting
    removal is the global set of the erased program.
    """
    aux = frozenset(aux)
    plain = _erase(z1, aux)
    glo = frozenset(global_vars(plain))
    if not check_removal(Removal(z1, glo, aux, plain)):
        raise RemovalError(
            "augmentation shape violated: an auxiliary update reads a "
            "variable outside the globals of the erased program")
    return plain


def _erase(z: Program, aux: frozenset) -> Program:
    from .prog import render_program

    def offend(msg: str, node: Program):
        raise RemovalError(f"{msg}: {render_program(node)}")

    if isinstance(z, Skip):
        return z
    if isinstance(z, Assign):
        if z.var in aux or _mentions_aux(z.rhs, aux):
            offend("bare auxiliary assignment outside a wrapper", z)
        return z
    if isinstance(z, Await):
        if _mentions_aux(z.test, aux):
            offend("auxiliary variable in an await test", z)
        # first scheme?
        if z.test == Lit(True):
            stmts = _flatten_seq(z.body)
            if len(stmts) >= 2 and all(isinstance(s, Assign) for s in stmts):
                *prefix, last = stmts
                if (all(s.var in aux for s in prefix)
                        and isinstance(last, Assign) and last.var not in aux):
                    targets = [s.var for s in prefix]
                    if len(set(targets)) != len(targets):
                        offend("duplicate auxiliary update targets", z)
                    for s in prefix:
                        if free_names(s.rhs) & (aux - {s.var}):
                            offend("auxiliary update reads another "
                                   "auxiliary variable", s)
                    if _mentions_aux(last.rhs, aux):
                        offend("auxiliary variable in the main assignment", z)
                    return last
        core, tail = _peel_trailing_aux(z.body, aux)
        if core is None:
            offend("await body consists only of auxiliary updates", z)
        targets = [a.var for a in tail]
        if len(set(targets)) != len(targets):
            offend("duplicate auxiliary update targets", z)
        for a in tail:
            if free_names(a.rhs) & (aux - {a.var}):
                offend("auxiliary update reads another auxiliary variable", a)
        return Await(z.test, _erase(core, aux))
    if isinstance(z, Block):
        if set(z.decls) & aux:
            offend("auxiliary variable declared as a local", z)
        return Block(z.decls, _erase(z.body, aux))
    if isinstance(z, Seq):
        return Seq(_erase(z.left, aux),
                   _erase(z.right, aux))
    if isinstance(z, If):
        if _mentions_aux(z.test, aux):
            offend("auxiliary variable in an if test", z)
        return If(z.test, _erase(z.then, aux),
                  _erase(z.els, aux))
    if isinstance(z, While):
        if _mentions_aux(z.test, aux):
            offend("auxiliary variable in a while test", z)
        return While(z.test, _erase(z.body, aux))
    if isinstance(z, Par):
        return Par(_erase(z.left, aux),
                   _erase(z.right, aux))
    raise TypeError(z)
