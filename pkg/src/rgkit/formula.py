"""Assertion syntax and brute-force semantics over finite structures.

Assertions are first-order formulas over hooked (old-state, written `v~`)
and unhooked (new-state) variables.  A binary assertion denotes a set of
state pairs, a unary assertion (no hooks) also denotes a set of states.

The relation-valued operators (composition `A|B`, transitive closure,
preservation `A^B`) materialise explicit extensions over the free
variables of their operands; the scopes are finite by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sorts import Sort, State, Structure, Value


class EvalError(Exception):
    """Evaluation failed: bad index, empty max/min, missing old state, ..."""


class FormulaError(Exception):
    """Ill-formed assertion (unknown variable, bound/free clash, ...)."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str
    hooked: bool = False


@dataclass(frozen=True)
class Lit(Expr):
    value: Value


@dataclass(frozen=True)
class App(Expr):
    op: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Quant(Expr):
    """forall/exists over declared sorts; binders may bind hooked twins."""
    kind: str  # "forall" | "exists"
    binders: tuple[tuple[str, bool, Sort], ...]  # (name, hooked, sort)
    body: Expr


@dataclass(frozen=True)
class RelCompose(Expr):
    """A|B: relational composition of two binary assertions."""
    left: Expr
    right: Expr


@dataclass(frozen=True)
class TransClose(Expr):
    """A+ : least transitive relation containing A.

    With `reflexive`, the closure starts from A or-ed with the identity on
    A's projection variables.  The surface syntax `star(A)` is desugared by
    the parser to a closure over A or-ed with the explicit scope identity,
    which matches the context-dependent identity of the star operator.
    """
    body: Expr
    reflexive: bool = False


@dataclass(frozen=True)
class Preserve(Expr):
    """A^B: least state set containing [[A]] and closed under B-successors.

    Unary; with hooked=True membership is tested against the old state.
    """
    pre: Expr
    step: Expr
    hooked: bool = False


TRUE = Lit(True)
FALSE = Lit(False)

_CONNECTIVES = ("and", "or", "implies", "iff", "not")
_INT_OPS = ("+", "-", "*", "addmod", "submod")
_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
_SEQ_OPS = ("len", "index", "concat", "seq")
_SET_OPS = ("card", "max", "min", "union", "inter", "diff", "in", "notin",
            "set")


def conj(parts: list[Expr]) -> Expr:
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = App("and", (out, p))
    return out


def disj(parts: list[Expr]) -> Expr:
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = App("or", (out, p))
    return out


def flatten(op: str, e: Expr) -> list[Expr]:
    """Flatten nested `op` applications (associativity-insensitive views)."""
    if isinstance(e, App) and e.op == op:
        return flatten(op, e.args[0]) + flatten(op, e.args[1])
    return [e]


# ---------------------------------------------------------------------------
# Variable analyses


def free_occurrences(e: Expr) -> set[tuple[str, bool]]:
    """Free (name, hooked) occurrences."""
    out: set[tuple[str, bool]] = set()
    _free(e, frozenset(), out)
    return out


def _free(e: Expr, bound: frozenset, out: set) -> None:
    if isinstance(e, Var):
        if (e.name, e.hooked) not in bound:
            out.add((e.name, e.hooked))
    elif isinstance(e, App):
        for a in e.args:
            _free(a, bound, out)
    elif isinstance(e, Quant):
        inner = bound | {(n, h) for n, h, _ in e.binders}
        _free(e.body, inner, out)
    elif isinstance(e, (RelCompose, TransClose)):
        # denotes a relation over the union of the operand variables: the
        # evaluation reads the old and new values of every projection name
        sub: set = set()
        if isinstance(e, RelCompose):
            _free(e.left, frozenset(), sub)
            _free(e.right, frozenset(), sub)
        else:
            _free(e.body, frozenset(), sub)
        for n, _ in sub:
            for h in (False, True):
                if (n, h) not in bound:
                    out.add((n, h))
    elif isinstance(e, Preserve):
        # unary: membership is tested on one side only
        sub = set()
        _free(e.pre, frozenset(), sub)
        _free(e.step, frozenset(), sub)
        for n, _ in sub:
            if (n, e.hooked) not in bound:
                out.add((n, e.hooked))


def free_names(e: Expr) -> set[str]:
    """Unhooked versions of all free (hooked or unhooked) variables."""
    return {n for n, _ in free_occurrences(e)}


def bound_names(e: Expr) -> set[str]:
    out: set[str] = set()
    _bound(e, out)
    return out


def _bound(e: Expr, out: set) -> None:
    if isinstance(e, App):
        for a in e.args:
            _bound(a, out)
    elif isinstance(e, Quant):
        out.update(n for n, _, _ in e.binders)
        _bound(e.body, out)
    elif isinstance(e, RelCompose):
        _bound(e.left, out)
        _bound(e.right, out)
    elif isinstance(e, TransClose):
        _bound(e.body, out)
    elif isinstance(e, Preserve):
        _bound(e.pre, out)
        _bound(e.step, out)


def has_hooks(e: Expr) -> bool:
    return any(h for _, h in free_occurrences(e))


def check_wellformed(e: Expr, st: Structure) -> None:
    """Free unhooked vars declared; no variable both bound and free."""
    clash = bound_names(e) & free_names(e)
    if clash:
        raise FormulaError(
            f"variables both bound and free in the same formula: {sorted(clash)}")
    for name in free_names(e):
        if name not in st.vars:
            raise FormulaError(f"undeclared variable {name!r} in assertion")


def hook_expression(e: Expr) -> Expr:
    """Replace every free unhooked occurrence by its hooked twin."""
    return _hook(e, frozenset())


def unhook_expression(e: Expr) -> Expr:
    """Replace every free hooked occurrence by its unhooked twin.

    Diagonal substitution: A with v~ := v holds at s iff (s, s) |= A.
    """
    return _unhook(e, frozenset())


def _unhook(e: Expr, bound: frozenset) -> Expr:
    if isinstance(e, Var):
        if e.hooked and e.name not in bound:
            return Var(e.name, hooked=False)
        return e
    if isinstance(e, Lit):
        return e
    if isinstance(e, App):
        return App(e.op, tuple(_unhook(a, bound) for a in e.args))
    if isinstance(e, Quant):
        inner = bound | {n for n, h, _ in e.binders if h}
        return Quant(e.kind, e.binders, _unhook(e.body, inner))
    if isinstance(e, Preserve):
        return Preserve(e.pre, e.step, hooked=False)
    raise FormulaError(f"cannot unhook a relation-valued operator: {e}")


def _hook(e: Expr, bound: frozenset) -> Expr:
    if isinstance(e, Var):
        if not e.hooked and e.name not in bound:
            return Var(e.name, hooked=True)
        return e
    if isinstance(e, Lit):
        return e
    if isinstance(e, App):
        return App(e.op, tuple(_hook(a, bound) for a in e.args))
    if isinstance(e, Quant):
        inner = bound | {n for n, h, _ in e.binders if not h}
        return Quant(e.kind, e.binders, _hook(e.body, inner))
    if isinstance(e, Preserve):
        return Preserve(e.pre, e.step, hooked=True)
    raise FormulaError(f"cannot hook a relation-valued operator: {e}")


def identity_frame(changeable: set[str] | frozenset[str],
                   scope: tuple[str, ...] | list[str]) -> Expr:
    """Conjunction v = v~ over scope minus the changeable set.

    `identity_frame(set(), scope)` is the full identity I.
    """
    bad = set(changeable) - set(scope)
    if bad:
        raise FormulaError(f"changeable variables outside scope: {sorted(bad)}")
    parts = [App("=", (Var(v), Var(v, hooked=True)))
             for v in scope if v not in changeable]
    return conj(parts)


# ---------------------------------------------------------------------------
# Evaluation

Env = dict[tuple[str, bool], Value]

_ext_cache: dict[tuple[Expr, int], object] = {}


def eval_assertion(e: Expr, st: Structure, s_new: State,
                   s_old: Optional[State] = None, env: Env | None = None) -> bool:
    """Truth of `e` at (s_old, s_new); s_old may be omitted if e is unary."""
    v = eval_expr(e, st, s_new, s_old, env or {})
    if not isinstance(v, bool):
        raise EvalError(f"assertion evaluated to a non-boolean: {v!r}")
    return v


def eval_expr(e: Expr, st: Structure, s_new: State,
              s_old: Optional[State], env: Env) -> Value:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        key = (e.name, e.hooked)
        if key in env:
            return env[key]
        if e.hooked:
            if s_old is None:
                raise EvalError(f"hooked variable {e.name}~ needs an old state")
            return st.get(s_old, e.name)
        return st.get(s_new, e.name)
    if isinstance(e, App):
        return _eval_app(e, st, s_new, s_old, env)
    if isinstance(e, Quant):
        return _eval_quant(e, st, s_new, s_old, env)
    if isinstance(e, (RelCompose, TransClose)):
        rel = _extension_of(e, st)
        if isinstance(rel, MatrixRelation):
            old = _point(rel.names, True, st, s_old, env, e)
            new = _point(rel.names, False, st, s_new, env, e)
            return rel.member(old, new)
        old = _point(rel.vars, True, st, s_old, env, e)
        new = _point(rel.vars, False, st, s_new, env, e)
        return (old, new) in rel.pairs
    if isinstance(e, Preserve):
        ext = preserve_extension(e.pre, e.step, st)
        target = s_old if e.hooked else s_new
        return _point(ext.vars, e.hooked, st, target, env, e) in ext.members
    raise EvalError(f"cannot evaluate {e!r}")


def _point(names: tuple[str, ...], hooked: bool, st: Structure,
           s: Optional[State], env: Env, e: Expr) -> tuple:
    """Values of `names` at the (old or new) side, preferring env bindings."""
    out = []
    for v in names:
        key = (v, hooked)
        if key in env:
            out.append(env[key])
            continue
        if s is None or not s.vals:
            raise EvalError(
                f"{type(e).__name__} needs an "
                f"{'old' if hooked else 'new'} state binding for {v}")
        out.append(st.get(s, v))
    return tuple(out)


def _eval_app(e: App, st: Structure, s_new, s_old, env) -> Value:
    op = e.op
    # short-circuit connectives, left to right
    if op == "and":
        return (eval_expr(e.args[0], st, s_new, s_old, env) is True
                and eval_expr(e.args[1], st, s_new, s_old, env) is True)
    if op == "or":
        return (eval_expr(e.args[0], st, s_new, s_old, env) is True
                or eval_expr(e.args[1], st, s_new, s_old, env) is True)
    if op == "implies":
        if eval_expr(e.args[0], st, s_new, s_old, env) is not True:
            return True
        return eval_expr(e.args[1], st, s_new, s_old, env) is True
    if op == "not":
        return eval_expr(e.args[0], st, s_new, s_old, env) is not True
    if op == "iff":
        a = eval_expr(e.args[0], st, s_new, s_old, env)
        b = eval_expr(e.args[1], st, s_new, s_old, env)
        return a == b

    args = [eval_expr(a, st, s_new, s_old, env) for a in e.args]
    if op == "=":
        return args[0] == args[1]
    if op == "!=":
        return args[0] != args[1]
    if op in ("<", "<=", ">", ">="):
        a, b = args
        _want_int(a, op), _want_int(b, op)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    if op == "+":
        return _want_int(args[0], op) + _want_int(args[1], op)
    if op == "-":
        return _want_int(args[0], op) - _want_int(args[1], op)
    if op == "*":
        return _want_int(args[0], op) * _want_int(args[1], op)
    if op == "addmod":
        a, b, k = (_want_int(x, op) for x in args)
        if k <= 0:
            raise EvalError("modulus must be positive")
        return (a + b) % k
    if op == "submod":
        a, b, k = (_want_int(x, op) for x in args)
        if k <= 0:
            raise EvalError("modulus must be positive")
        return (a - b) % k
    if op == "len":
        q = args[0]
        if not isinstance(q, tuple):
            raise EvalError("len expects a sequence")
        return len(q)
    if op == "index":
        q, i = args
        if not isinstance(q, tuple):
            raise EvalError("indexing expects a sequence")
        _want_int(i, op)
        if not 1 <= i <= len(q):
            raise EvalError(f"sequence index {i} out of range 1..{len(q)}")
        return q[i - 1]
    if op == "concat":
        a, b = args
        if not (isinstance(a, tuple) and isinstance(b, tuple)):
            raise EvalError("concatenation expects sequences")
        return a + b
    if op == "seq":
        return tuple(args)
    if op == "set":
        return frozenset(args)
    if op == "card":
        s = args[0]
        if not isinstance(s, frozenset):
            raise EvalError("card expects a set")
        return len(s)
    if op in ("max", "min"):
        s = args[0]
        if not isinstance(s, frozenset):
            raise EvalError(f"{op} expects a set")
        if not s:
            raise EvalError(f"{op} of an empty set")
        return max(s) if op == "max" else min(s)
    if op in ("union", "inter", "diff"):
        a, b = args
        if not (isinstance(a, frozenset) and isinstance(b, frozenset)):
            raise EvalError(f"{op} expects sets")
        if op == "union":
            return a | b
        if op == "inter":
            return a & b
        return a - b
    if op == "in":
        if not isinstance(args[1], frozenset):
            raise EvalError("membership expects a set")
        return args[0] in args[1]
    if op == "notin":
        if not isinstance(args[1], frozenset):
            raise EvalError("membership expects a set")
        return args[0] not in args[1]
    raise EvalError(f"unknown operator {op!r}")


def _want_int(v, op) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise EvalError(f"{op} expects numbers, got {v!r}")
    return v


def _eval_quant(e: Quant, st: Structure, s_new, s_old, env) -> bool:
    axes = [sort.carrier() for _, _, sort in e.binders]
    keys = [(n, h) for n, h, _ in e.binders]
    for combo in itertools.product(*axes):
        inner = dict(env)
        inner.update(zip(keys, combo))
        v = eval_expr(e.body, st, s_new, s_old, inner)
        if e.kind == "forall" and v is not True:
            return False
        if e.kind == "exists" and v is True:
            return True
    return e.kind == "forall"


# ---------------------------------------------------------------------------
# Explicit relations


@dataclass(frozen=True)
class StateRelation:
    """Explicit binary relation restricted to (projected onto) `vars`.

    The full-state relation it denotes is the cylindrical extension: two
    states are related iff their projections onto `vars` form a member
    pair.  This is exactly "closed with respect to vars".
    """
    vars: tuple[str, ...]
    pairs: frozenset[tuple[tuple, tuple]]

    def holds(self, st: Structure, s1: State, s2: State) -> bool:
        return (st.restrict(s1, self.vars), st.restrict(s2, self.vars)) \
            in self.pairs

    def is_subset_of(self, other: "StateRelation", st: Structure) -> bool:
        """Containment, comparing on the union of the two variable sets."""
        if set(self.vars) == set(other.vars):
            remap = _projection_map(self.vars, other.vars)
            return all(remap(p) in other.pairs for p in self.pairs)
        raise FormulaError("relation containment needs matching variable sets")


def _projection_map(src: tuple[str, ...], dst: tuple[str, ...]):
    idx = [src.index(v) for v in dst]

    def remap(pair):
        a, b = pair
        return (tuple(a[i] for i in idx), tuple(b[i] for i in idx))
    return remap


@dataclass(frozen=True)
class StateSet:
    """Explicit state set projected onto `vars` (cylindrical elsewhere)."""
    vars: tuple[str, ...]
    members: frozenset[tuple]

    def holds(self, st: Structure, s: State) -> bool:
        return st.restrict(s, self.vars) in self.members


def _grid(st: Structure, names: tuple[str, ...]) -> list[tuple]:
    axes = [st.sort_of(v).carrier() for v in names]
    return list(itertools.product(*axes))


def _proj_vars(e: Expr, st: Structure, vars: tuple[str, ...] | None) -> tuple[str, ...]:
    if vars is not None:
        return tuple(vars)
    names = free_names(e)
    return tuple(v for v in st.var_order if v in names)


def extension(e: Expr, st: Structure,
              vars: tuple[str, ...] | None = None) -> StateRelation:
    """Extension of a binary assertion as explicit projected pairs."""
    names = _proj_vars(e, st, vars)
    missing = free_names(e) - set(names)
    if missing:
        raise FormulaError(f"projection drops free variables {sorted(missing)}")
    pts = _grid(st, names)
    pairs = set()
    for a in pts:
        env_a = {(v, True): x for v, x in zip(names, a)}
        for b in pts:
            env = dict(env_a)
            env.update({(v, False): x for v, x in zip(names, b)})
            if eval_expr(e, st, _DUMMY, _DUMMY, env) is True:
                pairs.add((a, b))
    return StateRelation(names, frozenset(pairs))


def unary_extension(e: Expr, st: Structure,
                    vars: tuple[str, ...] | None = None) -> StateSet:
    if has_hooks(e):
        raise FormulaError("unary extension of a hooked assertion")
    names = _proj_vars(e, st, vars)
    pts = _grid(st, names)
    members = set()
    for a in pts:
        env = {(v, False): x for v, x in zip(names, a)}
        if eval_expr(e, st, _DUMMY, _DUMMY, env) is True:
            members.add(a)
    return StateSet(names, frozenset(members))


# a placeholder state: every variable an extension touches is env-bound
_DUMMY = State(())


def rel_compose(a: Expr, b: Expr, st: Structure,
                vars: tuple[str, ...] | None = None) -> StateRelation:
    """{(s1,s3) | exists s2: (s1,s2) |= a and (s2,s3) |= b}."""
    names = _proj_vars(App("and", (a, b)), st, vars)
    ea = extension(a, st, names)
    eb = extension(b, st, names)
    by_src: dict[tuple, list[tuple]] = {}
    for (x, y) in eb.pairs:
        by_src.setdefault(x, []).append(y)
    pairs = {(x, z) for (x, y) in ea.pairs for z in by_src.get(y, ())}
    return StateRelation(names, frozenset(pairs))


def trans_closure(a: Expr, st: Structure, reflexive: bool = False,
                  vars: tuple[str, ...] | None = None) -> StateRelation:
    """Least transitive relation containing a (with identity if reflexive).

    With `reflexive`, the added identity is relative to the projection
    variables; the A* AST node handles full-state identity itself.
    """
    names = _proj_vars(a, st, vars)
    ea = extension(a, st, names)
    pairs = set(ea.pairs)
    if reflexive:
        pairs.update((t, t) for t in _grid(st, names))
    succ: dict[tuple, set[tuple]] = {}
    for (x, y) in pairs:
        succ.setdefault(x, set()).add(y)
    # saturate: reachability from each source
    closed = set()
    for x in list(succ):
        seen: set[tuple] = set()
        frontier = list(succ[x])
        while frontier:
            y = frontier.pop()
            if y in seen:
                continue
            seen.add(y)
            frontier.extend(succ.get(y, ()))
        closed.update((x, y) for y in seen)
    return StateRelation(names, frozenset(closed))


def preserve_extension(pre: Expr, step: Expr, st: Structure,
                       vars: tuple[str, ...] | None = None) -> StateSet:
    """Least state set containing [[pre]] and closed under step-successors."""
    scope = App("and", (pre, step))
    names = _proj_vars(scope, st, vars)
    key = (Preserve(pre, step), id(st), names)
    got = _ext_cache.get(key)
    if got is not None:
        return got
    pts = _grid(st, names)
    members: set[tuple]
    m = bool_matrix(step, st, names) if len(pts) > 64 else None
    if m is not None and _bulk_supported(pre, st):
        keys = [(v, False) for v in names]
        ctx = _BulkCtx(st, keys, ())
        base = _bulk_eval(pre, ctx, {}).astype(bool)
        shape = tuple(len(st.sort_of(n).carrier()) for n in names)
        vec = np.ascontiguousarray(np.broadcast_to(base, shape)).reshape(-1)
        while True:
            grown = vec | (vec.astype(np.float32) @ m.astype(np.float32) > 0.5)
            if bool(np.array_equal(grown, vec)):
                break
            vec = grown
        members = {pts[i] for i in np.nonzero(vec)[0]}
    else:
        base_set = unary_extension(pre, st, names)
        rel = extension(step, st, names)
        succ: dict[tuple, list[tuple]] = {}
        for (x, y) in rel.pairs:
            succ.setdefault(x, []).append(y)
        members = set(base_set.members)
        frontier = list(members)
        while frontier:
            x = frontier.pop()
            for y in succ.get(x, ()):
                if y not in members:
                    members.add(y)
                    frontier.append(y)
    out = StateSet(names, frozenset(members))
    _ext_cache[key] = out
    return out


def preserve_under(pre: Expr, step: Expr, st: Structure) -> set[State]:
    """A^B as a set of full states of the structure."""
    ext = preserve_extension(pre, step, st)
    return {s for s in st.all_states() if st.restrict(s, ext.vars) in ext.members}


class MatrixRelation:
    """Binary relation over a variable projection as a boolean matrix.

    Avoids materialising explicit pair sets for dense relations inside
    composed rule obligations.
    """

    def __init__(self, st: Structure, names: tuple[str, ...], m: np.ndarray):
        self.names = names
        self.m = m
        self.carriers = [st.sort_of(v).carrier() for v in names]
        self.index = [{v: i for i, v in enumerate(c)} for c in self.carriers]

    def code(self, point: tuple) -> int:
        idx = 0
        for j, v in enumerate(point):
            idx = idx * len(self.carriers[j]) + self.index[j][v]
        return idx

    def member(self, old: tuple, new: tuple) -> bool:
        return bool(self.m[self.code(old), self.code(new)])


def _matrix_for(e: Expr, st: Structure,
                names: tuple[str, ...]) -> Optional[np.ndarray]:
    """Boolean matrix of a (possibly composed) binary assertion, or None."""
    if isinstance(e, RelCompose):
        a = _matrix_for(e.left, st, names)
        b = _matrix_for(e.right, st, names)
        if a is None or b is None:
            return None
        return (a.astype(np.float32) @ b.astype(np.float32)) > 0.5
    if isinstance(e, TransClose):
        m = _matrix_for(e.body, st, names)
        if m is None:
            return None
        if e.reflexive:
            m = m | np.eye(m.shape[0], dtype=bool)
        reach = m.copy()
        while True:
            grown = reach | ((reach.astype(np.float32)
                              @ reach.astype(np.float32)) > 0.5)
            if np.array_equal(grown, reach):
                return reach
            reach = grown
    return bool_matrix(e, st, names)


def _compose_names(e: Expr, st: Structure) -> tuple[str, ...]:
    names = free_names(e)
    return tuple(v for v in st.var_order if v in names)


def _extension_of(e: Expr, st: Structure):
    """Cache relation-valued AST node denotations per structure.

    Returns a StateRelation for small scopes, a MatrixRelation when the
    operands fit the vectorised fragment and the projection grid is large.
    """
    key = (e, id(st))
    got = _ext_cache.get(key)
    if got is None:
        names = _compose_names(e, st)
        size = 1
        for v in names:
            size *= len(st.sort_of(v).carrier())
        got = None
        if size > 64:
            m = _matrix_for(e, st, names)
            if m is not None:
                got = MatrixRelation(st, names, m)
        if got is None:
            if isinstance(e, RelCompose):
                got = rel_compose(e.left, e.right, st)
            elif isinstance(e, TransClose):
                got = trans_closure(e.body, st, reflexive=e.reflexive)
            else:
                raise EvalError(f"no extension for {e!r}")
        _ext_cache[key] = got
    return got


# ---------------------------------------------------------------------------
# Classification / well-foundedness


@dataclass(frozen=True)
class RelationTraits:
    reflexive: bool
    transitive: bool
    respects: bool


def _is_identity_conj(a: Expr) -> bool:
    """Syntactically a conjunction of v = v~ equalities (or true)."""
    for part in flatten("and", a):
        if part == TRUE:
            continue
        if not (isinstance(part, App) and part.op == "=" and len(part.args) == 2):
            return False
        x, y = part.args
        if not (isinstance(x, Var) and isinstance(y, Var)
                and x.name == y.name and x.hooked != y.hooked):
            return False
    return True


def bool_matrix(a: Expr, st: Structure,
                names: tuple[str, ...]) -> Optional[np.ndarray]:
    """Extension of a binary assertion as an (N, N) boolean matrix.

    Rows index old states over `names`, columns new states.  None when the
    assertion is outside the vectorised fragment or the grid is too large.
    """
    if not _bulk_supported(a, st):
        return None
    extra = free_names(a) - set(names)
    if extra:
        raise FormulaError(f"matrix projection drops free variables {sorted(extra)}")
    n = 1
    for v in names:
        n *= len(st.sort_of(v).carrier())
    if n > 8192:
        return None
    keys = [(v, True) for v in names] + [(v, False) for v in names]
    ctx = _BulkCtx(st, keys, ())
    arr = _bulk_eval(a, ctx, {}).astype(bool)
    shape = tuple(len(st.sort_of(k).carrier()) for k, _ in keys)
    arr = np.broadcast_to(arr, shape)
    return np.ascontiguousarray(arr).reshape(n, n)


def _matrix_transitive(m: np.ndarray) -> bool:
    f = m.astype(np.float32)
    reach2 = (f @ f) > 0.5
    return not bool(np.any(reach2 & ~m))


_traits_cache: dict[tuple, RelationTraits] = {}


def classify_relation(a: Expr, respect_vars: set[str] | frozenset[str],
                      st: Structure, need_transitive: bool = True
                      ) -> RelationTraits:
    """Reflexivity, transitivity, and respect of a variable set.

    Decided by full enumeration.  Reflexivity goes through the diagonal
    substitution, transitivity through a boolean matrix product where the
    assertion is vector-friendly.  With need_transitive=False the
    transitivity slot is reported True without being computed (for
    invariants that only constrain reflexivity).
    """
    cache_key = (a, id(st), frozenset(respect_vars), need_transitive)
    cached = _traits_cache.get(cache_key)
    if cached is not None:
        return cached
    names = _proj_vars(a, st, None)

    if not respect_vars:
        respects = True
    else:
        goal = conj([App("=", (Var(v), Var(v, hooked=True)))
                     for v in sorted(respect_vars)])
        respects = valid(App("implies", (a, goal)), st) is None

    if _is_identity_conj(a):
        out = RelationTraits(True, True, respects)
        _traits_cache[cache_key] = out
        return out

    try:
        reflexive = valid(unhook_expression(a), st) is None
    except FormulaError:
        ident = identity_frame(set(), names)
        reflexive = valid(App("implies", (ident, a)), st) is None

    if not need_transitive:
        out = RelationTraits(reflexive, True, respects)
        _traits_cache[cache_key] = out
        return out

    m = bool_matrix(a, st, names)
    if m is not None:
        out = RelationTraits(reflexive, _matrix_transitive(m), respects)
        _traits_cache[cache_key] = out
        return out
    ext = extension(a, st, names)
    succ: dict[tuple, set[tuple]] = {}
    for (x, y) in ext.pairs:
        succ.setdefault(x, set()).add(y)
    transitive = True
    for (x, y) in ext.pairs:
        if any((x, z) not in ext.pairs for z in succ.get(y, ())):
            transitive = False
            break
    out = RelationTraits(reflexive, transitive, respects)
    _traits_cache[cache_key] = out
    return out


def well_founded(a: Expr, st: Structure) -> bool:
    """Over finite carriers: no infinite descending chain iff acyclic."""
    ext = extension(a, st)
    succ: dict[tuple, list[tuple]] = {}
    for (x, y) in ext.pairs:
        succ.setdefault(x, []).append(y)
    WHITE, GREY, BLACK = 0, 1, 2
    colour: dict[tuple, int] = {}
    for start in succ:
        if colour.get(start, WHITE) is not WHITE:
            continue
        stack = [(start, iter(succ.get(start, ())))]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                c = colour.get(nxt, WHITE)
                if c == GREY:
                    return False
                if c == WHITE:
                    colour[nxt] = GREY
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                colour[node] = BLACK
                stack.pop()
    return True


def relation_to_assertion(rel: StateRelation) -> Expr:
    """Explicit DNF formula denoting the relation (over its variables)."""
    terms = []
    for (a, b) in sorted(rel.pairs, key=repr):
        eqs = [App("=", (Var(v, hooked=True), Lit(x)))
               for v, x in zip(rel.vars, a)]
        eqs += [App("=", (Var(v), Lit(x))) for v, x in zip(rel.vars, b)]
        terms.append(conj(eqs))
    return disj(terms)


def stateset_to_assertion(ss: StateSet) -> Expr:
    terms = []
    for a in sorted(ss.members, key=repr):
        terms.append(conj([App("=", (Var(v), Lit(x)))
                           for v, x in zip(ss.vars, a)]))
    return disj(terms)


# ---------------------------------------------------------------------------
# Vectorised validity (used by obligation discharge)

_BULK_OPS = {"and", "or", "implies", "iff", "not", "=", "!=", "<", "<=",
             ">", ">=", "+", "-", "*", "addmod", "submod"}


def _bulk_supported(e: Expr, st: Structure,
                    bound: frozenset = frozenset()) -> bool:
    if isinstance(e, Lit):
        return isinstance(e.value, (bool, int, str))
    if isinstance(e, Var):
        if e.name in bound:
            return True
        return st.sort_of(e.name).kind in ("bool", "nat", "enum")
    if isinstance(e, App):
        return e.op in _BULK_OPS and all(_bulk_supported(a, st, bound)
                                         for a in e.args)
    if isinstance(e, Quant):
        inner = bound | {n for n, _, _ in e.binders}
        return (all(s.kind in ("bool", "nat", "enum") for _, _, s in e.binders)
                and _bulk_supported(e.body, st, inner))
    if isinstance(e, (RelCompose, TransClose, Preserve)):
        # extensions become membership tables over their projection vars;
        # the mixed-radix encoding needs numeric carriers
        return all(st.sort_of(n).kind in ("bool", "nat")
                   for n in free_names(e))
    return False


class _BulkCtx:
    def __init__(self, st: Structure, axes: list[tuple[str, bool]],
                 shape: tuple[int, ...]):
        self.st = st
        self.axes = axes
        self.shape = shape
        self.carriers = {}

    def axis_array(self, key: tuple[str, bool]) -> np.ndarray:
        i = self.axes.index(key)
        carrier = self.st.sort_of(key[0]).carrier()
        vals = np.array([_enc(v) for v in carrier])
        shape = [1] * len(self.axes)
        shape[i] = len(carrier)
        return vals.reshape(shape)


def _enc(v: Value):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    return v  # enum member: numpy handles object/str arrays via == only


def _bulk_eval(e: Expr, ctx: _BulkCtx, env: dict) -> np.ndarray:
    if isinstance(e, Lit):
        return np.asarray(_enc(e.value))
    if isinstance(e, Var):
        key = (e.name, e.hooked)
        if key in env:
            return env[key]
        return ctx.axis_array(key)
    if isinstance(e, App):
        op = e.op
        if op == "not":
            return ~_bulk_eval(e.args[0], ctx, env).astype(bool)
        a = _bulk_eval(e.args[0], ctx, env)
        if op in ("and", "or", "implies", "iff"):
            b = _bulk_eval(e.args[1], ctx, env)
            a = a.astype(bool)
            b = b.astype(bool)
            if op == "and":
                return a & b
            if op == "or":
                return a | b
            if op == "implies":
                return ~a | b
            return a == b
        if op in ("=", "!="):
            b = _bulk_eval(e.args[1], ctx, env)
            return (a == b) if op == "=" else (a != b)
        b = _bulk_eval(e.args[1], ctx, env)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op in ("addmod", "submod"):
            k = _bulk_eval(e.args[2], ctx, env)
            return (a + b) % k if op == "addmod" else (a - b) % k
        raise EvalError(f"bulk evaluation does not support {op!r}")
    if isinstance(e, Quant):
        return _bulk_quant(e, ctx, env)
    if isinstance(e, (RelCompose, TransClose, Preserve)):
        return _bulk_membership(e, ctx, env)
    raise EvalError(f"bulk evaluation does not support {e!r}")


def _bulk_quant(e: Quant, ctx: _BulkCtx, env: dict) -> np.ndarray:
    # evaluate the body once per binder valuation, folding with all/any
    axes = [s.carrier() for _, _, s in e.binders]
    keys = [(n, h) for n, h, _ in e.binders]
    acc = None
    for combo in itertools.product(*axes):
        inner = dict(env)
        inner.update({k: np.asarray(_enc(v)) for k, v in zip(keys, combo)})
        val = _bulk_eval(e.body, ctx, inner).astype(bool)
        if acc is None:
            acc = val.copy() if isinstance(val, np.ndarray) else val
        else:
            acc = (acc & val) if e.kind == "forall" else (acc | val)
    if acc is None:
        acc = np.asarray(e.kind == "forall")
    return acc


def _bulk_membership(e: Expr, ctx: _BulkCtx, env: dict) -> np.ndarray:
    """Relation-valued node: build a lookup table over its projection vars."""
    st = ctx.st
    if isinstance(e, Preserve):
        ext = preserve_extension(e.pre, e.step, st)
        keys = [(v, e.hooked) for v in ext.vars]
        return _table_lookup(ctx, env, keys, ext.members)
    if isinstance(e, (TransClose, RelCompose)):
        rel = _extension_of(e, st)
        if isinstance(rel, MatrixRelation):
            keys = ([(v, True) for v in rel.names]
                    + [(v, False) for v in rel.names])
            return _flat_table_lookup(ctx, env, keys, np.ravel(rel.m))
        keys = ([(v, True) for v in rel.vars] + [(v, False) for v in rel.vars])
        members = {a + b for (a, b) in rel.pairs}
        return _table_lookup(ctx, env, keys, members)
    raise EvalError(f"no bulk membership for {e!r}")


def _flat_table_lookup(ctx: _BulkCtx, env: dict,
                       keys: list[tuple[str, bool]],
                       table: np.ndarray) -> np.ndarray:
    """Index a flat boolean table by the mixed-radix code of the keys."""
    flat = np.asarray(0)
    for (name, hooked) in keys:
        if (name, hooked) in env:
            arr = env[(name, hooked)]
        else:
            arr = ctx.axis_array((name, hooked))
        carrier = ctx.st.sort_of(name).carrier()
        lut = {_enc(v): i for i, v in enumerate(carrier)}
        lo = min(lut)
        dense = np.full(max(lut) - lo + 1, -1, dtype=np.int64)
        for v, i in lut.items():
            dense[v - lo] = i
        coded = dense[np.asarray(arr, dtype=np.int64) - lo]
        flat = flat * len(carrier) + coded
    return table[flat]


def _table_lookup(ctx: _BulkCtx, env: dict, keys: list[tuple[str, bool]],
                  members: set[tuple]) -> np.ndarray:
    """Boolean array over the grid: tuple of key values is in members."""
    arrays = []
    carriers = []
    for (name, hooked) in keys:
        if (name, hooked) in env:
            arrays.append(env[(name, hooked)])
        else:
            arrays.append(ctx.axis_array((name, hooked)))
        carriers.append(ctx.st.sort_of(name).carrier())
    # mixed radix index into a flat membership table
    radix = [len(c) for c in carriers]
    val_to_idx = [{_enc(v): i for i, v in enumerate(c)} for c in carriers]
    table = np.zeros(int(np.prod(radix)) if radix else 1, dtype=bool)
    for m in members:
        idx = 0
        ok = True
        for j, v in enumerate(m):
            enc = _enc(v)
            if enc not in val_to_idx[j]:
                ok = False
                break
            idx = idx * radix[j] + val_to_idx[j][enc]
        if ok:
            table[idx] = True
    flat = np.asarray(0)
    for j, arr in enumerate(arrays):
        lut = val_to_idx[j]
        lo = min(lut)
        dense = np.full(max(lut) - lo + 1, -1, dtype=np.int64)
        for v, i in lut.items():
            dense[v - lo] = i
        coded = dense[np.asarray(arr, dtype=np.int64) - lo]
        flat = flat * radix[j] + coded
    return table[flat]


def valid(e: Expr, st: Structure, force_bulk: bool | None = None) -> Optional[tuple]:
    """Validity by full enumeration of valuations.

    Returns None when valid, else a falsifying witness as a tuple of
    ((name, hooked), value) items.  Large quantifier-free grids go through
    the vectorised evaluator; everything else walks the tree.
    """
    keys = sorted(free_occurrences(e))
    size = 1
    for (n, _) in keys:
        size *= len(st.sort_of(n).carrier())
    use_bulk = (force_bulk if force_bulk is not None
                else size > 4096) and _bulk_supported(e, st)
    if use_bulk:
        ctx = _BulkCtx(st, keys, ())
        arr = _bulk_eval(e, ctx, {}).astype(bool)
        arr = np.broadcast_to(
            arr, tuple(len(st.sort_of(n).carrier()) for n, _ in keys))
        if bool(arr.all()):
            return None
        flat = int(np.argmin(np.ravel(arr)))
        combo = []
        for (n, _h) in reversed(keys):
            c = st.sort_of(n).carrier()
            combo.append(c[flat % len(c)])
            flat //= len(c)
        combo.reverse()
        return tuple(zip(keys, combo))
    axes = [st.sort_of(n).carrier() for (n, _) in keys]
    for combo in itertools.product(*axes):
        env = dict(zip(keys, combo))
        if eval_expr(e, st, _DUMMY, _DUMMY, env) is not True:
            return tuple(zip(keys, combo))
    return None
