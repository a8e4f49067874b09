"""Deciding satisfaction of specified programs over finite structures.

A specification is a tuple (glo, aux) :: (pre, rely, wait, guar, eff).
Satisfaction of a curly-bracket specified program with an empty aux set:
over every reachable configuration graph rooted at an initial state
satisfying the pre-condition,

  * convergence: no reachable cycle contains an internal edge,
  * every internal edge satisfies the guar-condition,
  * every reachable blocked configuration satisfies the wait-condition,
  * every reachable empty-program configuration satisfies the
    eff-condition against the initial state.

The square-bracket (modified) reading drops convergence and instead
requires every internal edge to change the program component, which rules
out await bodies that fail to terminate.  A nonempty aux set is resolved
through a user-supplied witness related to the program by the removal
relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import formula
from .formula import (Expr, EvalError, classify_relation, eval_assertion,
                      check_wellformed, free_names, has_hooks)
from .prog import Program, declared_vars, global_vars, validate_program
from .removal import Removal, check_removal
from .sorts import State, Structure
from .semantics import (Budget, ConfigGraph, Configuration, EnvSpec,
                        LabeledEdge, ResourceBudget, SemanticsError,
                        explore, hid_set, initial_states)


class SpecError(Exception):
    """Specification or specified-program invariant violated (input error)."""


@dataclass(frozen=True)
class Specification:
    glo: tuple[str, ...]
    aux: tuple[str, ...]
    pre: Expr
    rely: Expr
    wait: Expr
    guar: Expr
    eff: Expr

    @property
    def scope(self) -> tuple[str, ...]:
        return self.glo + self.aux

    def assertions(self) -> dict[str, Expr]:
        return {"pre": self.pre, "rely": self.rely, "wait": self.wait,
                "guar": self.guar, "eff": self.eff}


@dataclass(frozen=True)
class SpecifiedProgram:
    program: Program
    spec: Specification
    bracket: str = "curly"  # "curly" (LSP) | "square" (LSP_S)


def validate_specification(spec: Specification, st: Structure,
                           check_relational: bool = True) -> None:
    """Raise SpecError on any violated specification invariant."""
    if set(spec.glo) & set(spec.aux):
        raise SpecError("glo and aux sets are not disjoint")
    scope = set(spec.scope)
    for name, a in spec.assertions().items():
        try:
            check_wellformed(a, st)
        except formula.FormulaError as e:
            raise SpecError(f"{name}-condition ill-formed: {e}") from e
        outside = free_names(a) - scope
        if outside:
            raise SpecError(
                f"{name}-condition mentions variables outside glo/aux: "
                f"{sorted(outside)}")
    for name in ("pre", "wait"):
        if has_hooks(spec.assertions()[name]):
            raise SpecError(f"{name}-condition must be unary (no hooks)")
    if check_relational:
        traits = classify_relation(spec.rely, set(), st)
        if not traits.reflexive or not traits.transitive:
            raise SpecError("rely-condition must be reflexive and transitive")
        guar_traits = classify_relation(spec.guar, set(), st,
                                        need_transitive=False)
        if not guar_traits.reflexive:
            raise SpecError("guar-condition must be reflexive")


def validate_specified_program(sp: SpecifiedProgram, st: Structure) -> None:
    validate_specification(sp.spec, st)
    errs = validate_program(sp.program, st)
    if errs:
        raise SpecError("program invalid: " + "; ".join(map(str, errs)))
    locs = declared_vars(sp.program)
    clash = locs & set(sp.spec.scope)
    if clash:
        raise SpecError(
            f"local variables occur in the specification: {sorted(clash)}")
    outside = global_vars(sp.program) - set(sp.spec.glo)
    if outside:
        raise SpecError(
            f"program globals missing from the glo-set: {sorted(outside)}")
    if sp.bracket not in ("curly", "square"):
        raise SpecError(f"unknown bracket kind {sp.bracket!r}")


@dataclass
class Statistics:
    initial_states: int = 0
    nodes: int = 0
    edges: int = 0
    graphs: int = 0
    obligations: int = 0

    def absorb(self, g: ConfigGraph) -> None:
        self.graphs += 1
        self.nodes += len(g.nodes)
        self.edges += len(g.edges)


@dataclass
class CheckReport:
    verdict: str  # "valid" | "invalid" | "resource-exceeded"
    clause: Optional[str] = None
    counterexample: list[LabeledEdge] = field(default_factory=list)
    cycle_start: Optional[int] = None  # index into counterexample for lassos
    initial_state: Optional[State] = None
    detail: str = ""
    stats: Statistics = field(default_factory=Statistics)
    notes: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.verdict == "valid"


def _path_to(g: ConfigGraph, target: Configuration) -> list[LabeledEdge]:
    """Shortest edge path from the graph root to the target configuration."""
    if target == g.root:
        return []
    parent: dict[Configuration, LabeledEdge] = {}
    frontier = [g.root]
    seen = {g.root}
    adj: dict[Configuration, list[LabeledEdge]] = {}
    for e in g.edges:
        adj.setdefault(e.src, []).append(e)
    while frontier:
        nxt_frontier = []
        for cfg in frontier:
            for e in adj.get(cfg, ()):
                if e.dst in seen:
                    continue
                seen.add(e.dst)
                parent[e.dst] = e
                if e.dst == target:
                    path = [e]
                    while path[0].src != g.root:
                        path.insert(0, parent[path[0].src])
                    return path
                nxt_frontier.append(e.dst)
        frontier = nxt_frontier
    raise SemanticsError("target unreachable while rebuilding a trace", target)


def _divergence_lasso(g: ConfigGraph) -> Optional[tuple[list[LabeledEdge], int]]:
    """A stem+cycle witnessing a reachable cycle through an internal edge.

    Tarjan SCCs; any SCC with an internal edge inside (or an i self loop)
    yields the lasso.
    """
    index: dict[Configuration, int] = {}
    low: dict[Configuration, int] = {}
    onstack: set[Configuration] = set()
    stack: list[Configuration] = []
    sccs: list[list[Configuration]] = []
    adj: dict[Configuration, list[LabeledEdge]] = {}
    for e in g.edges:
        adj.setdefault(e.src, []).append(e)
    counter = [0]

    def strongconnect(v0: Configuration) -> None:
        work = [(v0, iter(adj.get(v0, ())))]
        index[v0] = low[v0] = counter[0]
        counter[0] += 1
        stack.append(v0)
        onstack.add(v0)
        while work:
            v, it = work[-1]
            advanced = False
            for e in it:
                w = e.dst
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if w in onstack:
                    low[v] = min(low[v], index[w])
            if not advanced:
                work.pop()
                if work:
                    pv = work[-1][0]
                    low[pv] = min(low[pv], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        onstack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    sccs.append(comp)

    for n in g.nodes:
        if n not in index:
            strongconnect(n)

    for comp in sccs:
        comp_set = set(comp)
        internal = [e for c in comp for e in adj.get(c, ())
                    if e.label == "i" and e.dst in comp_set]
        if not internal:
            continue
        if len(comp) == 1 and not any(e.dst == e.src for e in internal):
            continue
        pivot = internal[0]
        stem = _path_to(g, pivot.src)
        # close the cycle: path from pivot.dst back to pivot.src inside comp
        cycle = [pivot]
        if pivot.dst != pivot.src:
            cur = pivot.dst
            parent: dict[Configuration, LabeledEdge] = {}
            frontier = [cur]
            seen = {cur}
            while frontier:
                nf = []
                for cfg in frontier:
                    for e in adj.get(cfg, ()):
                        if e.dst not in comp_set or e.dst in seen:
                            continue
                        seen.add(e.dst)
                        parent[e.dst] = e
                        nf.append(e.dst)
                frontier = nf
                if pivot.src in seen:
                    break
            back = [parent[pivot.src]]
            while back[0].src != pivot.dst:
                back.insert(0, parent[back[0].src])
            cycle.extend(back)
        return stem + cycle, len(stem)
    return None


def _check_graph(g: ConfigGraph, spec: Specification, st: Structure,
                 modified: bool) -> Optional[CheckReport]:
    """First violated clause in this graph, or None."""
    s0 = g.root.state

    def fail(clause: str, trace, detail: str, cycle_start=None) -> CheckReport:
        return CheckReport("invalid", clause, trace, cycle_start, s0, detail)

    if not modified:
        lasso = _divergence_lasso(g)
        if lasso is not None:
            trace, start = lasso
            return fail("convergence", trace, cycle_start=start,
                        detail="a reachable cycle contains an internal "
                               "transition, so the program may diverge")
    for e in g.internal_edges():
        if modified and e.src.program == e.dst.program:
            return fail("lsps-await-termination",
                        _path_to(g, e.src) + [e],
                        "an await body fails to terminate (internal "
                        "transition leaves the program component unchanged)")
        try:
            ok = eval_assertion(spec.guar, st, e.dst.state, s_old=e.src.state)
        except EvalError as err:
            raise SemanticsError(f"guar evaluation failed: {err}", e.src) from err
        if not ok:
            return fail("guar", _path_to(g, e.src) + [e],
                        "an internal transition violates the guar-condition")
    for cfg in g.nodes:
        if g.blocked(cfg):
            try:
                ok = eval_assertion(spec.wait, st, cfg.state)
            except EvalError as err:
                raise SemanticsError(f"wait evaluation failed: {err}", cfg) from err
            if not ok:
                return fail("wait", _path_to(g, cfg),
                            "the program can become blocked in a state "
                            "outside the wait-condition")
    for cfg in g.nodes:
        if cfg.program is None:
            try:
                ok = eval_assertion(spec.eff, st, cfg.state, s_old=s0)
            except EvalError as err:
                raise SemanticsError(f"eff evaluation failed: {err}", cfg) from err
            if not ok:
                return fail("eff", _path_to(g, cfg),
                            "a terminating computation violates the "
                            "eff-condition")
    return None


def _run_check(z: Program, spec: Specification, st: Structure,
               budget: Budget, modified: bool) -> CheckReport:
    stats = Statistics()
    env = EnvSpec(spec.rely, frozenset(hid_set(z)) & set(st.var_order))
    canonical = frozenset(declared_vars(z))
    try:
        inits = initial_states(st, spec.pre, canonical)
        stats.initial_states = len(inits)
        for s0 in inits:
            g = explore(Configuration(z, s0), st, env, budget)
            stats.absorb(g)
            bad = _check_graph(g, spec, st, modified)
            if bad is not None:
                bad.stats = stats
                return bad
    except ResourceBudget as rb:
        stats.nodes = rb.nodes
        stats.edges = rb.edges
        return CheckReport("resource-exceeded", detail=str(rb), stats=stats)
    return CheckReport("valid", stats=stats)


def check_sat_noaux(sp: SpecifiedProgram, st: Structure,
                    budget: Budget | None = None) -> CheckReport:
    """Satisfaction for curly-bracket specified programs with empty aux."""
    if sp.spec.aux:
        raise SpecError("check_sat_noaux needs an empty aux set")
    if sp.bracket != "curly":
        raise SpecError("check_sat_noaux checks curly-bracket programs")
    validate_specified_program(sp, st)
    return _run_check(sp.program, sp.spec, st, budget or Budget(10**6),
                      modified=False)


def _witness_view(sp: SpecifiedProgram) -> SpecifiedProgram:
    spec = sp.spec
    merged = replace(spec, glo=spec.glo + spec.aux, aux=())
    return SpecifiedProgram(sp.program, merged, sp.bracket)


def check_sat_general(sp: SpecifiedProgram, witness: Program,
                      st: Structure, budget: Budget | None = None) -> CheckReport:
    """General satisfaction via a user-supplied augmented witness.

    Valid iff the witness erases to the program under (glo, aux) and the
    witness, with auxiliary variables promoted to globals, passes the
    empty-aux check.
    """
    validate_specified_program(sp, st)
    r = Removal(witness, frozenset(sp.spec.glo), frozenset(sp.spec.aux),
                sp.program)
    if not check_removal(r):
        return CheckReport(
            "invalid", clause="aux-removal",
            detail="the witness does not erase to the program under the "
                   "declared auxiliary set")
    wsp = _witness_view(SpecifiedProgram(witness, sp.spec, sp.bracket))
    validate_specified_program(wsp, st)
    return _run_check(wsp.program, wsp.spec, st, budget or Budget(10**6),
                      modified=(sp.bracket == "square"))


def check_sat_modified(sp: SpecifiedProgram, witness: Program | None,
                       st: Structure, budget: Budget | None = None) -> CheckReport:
    """Square-bracket satisfaction; witness may be the program when aux=()."""
    if sp.bracket != "square":
        raise SpecError("check_sat_modified checks square-bracket programs")
    if sp.spec.aux:
        if witness is None:
            raise SpecError("a nonempty aux set needs a witness program")
        return check_sat_general(sp, witness, st, budget)
    validate_specified_program(sp, st)
    return _run_check(sp.program, sp.spec, st, budget or Budget(10**6),
                      modified=True)


# ---------------------------------------------------------------------------
# Strongest relations


def strongest_relations(z: Program, glo: tuple[str, ...], pre: Expr,
                        rely: Expr, which: str, st: Structure,
                        budget: Budget | None = None):
    """Strongest eff/wait/guar relation, closed with respect to the glo-set.

    Closure is by projection: the returned relation's variables are exactly
    the glo-set, so states equal on it are identified.
    """
    if which not in ("eff", "wait", "guar"):
        raise SpecError(f"unknown strongest relation {which!r}")
    traits = classify_relation(rely, set(), st)
    if not traits.reflexive or not traits.transitive:
        raise SpecError("rely-condition must be reflexive and transitive")
    errs = validate_program(z, st)
    if errs:
        raise SpecError("program invalid: " + "; ".join(map(str, errs)))
    budget = budget or Budget(10**6)
    env = EnvSpec(rely, frozenset(hid_set(z)) & set(st.var_order))
    canonical = frozenset(declared_vars(z))
    names = tuple(glo)
    eff_pairs: set[tuple[tuple, tuple]] = set()
    wait_states: set[tuple] = set()
    guar_pairs: set[tuple[tuple, tuple]] = set()
    for s0 in initial_states(st, pre, canonical):
        g = explore(Configuration(z, s0), st, env, budget)
        p0 = st.restrict(s0, names)
        for cfg in g.nodes:
            if cfg.program is None:
                eff_pairs.add((p0, st.restrict(cfg.state, names)))
            elif g.blocked(cfg):
                wait_states.add(st.restrict(cfg.state, names))
        for e in g.internal_edges():
            guar_pairs.add((st.restrict(e.src.state, names),
                            st.restrict(e.dst.state, names)))
    if which == "eff":
        return formula.StateRelation(names, frozenset(eff_pairs))
    if which == "wait":
        return formula.StateSet(names, frozenset(wait_states))
    grid = formula._grid(st, names)
    guar_pairs.update((t, t) for t in grid)
    return formula.StateRelation(names, frozenset(guar_pairs))
