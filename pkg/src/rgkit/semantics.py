"""Small-step operational semantics and configuration graphs.

A configuration pairs a program residue (None for the empty program) with a
total state.  Internal transitions follow the transition relation clause by
clause; awaits are big steps whose bodies run in isolation, with divergence
decided exactly by cycle detection on the body's own environment-free graph.

External transitions respect the hid set of the root program and satisfy
the rely-condition.  Because the rely is reflexive, stutter edges (s, s)
carry no information and are omitted from graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .formula import App, Expr, EvalError, eval_assertion, eval_expr, flatten, Var
from .prog import (Assign, Await, Block, If, Par, Program, Seq, Skip, While,
                   hid_set, declared_vars, render_program)
from .sorts import State, Structure


class ResourceBudget(Exception):
    """Configuration budget exhausted; carries partial statistics."""

    def __init__(self, message: str, nodes: int, edges: int):
        super().__init__(message)
        self.nodes = nodes
        self.edges = edges


class SemanticsError(Exception):
    """Evaluation failure during exploration, with the configuration."""

    def __init__(self, message: str, cfg: "Configuration"):
        super().__init__(message)
        self.cfg = cfg


@dataclass(frozen=True)
class Configuration:
    program: Optional[Program]  # None is the empty program
    state: State

    def render(self, st: Structure) -> str:
        prog = "eps" if self.program is None else render_program(self.program)
        vals = ", ".join(f"{k}={_short(v)}"
                         for k, v in st.as_dict(self.state).items())
        return f"<{prog} | {vals}>"


def _short(v) -> str:
    if isinstance(v, frozenset):
        return "{" + ",".join(str(x) for x in sorted(v, key=repr)) + "}"
    if isinstance(v, tuple):
        return "[" + ",".join(str(x) for x in v) + "]"
    return str(v)


@dataclass(frozen=True)
class LabeledEdge:
    src: Configuration
    label: str  # "i" | "e"
    dst: Configuration


@dataclass
class EnvSpec:
    """Environment constraints for external transitions."""
    rely: Expr
    hid: frozenset[str]
    _frozen: frozenset[str] | None = None

    def frozen_vars(self) -> frozenset[str]:
        if self._frozen is None:
            self._frozen = frozenset(_frozen_by_rely(self.rely))
        return self._frozen


# ---------------------------------------------------------------------------
# Internal transitions


def _test(b: Expr, s: State, st: Structure, cfg: Configuration) -> bool:
    try:
        return eval_assertion(b, st, s)
    except EvalError as e:
        raise SemanticsError(f"test evaluation failed: {e}", cfg) from e


def internal_successors(cfg: Configuration, st: Structure,
                        budget: "Budget | None" = None) -> list[Configuration]:
    z, s = cfg.program, cfg.state
    if z is None:
        return []
    if isinstance(z, Skip):
        return [Configuration(None, s)]
    if isinstance(z, Assign):
        try:
            val = eval_expr(z.rhs, st, s, None, {})
            s2 = st.set(s, z.var, val)
        except Exception as e:
            raise SemanticsError(f"assignment failed: {e}", cfg) from e
        return [Configuration(None, s2)]
    if isinstance(z, Block):
        return [Configuration(z.body, s)]
    if isinstance(z, Seq):
        out = []
        for c in internal_successors(Configuration(z.left, s), st, budget):
            if c.program is None:
                out.append(Configuration(z.right, c.state))
            else:
                out.append(Configuration(Seq(c.program, z.right), c.state))
        return out
    if isinstance(z, If):
        branch = z.then if _test(z.test, s, st, cfg) else z.els
        return [Configuration(branch, s)]
    if isinstance(z, While):
        if _test(z.test, s, st, cfg):
            return [Configuration(Seq(z.body, z), s)]
        return [Configuration(None, s)]
    if isinstance(z, Par):
        out = []
        for c in internal_successors(Configuration(z.left, s), st, budget):
            if c.program is None:
                out.append(Configuration(z.right, c.state))
            else:
                out.append(Configuration(Par(c.program, z.right), c.state))
        for c in internal_successors(Configuration(z.right, s), st, budget):
            if c.program is None:
                out.append(Configuration(z.left, c.state))
            else:
                out.append(Configuration(Par(z.left, c.program), c.state))
        return out
    if isinstance(z, Await):
        if not _test(z.test, s, st, cfg):
            return []
        finals, diverges = _run_isolated(z.body, s, st, budget)
        out = [Configuration(None, fs) for fs in sorted(finals, key=repr)]
        if diverges:
            out.append(cfg)  # the self-loop modelling a stuck or looping body
        return out
    raise TypeError(z)


def _run_isolated(body: Program, s: State, st: Structure,
                  budget: "Budget | None"):
    """Environment-free exploration of an await body.

    Returns (set of terminal states, True if some run diverges or blocks).
    Divergence is decided exactly: a reachable cycle in the body's own
    configuration graph; a blocked body configuration counts the same way.
    """
    start = Configuration(body, s)
    succ: dict[Configuration, list[Configuration]] = {}
    seen = {start}
    order = [start]
    finals: set[State] = set()
    stuck = False
    i = 0
    while i < len(order):
        cfg = order[i]
        i += 1
        succs = internal_successors(cfg, st, budget)
        if not succs and cfg.program is not None:
            stuck = True
        kept = []
        for nxt in succs:
            if nxt.program is None:
                finals.add(nxt.state)
                continue
            kept.append(nxt)
            if nxt not in seen:
                if budget is not None:
                    budget.spend(1)
                seen.add(nxt)
                order.append(nxt)
        succ[cfg] = kept
    return finals, stuck or _has_cycle(order, succ)


def _has_cycle(nodes: list[Configuration],
               succ: dict[Configuration, list[Configuration]]) -> bool:
    WHITE, GREY, BLACK = 0, 1, 2
    colour: dict[Configuration, int] = {}
    for start in nodes:
        if colour.get(start, WHITE) != WHITE:
            continue
        stack = [(start, iter(succ.get(start, ())))]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            moved = False
            for nxt in it:
                c = colour.get(nxt, WHITE)
                if c == GREY:
                    return True
                if c == WHITE:
                    colour[nxt] = GREY
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    moved = True
                    break
            if not moved:
                colour[node] = BLACK
                stack.pop()
    return False


# ---------------------------------------------------------------------------
# External transitions


def _frozen_by_rely(rely: Expr) -> set[str]:
    """Variables v with a top-level conjunct v = v~ (or v~ = v) in the rely."""
    frozen = set()
    for part in flatten("and", rely):
        if isinstance(part, App) and part.op == "=" and len(part.args) == 2:
            a, b = part.args
            if isinstance(a, Var) and isinstance(b, Var) and a.name == b.name \
                    and a.hooked != b.hooked:
                frozen.add(a.name)
    return frozen


def external_successors(cfg: Configuration, st: Structure, env: EnvSpec,
                        include_stutter: bool = False) -> list[Configuration]:
    """States s' with (s, s') |= rely, agreeing with s on the hid set.

    The stutter successor (identical state) is omitted by default.
    """
    s = cfg.state
    changeable = [v for v in st.var_order
                  if v not in env.hid and v not in env.frozen_vars()]
    out = []
    axes = [st.vars[v].carrier() for v in changeable]
    for combo in itertools.product(*axes):
        if all(st.get(s, v) == x for v, x in zip(changeable, combo)):
            continue  # stutter on the changeable part
        vals = list(s.vals)
        for v, x in zip(changeable, combo):
            vals[st.index_of(v)] = x
        s2 = State(tuple(vals))
        try:
            if eval_assertion(env.rely, st, s2, s_old=s):
                out.append(Configuration(cfg.program, s2))
        except EvalError as e:
            raise SemanticsError(f"rely evaluation failed: {e}", cfg) from e
    if include_stutter:
        out.append(cfg)
    return out


def successors(cfg: Configuration, kind: str, st: Structure,
               env: EnvSpec | None = None) -> list[Configuration]:
    if kind == "internal":
        return internal_successors(cfg, st)
    if kind == "external":
        if env is None:
            raise ValueError("external successors need an environment spec")
        return external_successors(cfg, st, env)
    raise ValueError(f"unknown transition kind {kind!r}")


# ---------------------------------------------------------------------------
# Configuration graphs


class Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self.edges = 0

    def spend(self, n: int) -> None:
        self.used += n
        if self.used > self.limit:
            raise ResourceBudget(
                f"configuration budget of {self.limit} exceeded",
                self.used, self.edges)


@dataclass
class ConfigGraph:
    root: Configuration
    nodes: list[Configuration] = field(default_factory=list)
    edges: list[LabeledEdge] = field(default_factory=list)
    enabled: dict[Configuration, bool] = field(default_factory=dict)

    def blocked(self, cfg: Configuration) -> bool:
        return not self.enabled[cfg] and cfg.program is not None

    def terminal_eps(self, cfg: Configuration) -> bool:
        return cfg.program is None

    def internal_edges(self) -> Iterator[LabeledEdge]:
        return (e for e in self.edges if e.label == "i")

    def external_edges(self) -> Iterator[LabeledEdge]:
        return (e for e in self.edges if e.label == "e")


def explore(root: Configuration, st: Structure, env: EnvSpec,
            budget: Budget) -> ConfigGraph:
    """Reachable graph closed under internal and external transitions."""
    g = ConfigGraph(root)
    seen = {root}
    g.nodes.append(root)
    budget.spend(1)
    frontier = [root]
    while frontier:
        cfg = frontier.pop()
        ints = internal_successors(cfg, st, budget)
        g.enabled[cfg] = bool(ints)
        exts = external_successors(cfg, st, env)
        for label, succs in (("i", ints), ("e", exts)):
            for nxt in succs:
                g.edges.append(LabeledEdge(cfg, label, nxt))
                budget.edges += 1
                if nxt not in seen:
                    seen.add(nxt)
                    budget.spend(1)
                    g.nodes.append(nxt)
                    frontier.append(nxt)
    return g


def initial_states(st: Structure, pre: Expr, canonical: frozenset[str] = frozenset()
                   ) -> list[State]:
    """All carrier states satisfying the pre-condition.

    Variables in `canonical` (checker-managed locals) are pinned to the
    first carrier value instead of being enumerated.
    """
    fixed = {v: st.vars[v].carrier()[0] for v in canonical}
    out = []
    for s in st.all_states(fixed=fixed):
        if eval_assertion(pre, st, s):
            out.append(s)
    return out


def build_config_graph(z: Program, pre: Expr, rely: Expr, st: Structure,
                       budget: Budget | None = None,
                       canonical_locals: bool = False) -> list[ConfigGraph]:
    """One reachable graph per initial state satisfying the pre-condition.

    With canonical_locals the program's local variables are pinned to a
    fixed initial value; sound for validated programs since locals are
    never read before initialisation and never occur in specifications.
    """
    budget = budget or Budget(10**6)
    env = EnvSpec(rely, frozenset(hid_set(z)) & set(st.var_order))
    canonical = frozenset(declared_vars(z)) if canonical_locals else frozenset()
    graphs = []
    for s0 in initial_states(st, pre, canonical):
        graphs.append(explore(Configuration(z, s0), st, env, budget))
    return graphs


def to_dot(g: ConfigGraph, st: Structure, name: str = "config") -> str:
    """Graph in DOT text form: node = residue hash + state, edge label i/e."""
    ids = {cfg: i for i, cfg in enumerate(g.nodes)}
    lines = [f"digraph {name} {{"]
    for cfg, i in ids.items():
        h = "eps" if cfg.program is None else f"{hash(cfg.program) & 0xffffff:06x}"
        vals = ",".join(f"{k}={_short(v)}" for k, v in st.as_dict(cfg.state).items())
        shape = "doublecircle" if cfg.program is None else (
            "box" if g.blocked(cfg) else "ellipse")
        lines.append(f'  n{i} [label="{h}\\n{vals}", shape={shape}];')
    for e in g.edges:
        style = "solid" if e.label == "i" else "dashed"
        lines.append(
            f'  n{ids[e.src]} -> n{ids[e.dst]} [label="{e.label}", style={style}];')
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Computations


@dataclass(frozen=True)
class Computation:
    """Finite alternating sequence of configurations and labels."""
    configs: tuple[Configuration, ...]
    labels: tuple[str, ...]  # len(labels) == len(configs) - 1

    def __post_init__(self):
        if len(self.labels) != len(self.configs) - 1:
            raise ValueError("label/configuration count mismatch")

    @property
    def states(self) -> tuple[State, ...]:
        return tuple(c.state for c in self.configs)

    @property
    def programs(self) -> tuple[Optional[Program], ...]:
        return tuple(c.program for c in self.configs)

    def classify(self, st: Structure) -> str:
        last = self.configs[-1]
        if last.program is None:
            return "terminated"
        if not internal_successors(last, st):
            return "deadlocked"
        return "prefix"


def is_computation(c: Computation, st: Structure, require_final_disabled=True) -> bool:
    """Every step is a legal i/e transition and e-steps respect hid."""
    root = c.configs[0].program
    hid = hid_set(root) & set(st.var_order) if root is not None else set()
    for k, lab in enumerate(c.labels):
        src, dst = c.configs[k], c.configs[k + 1]
        if lab == "e":
            if dst.program != src.program:
                return False
            if not st.agree_on(src.state, dst.state, hid):
                return False
        elif lab == "i":
            if dst not in internal_successors(src, st):
                return False
        else:
            return False
    if require_final_disabled:
        last = c.configs[-1]
        if last.program is not None and internal_successors(last, st):
            return False
    return True


class CompositionError(Exception):
    pass


def compatible(c1: Computation, c2: Computation) -> Optional[int]:
    """None when compatible, else the first violating index."""
    if len(c1.configs) != len(c2.configs):
        return min(len(c1.configs), len(c2.configs))
    for j in range(len(c1.configs)):
        if c1.configs[j].state != c2.configs[j].state:
            return j
    for j, (a, b) in enumerate(zip(c1.labels, c2.labels)):
        if a == b == "i":
            return j
    return None


def compose_computations(c1: Computation, c2: Computation) -> Computation:
    """The constructive composition of two compatible computations."""
    bad = compatible(c1, c2)
    if bad is not None:
        raise CompositionError(f"computations incompatible at index {bad}")
    z1 = c1.configs[0].program
    z2 = c2.configs[0].program
    if z1 is None or z2 is None:
        raise CompositionError("component computations must start at programs")
    configs = [Configuration(Par(z1, z2), c1.configs[0].state)]
    labels = []
    for k in range(1, len(c1.configs)):
        if c1.labels[k - 1] == "e" and c2.labels[k - 1] == "e":
            labels.append("e")
        else:
            labels.append("i")
        p1 = c1.configs[k].program
        p2 = c2.configs[k].program
        if p1 is None:
            prog = p2
        elif p2 is None:
            prog = p1
        else:
            prog = Par(p1, p2)
        configs.append(Configuration(prog, c1.configs[k].state))
    return Computation(tuple(configs), tuple(labels))


def decompose_computation(c: Computation, st: Structure
                          ) -> tuple[Computation, Computation]:
    """Split a computation of {z1 || z2} into compatible component runs.

    Iterative case analysis in the order of the decomposition algorithm.
    """
    root = c.configs[0].program
    if not isinstance(root, Par):
        raise CompositionError("root program is not a parallel composition")
    cf1 = [Configuration(root.left, c.configs[0].state)]
    cf2 = [Configuration(root.right, c.configs[0].state)]
    l1: list[str] = []
    l2: list[str] = []
    for k in range(1, len(c.configs)):
        sk = c.configs[k].state
        tk = c.configs[k].program
        prev1 = cf1[-1].program
        prev2 = cf2[-1].program
        lab = c.labels[k - 1]
        if lab == "e":
            n1, n2, a1, a2 = prev1, prev2, "e", "e"
        elif prev1 is None:
            n1, n2, a1, a2 = None, tk, "e", "i"
        elif prev2 is None:
            n1, n2, a1, a2 = tk, None, "i", "e"
        elif tk == prev2:
            n1, n2, a1, a2 = None, prev2, "i", "e"
        elif tk == prev1:
            n1, n2, a1, a2 = prev1, None, "e", "i"
        elif isinstance(tk, Par) and tk.right == prev2 and _steps_to(
                prev1, cf1[-1].state, tk.left, sk, st):
            n1, n2, a1, a2 = tk.left, prev2, "i", "e"
        elif isinstance(tk, Par) and tk.left == prev1 and _steps_to(
                prev2, cf2[-1].state, tk.right, sk, st):
            n1, n2, a1, a2 = prev1, tk.right, "e", "i"
        else:
            raise CompositionError(f"no decomposition case applies at index {k}")
        cf1.append(Configuration(n1, sk))
        cf2.append(Configuration(n2, sk))
        l1.append(a1)
        l2.append(a2)
    return (Computation(tuple(cf1), tuple(l1)),
            Computation(tuple(cf2), tuple(l2)))


def _steps_to(z: Optional[Program], s: State, z2: Optional[Program],
              s2: State, st: Structure) -> bool:
    if z is None:
        return False
    return Configuration(z2, s2) in internal_successors(Configuration(z, s), st)
