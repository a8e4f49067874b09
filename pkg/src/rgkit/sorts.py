"""Finite sorts, structures and states.

Every sort carries an explicit, ordered, finite carrier so that validity,
closure operators and satisfaction can all be decided by enumeration.
Values are plain Python objects: bool, int, str (enum members), tuple
(sequences) and frozenset (finite sets).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

Value = object


class SortError(Exception):
    """A sort declaration or value/sort mismatch."""


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str  # "bool" | "nat" | "enum" | "seq" | "set"
    lo: int = 0
    hi: int = 0
    members: tuple[str, ...] = ()
    elem: "Sort | None" = None
    max_len: int = 0

    def carrier(self) -> tuple[Value, ...]:
        return _carrier(self)

    def contains(self, v: Value) -> bool:
        if self.kind == "bool":
            return isinstance(v, bool)
        if self.kind == "nat":
            return isinstance(v, int) and not isinstance(v, bool)
        if self.kind == "enum":
            return v in self.members
        if self.kind == "seq":
            return (isinstance(v, tuple)
                    and all(self.elem.contains(x) for x in v))
        if self.kind == "set":
            return (isinstance(v, frozenset)
                    and all(self.elem.contains(x) for x in v))
        raise SortError(f"unknown sort kind {self.kind!r}")

    def in_carrier(self, v: Value) -> bool:
        """Strict membership in the declared carrier.

        For nat this also checks the declared range; `contains` only checks
        the value kind (computed naturals may transiently leave the range).
        """
        if self.kind == "nat":
            return isinstance(v, int) and not isinstance(v, bool) \
                and self.lo <= v <= self.hi
        if self.kind == "seq":
            return self.contains(v) and len(v) <= self.max_len \
                and all(self.elem.in_carrier(x) for x in v)
        if self.kind == "set":
            return self.contains(v) and all(self.elem.in_carrier(x) for x in v)
        return self.contains(v)

    def __repr__(self) -> str:
        return f"Sort({self.name})"


def bool_sort(name: str = "Bool") -> Sort:
    return Sort(name, "bool")


def nat_sort(name: str, lo: int, hi: int) -> Sort:
    if hi < lo:
        raise SortError(f"empty range {lo}..{hi} for sort {name}")
    return Sort(name, "nat", lo=lo, hi=hi)


def enum_sort(name: str, members: tuple[str, ...]) -> Sort:
    if not members:
        raise SortError(f"enum sort {name} needs at least one member")
    if len(set(members)) != len(members):
        raise SortError(f"enum sort {name} has duplicate members")
    return Sort(name, "enum", members=tuple(members))


def seq_sort(name: str, elem: Sort, max_len: int) -> Sort:
    if max_len < 0:
        raise SortError("sequence bound must be non-negative")
    return Sort(name, "seq", elem=elem, max_len=max_len)


def set_sort(name: str, elem: Sort) -> Sort:
    return Sort(name, "set", elem=elem)


_CARRIER_CACHE: dict[Sort, tuple[Value, ...]] = {}


def _carrier(sort: Sort) -> tuple[Value, ...]:
    got = _CARRIER_CACHE.get(sort)
    if got is not None:
        return got
    if sort.kind == "bool":
        vals: tuple[Value, ...] = (False, True)
    elif sort.kind == "nat":
        vals = tuple(range(sort.lo, sort.hi + 1))
    elif sort.kind == "enum":
        vals = sort.members
    elif sort.kind == "seq":
        elems = _carrier(sort.elem)
        out: list[Value] = []
        for n in range(sort.max_len + 1):
            out.extend(itertools.product(elems, repeat=n))
        vals = tuple(out)
    elif sort.kind == "set":
        elems = _carrier(sort.elem)
        out = [frozenset(c)
               for n in range(len(elems) + 1)
               for c in itertools.combinations(elems, n)]
        vals = tuple(out)
    else:
        raise SortError(f"unknown sort kind {sort.kind!r}")
    if not vals:
        raise SortError(f"sort {sort.name} has an empty carrier")
    _CARRIER_CACHE[sort] = vals
    return vals


class State:
    """Total map from the structure's variables to values.

    Stored as a tuple in the structure's variable order; hashable so states
    can be graph-node components.
    """

    __slots__ = ("vals",)

    def __init__(self, vals: tuple):
        self.vals = vals

    def __eq__(self, other) -> bool:
        return isinstance(other, State) and self.vals == other.vals

    def __hash__(self) -> int:
        return hash(self.vals)

    def __repr__(self) -> str:
        return f"State{self.vals!r}"


@dataclass
class Structure:
    """Declared sorts plus a variable table: the finite interpretation

    everything is evaluated against. Variable order is fixed at creation
    and shared by all states.
    """

    sorts: dict[str, Sort] = field(default_factory=dict)
    vars: dict[str, Sort] = field(default_factory=dict)
    _order: tuple[str, ...] = ()
    _index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._order = tuple(self.vars)
        self._index = {v: i for i, v in enumerate(self._order)}

    @property
    def var_order(self) -> tuple[str, ...]:
        return self._order

    def sort_of(self, var: str) -> Sort:
        try:
            return self.vars[var]
        except KeyError:
            raise SortError(f"undeclared variable {var!r}") from None

    def index_of(self, var: str) -> int:
        try:
            return self._index[var]
        except KeyError:
            raise SortError(f"undeclared variable {var!r}") from None

    def get(self, s: State, var: str) -> Value:
        return s.vals[self.index_of(var)]

    def set(self, s: State, var: str, val: Value) -> State:
        i = self.index_of(var)
        sort = self.vars[var]
        if not sort.contains(val):
            raise SortError(
                f"value {val!r} is not a {sort.name} (assigning {var})")
        if sort.kind == "seq" and len(val) > sort.max_len:
            # hard error, never silent truncation
            raise SortError(
                f"sequence of length {len(val)} exceeds the declared "
                f"bound {sort.max_len} of {sort.name} (assigning {var})")
        vals = list(s.vals)
        vals[i] = val
        return State(tuple(vals))

    def state(self, mapping: dict[str, Value]) -> State:
        missing = [v for v in self._order if v not in mapping]
        if missing:
            raise SortError(f"state is missing values for {missing}")
        extra = [v for v in mapping if v not in self._index]
        if extra:
            raise SortError(f"state mentions undeclared variables {extra}")
        return State(tuple(mapping[v] for v in self._order))

    def as_dict(self, s: State) -> dict[str, Value]:
        return dict(zip(self._order, s.vals))

    def all_states(self, fixed: dict[str, Value] | None = None) -> Iterator[State]:
        """Every carrier state; `fixed` pins some variables to one value."""
        fixed = fixed or {}
        axes = []
        for v in self._order:
            if v in fixed:
                axes.append((fixed[v],))
            else:
                axes.append(self.vars[v].carrier())
        for combo in itertools.product(*axes):
            yield State(combo)

    def agree_on(self, s1: State, s2: State, names) -> bool:
        return all(s1.vals[self._index[v]] == s2.vals[self._index[v]]
                   for v in names)

    def restrict(self, s: State, names: tuple[str, ...]) -> tuple:
        """Projection of a state onto `names` (a plain tuple, for closures)."""
        return tuple(s.vals[self._index[v]] for v in names)
