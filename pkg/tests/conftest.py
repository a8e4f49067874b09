import random

import pytest

from rgkit.parser import parse_assertion, parse_program
from rgkit.sorts import Structure, bool_sort, nat_sort


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def tiny_structure(**vars_spec):
    """Structure from name=('nat', lo, hi) or name='bool' keyword args."""
    sorts = {}
    vars = {}
    for name, spec in vars_spec.items():
        if spec == "bool":
            sorts.setdefault("Bool", bool_sort("Bool"))
            vars[name] = sorts["Bool"]
        else:
            _, lo, hi = spec
            key = f"N{lo}_{hi}"
            sorts.setdefault(key, nat_sort(key, lo, hi))
            vars[name] = sorts[key]
    return Structure(sorts=sorts, vars=vars)


def expr(text, st, scope=None):
    return parse_assertion(text, scope or tuple(st.var_order),
                           st.sorts, st.vars)


def prog(text):
    return parse_program(text)
