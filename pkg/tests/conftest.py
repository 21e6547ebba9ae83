"""Shared fixtures: an independent brute-force interpreter and random generators.

The interpreter here deliberately shares no code with ``pfcount.counting``
so it can serve as the oracle for the compiled evaluator.
"""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import strategies as st

from pfcount.logic import (
    And,
    Atom,
    Bottom,
    Const,
    Eq,
    Exists,
    ForAll,
    Iff,
    Implies,
    Not,
    Or,
    Signature,
    Top,
    Var,
)
from pfcount.structures import make_structure

RANDOM_SIG = Signature((("U", 1), ("E", 2), ("T", 3)), ("c",))
OBJECT_POOL = ("x1", "x2", "x3")
PARAM_POOL = ("y1", "y2")
BOUND_POOL = ("z1", "z2", "x1")  # x1 on purpose: quantifiers may shadow free names


def brute_holds(s, f, env) -> bool:
    def val(t):
        return env[t.name] if isinstance(t, Var) else s.constants[t.name]

    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Atom):
        return tuple(val(t) for t in f.terms) in s.relations[f.relation]
    if isinstance(f, Eq):
        return val(f.left) == val(f.right)
    if isinstance(f, Not):
        return not brute_holds(s, f.body, env)
    if isinstance(f, And):
        return brute_holds(s, f.left, env) and brute_holds(s, f.right, env)
    if isinstance(f, Or):
        return brute_holds(s, f.left, env) or brute_holds(s, f.right, env)
    if isinstance(f, Implies):
        return (not brute_holds(s, f.left, env)) or brute_holds(s, f.right, env)
    if isinstance(f, Iff):
        return brute_holds(s, f.left, env) == brute_holds(s, f.right, env)
    if isinstance(f, (Exists, ForAll)):
        results = (brute_holds(s, f.body, {**env, f.var: a}) for a in range(s.size))
        return any(results) if isinstance(f, Exists) else all(results)
    raise TypeError(f)


def _source(f) -> str:
    """Python expression with the same semantics as ``brute_holds``.

    Quantifiers become ``any``/``all`` over the whole universe, so nothing is
    cached or reordered; generator scoping takes care of shadowed names.
    """
    def term(t):
        return f"c_{t.name}" if isinstance(t, Const) else f"v_{t.name}"

    if isinstance(f, Top):
        return "True"
    if isinstance(f, Bottom):
        return "False"
    if isinstance(f, Atom):
        return f"(({', '.join(term(t) for t in f.terms)},) in r_{f.relation})"
    if isinstance(f, Eq):
        return f"({term(f.left)} == {term(f.right)})"
    if isinstance(f, Not):
        return f"(not {_source(f.body)})"
    if isinstance(f, And):
        return f"({_source(f.left)} and {_source(f.right)})"
    if isinstance(f, Or):
        return f"({_source(f.left)} or {_source(f.right)})"
    if isinstance(f, Implies):
        return f"((not {_source(f.left)}) or {_source(f.right)})"
    if isinstance(f, Iff):
        return f"({_source(f.left)} == {_source(f.right)})"
    q = "any" if isinstance(f, Exists) else "all"
    return f"{q}({_source(f.body)} for v_{f.var} in U)"


def brute_count(s, f, variables, fixed=None) -> int:
    env = {f"r_{name}": table for name, table in s.relations.items()}
    env.update({f"c_{name}": value for name, value in s.constants.items()})
    env.update({f"v_{name}": value for name, value in (fixed or {}).items()})
    env["U"] = range(s.size)
    loops = " ".join(f"for v_{v} in U" for v in variables)
    return eval(f"sum(1 {loops} if {_source(f)})", env)


# --------------------------------------------------------------------------
# seeded random generators (used by the acceptance suite)
# --------------------------------------------------------------------------


def random_structure(rng: random.Random, max_size: int = 8, sig: Signature = RANDOM_SIG):
    n = rng.randint(1, max_size)
    rels = {}
    for name, arity in sig.relations:
        density = rng.choice((0.1, 0.3, 0.5, 0.8))
        rels[name] = [t for t in itertools.product(range(n), repeat=arity) if rng.random() < density]
    consts = {c: rng.randrange(n) for c in sig.constants}
    return make_structure(n, rels, consts)


def random_formula(rng: random.Random, free: tuple[str, ...], depth: int = 3, quantifiers: int = 2):
    """Random formula over ``RANDOM_SIG`` whose free variables lie in ``free``."""
    scope = list(free)
    budget = [quantifiers]

    def term(scope):
        if scope and rng.random() < 0.85:
            return Var(rng.choice(scope))
        return Const("c")

    def atom(scope):
        r = rng.random()
        if r < 0.3:
            return Atom("U", (term(scope),))
        if r < 0.6:
            return Atom("E", (term(scope), term(scope)))
        if r < 0.75:
            return Atom("T", (term(scope), term(scope), term(scope)))
        if r < 0.95:
            return Eq(term(scope), term(scope))
        return rng.choice((Top(), Bottom()))

    def go(d, scope):
        if d == 0:
            return atom(scope)
        r = rng.random()
        if r < 0.2:
            return atom(scope)
        if r < 0.35:
            return Not(go(d - 1, scope))
        if r < 0.75 or budget[0] == 0:
            op = rng.choice((And, And, Or, Or, Implies, Iff))
            return op(go(d - 1, scope), go(d - 1, scope))
        budget[0] -= 1
        v = rng.choice(BOUND_POOL)
        q = rng.choice((Exists, ForAll))
        return q(v, go(d - 1, scope + [v]))

    return go(depth, scope)


def random_partition(rng: random.Random):
    objects = tuple(OBJECT_POOL[: rng.randint(1, 3)])
    params = tuple(PARAM_POOL[: rng.randint(0, 2)])
    return objects, params


# --------------------------------------------------------------------------
# hypothesis strategies
# --------------------------------------------------------------------------


@st.composite
def structures(draw, max_size: int = 4):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_structure(random.Random(seed), max_size)


@st.composite
def formulas(draw, free=OBJECT_POOL + PARAM_POOL, depth: int = 3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_formula(random.Random(seed), tuple(free), depth)


@pytest.fixture
def rng():
    return random.Random(20240611)
