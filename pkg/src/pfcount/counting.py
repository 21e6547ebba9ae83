"""Satisfaction, exact counting of definable sets, and fiber decompositions.

Two evaluation routes exist on purpose.  :func:`evaluate` is a direct
recursive reading of Tarski semantics over a dictionary environment.  The
counting functions go through :class:`Evaluator`, which first pushes
quantifiers inward, then compiles the formula to closures over a slot
array and memoizes every quantified subformula on the values of its free
variables.  Tests check the two routes against each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .logic import (
    BINARY,
    QUANTIFIERS,
    And,
    Atom,
    Bottom,
    Const,
    Eq,
    Exists,
    ForAll,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Top,
    VariablePartition,
    conjunction,
    disjunction,
    free_variables,
    to_text,
)
from .structures import FiniteStructure

DEFAULT_BUDGET = 10**9


class BudgetError(RuntimeError):
    """Enumeration would exceed the configured tuple budget."""


class AssignmentError(ValueError):
    """An assignment or variable partition does not fit the formula."""


# --------------------------------------------------------------------------
# Direct evaluation
# --------------------------------------------------------------------------


def _value(s: FiniteStructure, t, env: Mapping[str, int]) -> int:
    if isinstance(t, Const):
        try:
            return s.constants[t.name]
        except KeyError:
            raise AssignmentError(f"constant {t.name!r} is not interpreted in this structure") from None
    try:
        return env[t.name]
    except KeyError:
        raise AssignmentError(f"free variable {t.name!r} is not assigned") from None


def _satisfies(s: FiniteStructure, f: Formula, env: dict) -> bool:
    if isinstance(f, Atom):
        return tuple(_value(s, t, env) for t in f.terms) in s.table(f.relation)
    if isinstance(f, Eq):
        return _value(s, f.left, env) == _value(s, f.right, env)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not _satisfies(s, f.body, env)
    if isinstance(f, And):
        return _satisfies(s, f.left, env) and _satisfies(s, f.right, env)
    if isinstance(f, Or):
        return _satisfies(s, f.left, env) or _satisfies(s, f.right, env)
    if isinstance(f, Implies):
        return (not _satisfies(s, f.left, env)) or _satisfies(s, f.right, env)
    if isinstance(f, Iff):
        return _satisfies(s, f.left, env) == _satisfies(s, f.right, env)
    if isinstance(f, Exists):
        return any(_satisfies(s, f.body, {**env, f.var: e}) for e in range(s.size))
    if isinstance(f, ForAll):
        return all(_satisfies(s, f.body, {**env, f.var: e}) for e in range(s.size))
    raise TypeError(f"not a formula: {f!r}")


def _check_assignment(s: FiniteStructure, f: Formula, a: Mapping[str, int]) -> None:
    missing = [v for v in free_variables(f) if v not in a]
    if missing:
        raise AssignmentError(f"free variables {missing} of {to_text(f)} are not assigned")
    for v, e in a.items():
        if not (isinstance(e, int) and 0 <= e < s.size):
            raise AssignmentError(f"{v} = {e!r} is not an element of a structure of size {s.size}")


def evaluate(s: FiniteStructure, f: Formula, a: Mapping[str, int]) -> bool:
    """Whether ``s`` satisfies ``f`` under assignment ``a``.

    Quantifiers range over the whole universe.  Assignments to variables
    that are not free in ``f`` are ignored.
    """
    _check_assignment(s, f, a)
    return _satisfies(s, f, dict(a))


def evaluate_sentence(s: FiniteStructure, f: Formula) -> bool:
    ev = Evaluator(s, f, ())
    return ev.holds(())


# --------------------------------------------------------------------------
# Quantifier pushing
# --------------------------------------------------------------------------


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _disjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def miniscope(f: Formula) -> Formula:
    """An equivalent formula with quantifiers pushed as far inward as is safe.

    Uses only rewrites that stay valid over the empty universe:
    ``exists v (A & B) == A & exists v B`` and ``forall v (A | B) == A | forall v B``
    when ``v`` is not free in ``A``; ``forall v (A -> B) == A -> forall v B``;
    ``exists`` distributes over ``|`` and ``forall`` over ``&``.
    """
    if isinstance(f, (Atom, Eq, Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(miniscope(f.body))
    if isinstance(f, BINARY):
        return type(f)(miniscope(f.left), miniscope(f.right))

    v = f.var
    body = miniscope(f.body)

    def has_v(g: Formula) -> bool:
        return v in free_variables(g)

    if isinstance(f, Exists):
        parts = _disjuncts(body)
        if len(parts) > 1:
            return disjunction([miniscope(Exists(v, p)) for p in parts])
        parts = _conjuncts(body)
        outside = [p for p in parts if not has_v(p)]
        inside = [p for p in parts if has_v(p)]
        if outside and inside:
            return conjunction(outside + [Exists(v, conjunction(inside))])
        return Exists(v, body)

    # ForAll
    parts = _conjuncts(body)
    if len(parts) > 1:
        return conjunction([miniscope(ForAll(v, p)) for p in parts])
    if isinstance(body, Implies):
        ante = _conjuncts(body.left)
        outside = [p for p in ante if not has_v(p)]
        inside = [p for p in ante if has_v(p)]
        if outside:
            if inside:
                rest = miniscope(ForAll(v, Implies(conjunction(inside), body.right)))
            else:
                rest = miniscope(ForAll(v, body.right))
            return Implies(conjunction(outside), rest)
        return ForAll(v, body)
    parts = _disjuncts(body)
    outside = [p for p in parts if not has_v(p)]
    inside = [p for p in parts if has_v(p)]
    if outside and inside:
        return disjunction(outside + [ForAll(v, disjunction(inside))])
    return ForAll(v, body)


# --------------------------------------------------------------------------
# Compiled evaluation
# --------------------------------------------------------------------------

Check = Callable[[list], bool]


class Evaluator:
    """Compiled satisfaction test for one formula over one structure.

    ``variables`` fixes the slot order of the formula's free variables;
    :meth:`holds` takes their values as a tuple in that order.  Quantified
    subformulas are cached on the values of their own free variables, so a
    closed subformula is computed once per evaluator.
    """

    def __init__(self, s: FiniteStructure, f: Formula, variables):
        self.structure = s
        self.formula = f
        self.variables = tuple(variables)
        missing = [v for v in free_variables(f) if v not in self.variables]
        if missing:
            raise AssignmentError(f"free variables {missing} of {to_text(f)} are not assigned")
        self._nslots = len(self.variables)
        scope = {v: i for i, v in enumerate(self.variables)}
        self._check = self._compile(miniscope(f), scope)
        self._env = [0] * self._nslots

    def holds(self, values) -> bool:
        env = self._env
        env[: len(values)] = values
        return self._check(env)

    def count(self, prefix, free_count: int) -> int:
        """Number of ways to extend ``prefix`` by ``free_count`` elements so the formula holds."""
        env = self._env
        k = len(prefix)
        env[:k] = prefix
        check = self._check
        n = self.structure.size
        total = 0
        if free_count == 0:
            return 1 if check(env) else 0
        if free_count == 1:
            for e in range(n):
                env[k] = e
                if check(env):
                    total += 1
            return total
        for tail in itertools.product(range(n), repeat=free_count):
            env[k:k + free_count] = tail
            if check(env):
                total += 1
        return total

    def _new_slot(self) -> int:
        self._nslots += 1
        return self._nslots - 1

    def _term(self, t, scope: dict):
        """(is_constant, value_or_slot)."""
        if isinstance(t, Const):
            try:
                return True, self.structure.constants[t.name]
            except KeyError:
                raise AssignmentError(f"constant {t.name!r} is not interpreted in this structure") from None
        return False, scope[t.name]

    def _compile(self, f: Formula, scope: dict) -> Check:
        if isinstance(f, Top):
            return lambda env: True
        if isinstance(f, Bottom):
            return lambda env: False
        if isinstance(f, Eq):
            (ca, a), (cb, b) = self._term(f.left, scope), self._term(f.right, scope)
            if ca and cb:
                result = a == b
                return lambda env: result
            if ca:
                return lambda env: env[b] == a
            if cb:
                return lambda env: env[a] == b
            return lambda env: env[a] == env[b]
        if isinstance(f, Atom):
            table = self.structure.table(f.relation)
            terms = [self._term(t, scope) for t in f.terms]
            if all(not c for c, _ in terms):
                slots = [x for _, x in terms]
                if len(slots) == 1:
                    (i,) = slots
                    unary = frozenset(t[0] for t in table)
                    return lambda env: env[i] in unary
                if len(slots) == 2:
                    i, j = slots
                    return lambda env: (env[i], env[j]) in table
                return lambda env: tuple(env[i] for i in slots) in table
            return lambda env: tuple(x if c else env[x] for c, x in terms) in table
        if isinstance(f, Not):
            inner = self._compile(f.body, scope)
            return lambda env: not inner(env)
        if isinstance(f, And):
            a, b = self._compile(f.left, scope), self._compile(f.right, scope)
            return lambda env: a(env) and b(env)
        if isinstance(f, Or):
            a, b = self._compile(f.left, scope), self._compile(f.right, scope)
            return lambda env: a(env) or b(env)
        if isinstance(f, Implies):
            a, b = self._compile(f.left, scope), self._compile(f.right, scope)
            return lambda env: (not a(env)) or b(env)
        if isinstance(f, Iff):
            a, b = self._compile(f.left, scope), self._compile(f.right, scope)
            return lambda env: a(env) == b(env)
        if isinstance(f, QUANTIFIERS):
            return self._compile_quantifier(f, scope)
        raise TypeError(f"not a formula: {f!r}")

    def _compile_quantifier(self, f, scope: dict) -> Check:
        slot = self._new_slot()
        body = self._compile(f.body, {**scope, f.var: slot})
        key_slots = tuple(scope[v] for v in free_variables(f))
        universe = range(self.structure.size)
        want = isinstance(f, Exists)
        cache: dict = {}

        def run(env) -> bool:
            for e in universe:
                env[slot] = e
                if body(env) == want:
                    return want
            return not want

        if not key_slots:
            def closed(env) -> bool:
                try:
                    return cache[()]
                except KeyError:
                    cache[()] = result = run(env)
                    return result
            return closed

        if len(key_slots) == 1:
            (k0,) = key_slots

            def one(env) -> bool:
                key = env[k0]
                try:
                    return cache[key]
                except KeyError:
                    cache[key] = result = run(env)
                    return result
            return one

        def many(env) -> bool:
            key = tuple(env[i] for i in key_slots)
            try:
                return cache[key]
            except KeyError:
                cache[key] = result = run(env)
                return result
        return many


# --------------------------------------------------------------------------
# Counting
# --------------------------------------------------------------------------


def _check_partition(f: Formula, part: VariablePartition, outer: Mapping[str, int]) -> None:
    named = set(part.object_vars) | set(part.parameter_vars)
    overlap = named & set(outer)
    if overlap:
        raise AssignmentError(f"variables {sorted(overlap)} are both partitioned and fixed")
    uncovered = [v for v in free_variables(f) if v not in named and v not in outer]
    if uncovered:
        raise AssignmentError(
            f"free variables {uncovered} of {to_text(f)} are neither object variables, "
            "parameters nor fixed"
        )


def _check_budget(s: FiniteStructure, nvars: int, budget: int) -> None:
    if s.size ** nvars > budget:
        raise BudgetError(
            f"enumerating {s.size}^{nvars} = {s.size ** nvars} tuples exceeds the budget of {budget}"
        )


def _check_elements(s: FiniteStructure, a: Mapping[str, int]) -> None:
    for v, e in a.items():
        if not (isinstance(e, int) and 0 <= e < s.size):
            raise AssignmentError(f"{v} = {e!r} is not an element of a structure of size {s.size}")


def count_solutions(
    s: FiniteStructure,
    f: Formula,
    part: VariablePartition,
    params: Mapping[str, int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> int:
    """Number of object-variable tuples satisfying ``f`` with ``params`` fixed.

    ``params`` must assign every parameter variable; it may also fix other
    free variables of ``f`` that are not object variables.
    """
    params = dict(params or {})
    missing = [v for v in part.parameter_vars if v not in params]
    if missing:
        raise AssignmentError(f"parameters {missing} are not assigned")
    extra = set(params) & set(part.object_vars)
    if extra:
        raise AssignmentError(f"object variables {sorted(extra)} cannot be fixed")
    outer = {v: e for v, e in params.items() if v not in part.parameter_vars}
    _check_partition(f, part, outer)
    _check_elements(s, params)
    _check_budget(s, len(part.object_vars), budget)
    fixed = tuple(params)
    ev = Evaluator(s, f, fixed + part.object_vars)
    return ev.count(tuple(params[v] for v in fixed), len(part.object_vars))


@dataclass(frozen=True)
class FiberClass:
    cardinality: int
    members: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def witness(self) -> tuple[int, ...]:
        return self.members[0]


@dataclass(frozen=True)
class FiberSpectrum:
    """Parameter tuples grouped by the cardinality of their fiber.

    ``entries`` are sorted by descending cardinality and each class lists its
    members in lexicographic order.  Cardinality 0 is a class like any other.
    """

    parameter_vars: tuple[str, ...]
    object_vars: tuple[str, ...]
    entries: tuple[FiberClass, ...]
    total_pairs: int = field(default=0)

    def cardinalities(self) -> list[int]:
        return [e.cardinality for e in self.entries]

    def class_of(self, cardinality: int) -> FiberClass | None:
        for e in self.entries:
            if e.cardinality == cardinality:
                return e
        return None

    def to_dict(self, members: bool = True) -> dict:
        out = {
            "object_vars": list(self.object_vars),
            "parameter_vars": list(self.parameter_vars),
            "total_pairs": self.total_pairs,
            "classes": [],
        }
        for e in self.entries:
            entry = {"cardinality": e.cardinality, "size": e.size, "witness": list(e.witness)}
            if members:
                entry["members"] = [list(m) for m in e.members]
            out["classes"].append(entry)
        return out


def fiber_counts(
    s: FiniteStructure,
    f: Formula,
    part: VariablePartition,
    outer_params: Mapping[str, int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> dict[tuple[int, ...], int]:
    """Fiber cardinality of every parameter tuple, in lexicographic order."""
    outer = dict(outer_params or {})
    _check_partition(f, part, outer)
    _check_elements(s, outer)
    _check_budget(s, len(part.object_vars) + len(part.parameter_vars), budget)
    fixed = tuple(outer)
    ev = Evaluator(s, f, fixed + part.parameter_vars + part.object_vars)
    head = tuple(outer[v] for v in fixed)
    nobj = len(part.object_vars)
    return {
        b: ev.count(head + b, nobj)
        for b in itertools.product(range(s.size), repeat=len(part.parameter_vars))
    }


def spectrum_from_counts(part: VariablePartition, counts: Mapping[tuple, int]) -> FiberSpectrum:
    groups: dict[int, list] = {}
    for b in sorted(counts):
        groups.setdefault(counts[b], []).append(b)
    entries = tuple(FiberClass(c, tuple(groups[c])) for c in sorted(groups, reverse=True))
    total = sum(e.cardinality * e.size for e in entries)
    return FiberSpectrum(part.parameter_vars, part.object_vars, entries, total)


def fiber_spectrum(
    s: FiniteStructure,
    f: Formula,
    part: VariablePartition,
    outer_params: Mapping[str, int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> FiberSpectrum:
    return spectrum_from_counts(part, fiber_counts(s, f, part, outer_params, budget))


@dataclass(frozen=True)
class SumCheck:
    holds: bool
    direct_total: int
    weighted_sum: int


def verify_sum_identity(
    spectrum: FiberSpectrum,
    s: FiniteStructure,
    f: Formula,
    part: VariablePartition,
    outer_params: Mapping[str, int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> SumCheck:
    """Compare the size of the combined solution set with sum(A_i * |Z_i|).

    The combined set is counted afresh with parameters treated as object
    variables, so it does not reuse the per-fiber counts.
    """
    combined = VariablePartition(part.object_vars + part.parameter_vars, ())
    direct = count_solutions(s, f, combined, outer_params, budget)
    weighted = sum(e.cardinality * e.size for e in spectrum.entries)
    return SumCheck(direct == weighted, direct, weighted)


@dataclass(frozen=True)
class QuotientCheck:
    applicable: bool
    holds: bool
    B: int | None
    projection_count: int
    weighted_sum: int

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "holds": self.holds,
            "B": self.B,
            "projection_count": self.projection_count,
            "weighted_sum": self.weighted_sum,
        }


def verify_quotient_identity(
    s: FiniteStructure,
    f: Formula,
    part: VariablePartition,
    outer_params: Mapping[str, int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> QuotientCheck:
    """Check |{a : exists y f(a, y)}| * B == sum(A_i * |Z_i|).

    Applicable only when every object tuple with a nonempty parameter-side
    fiber has the same fiber size ``B``.
    """
    outer = dict(outer_params or {})
    spectrum = fiber_spectrum(s, f, part, outer, budget)
    weighted = sum(e.cardinality * e.size for e in spectrum.entries)

    # fibers seen from the object side: swap the roles of the two tuples
    object_side = fiber_counts(s, f, part.swapped(), outer, budget)
    sizes = {c for c in object_side.values() if c}

    projected: Formula = f
    for v in reversed(part.parameter_vars):
        projected = Exists(v, projected)
    projection = count_solutions(s, projected, VariablePartition(part.object_vars, ()), outer, budget)

    if len(sizes) != 1:
        return QuotientCheck(False, False, None, projection, weighted)
    (b,) = sizes
    holds = weighted % b == 0 and weighted // b == projection
    return QuotientCheck(True, holds, b, projection, weighted)
