import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    OBJECT_POOL,
    PARAM_POOL,
    brute_count,
    brute_holds,
    formulas,
    random_formula,
    random_structure,
    structures,
)
from pfcount.counting import (
    AssignmentError,
    BudgetError,
    Evaluator,
    count_solutions,
    evaluate,
    evaluate_sentence,
    fiber_spectrum,
    miniscope,
    verify_quotient_identity,
    verify_sum_identity,
)
from pfcount.logic import Exists, Not, Signature, VariablePartition, parse_formula
from pfcount.structures import K23_SIGNATURE, PURE_SET_SIGNATURE, build_member, k23_family, make_structure

ALL_VARS = OBJECT_POOL + PARAM_POOL
K23 = k23_family()


def k23(text):
    return parse_formula(text, K23_SIGNATURE)


class TestEvaluate:
    def test_naive_matches_oracle(self, rng):
        for _ in range(100):
            s = random_structure(rng, 4)
            f = random_formula(rng, ALL_VARS)
            env = {v: rng.randrange(s.size) for v in ALL_VARS}
            assert evaluate(s, f, env) == brute_holds(s, f, env)

    def test_missing_assignment(self):
        with pytest.raises(AssignmentError):
            evaluate(build_member(K23, 1), k23("R(x,y)"), {"x": 0})

    def test_out_of_range_element(self):
        with pytest.raises(AssignmentError):
            evaluate(build_member(K23, 1), k23("P0(x)"), {"x": 5})

    def test_sentence(self):
        assert evaluate_sentence(build_member(K23, 2), k23("exists x. exists y. R(x,y)"))
        assert not evaluate_sentence(build_member(K23, 2), k23("exists x. P0(x) & P1(x)"))


class TestCompiled:
    @settings(max_examples=200, deadline=None)
    @given(structures(), formulas())
    def test_holds_agrees_with_oracle(self, s, f):
        ev = Evaluator(s, f, ALL_VARS)
        for t in itertools.islice(itertools.product(range(s.size), repeat=len(ALL_VARS)), 60):
            assert ev.holds(t) == brute_holds(s, f, dict(zip(ALL_VARS, t)))

    @settings(max_examples=150, deadline=None)
    @given(structures(), formulas(), st.integers(0, 2))
    def test_count_agrees_with_oracle(self, s, f, nparams):
        params = PARAM_POOL[:nparams]
        objects = tuple(v for v in ALL_VARS if v not in params)
        fixed = {v: (k * 7) % s.size for k, v in enumerate(params)}
        got = count_solutions(s, f, VariablePartition(objects, params), fixed)
        assert got == brute_count(s, f, objects, fixed)

    @settings(max_examples=200, deadline=None)
    @given(structures(max_size=3), formulas())
    def test_miniscope_is_equivalent(self, s, f):
        g = miniscope(f)
        assert brute_count(s, g, ALL_VARS) == brute_count(s, f, ALL_VARS)

    @pytest.mark.parametrize(
        "text",
        [
            "forall x. (exists y. y = y) & x = x",
            "exists x. (forall y. !y = y) | x = x",
            "forall x. (exists y. y = y) -> !x = x",
            "forall x. (exists y. y = y) | !x = x",
            "exists x. (exists y. y = y) & x = x",
        ],
    )
    def test_miniscope_on_empty_universe(self, text):
        # pulling a v-free part out of a quantifier can change truth when the domain is empty
        f = parse_formula(text, PURE_SET_SIGNATURE)
        for n in (0, 1, 2):
            s = make_structure(n)
            assert brute_holds(s, miniscope(f), {}) == brute_holds(s, f, {})
            assert evaluate_sentence(s, f) == brute_holds(s, f, {})

    def test_zero_object_variables(self):
        s = build_member(K23, 1)
        assert count_solutions(s, k23("P0(y)"), VariablePartition((), ("y",)), {"y": 0}) == 1
        assert count_solutions(s, k23("P0(y)"), VariablePartition((), ("y",)), {"y": 3}) == 0


class TestCountSolutions:
    def test_k23_counts(self):
        for n in (1, 4, 7):
            s = build_member(K23, n)
            assert count_solutions(s, k23("P1(x)"), VariablePartition(("x",))) == 3 * n
            assert count_solutions(s, k23("R(x,y)"), VariablePartition(("x", "y"))) == 6 * n

    def test_unused_object_variable_multiplies(self):
        s = build_member(K23, 1)
        assert count_solutions(s, k23("P0(x)"), VariablePartition(("x", "z"))) == 2 * 5

    def test_budget(self):
        s = build_member(K23, 4)
        with pytest.raises(BudgetError):
            count_solutions(s, k23("R(x,y)"), VariablePartition(("x", "y")), budget=100)

    def test_uncovered_free_variable(self):
        with pytest.raises(AssignmentError):
            count_solutions(build_member(K23, 1), k23("R(x,y)"), VariablePartition(("x",)))

    def test_missing_parameter_value(self):
        with pytest.raises(AssignmentError):
            count_solutions(build_member(K23, 1), k23("R(x,y)"), VariablePartition(("x",), ("y",)))


class TestSpectrum:
    def test_k23_edge_spectrum(self):
        s = build_member(K23, 2)
        spec = fiber_spectrum(s, k23("R(x,y)"), VariablePartition(("x",), ("y",)))
        assert [(e.cardinality, e.size) for e in spec.entries] == [(2, 6), (0, 4)]
        assert spec.total_pairs == 12

    @settings(max_examples=150, deadline=None)
    @given(structures(), formulas(), st.integers(1, 3), st.integers(0, 2))
    def test_spectrum_partitions_parameter_space(self, s, f, nobj, npar):
        objects, params = OBJECT_POOL[:nobj], PARAM_POOL[:npar]
        f = Exists("x3", f) if nobj < 3 else f
        f = Exists("x2", f) if nobj < 2 else f
        f = Exists("y2", f) if npar < 2 else f
        f = Exists("y1", f) if npar < 1 else f
        part = VariablePartition(objects, params)
        spec = fiber_spectrum(s, f, part)
        members = [b for e in spec.entries for b in e.members]
        assert sorted(members) == list(itertools.product(range(s.size), repeat=npar))
        assert len({e.cardinality for e in spec.entries}) == len(spec.entries)
        for e in spec.entries:
            fixed = dict(zip(params, e.witness))
            assert brute_count(s, f, objects, fixed) == e.cardinality
        assert verify_sum_identity(spec, s, f, part).holds

    def test_quotient_identity_k23(self):
        s = build_member(K23, 3)
        f = k23("R(x,y)")
        q = verify_quotient_identity(s, f, VariablePartition(("x",), ("y",)))
        assert (q.applicable, q.holds, q.B, q.projection_count) == (True, True, 3, 6)
        q = verify_quotient_identity(s, f, VariablePartition(("y",), ("x",)))
        assert (q.applicable, q.holds, q.B, q.projection_count) == (True, True, 2, 9)

    def test_quotient_not_applicable(self):
        s = make_structure(3, {"E": [(0, 0), (0, 1), (1, 2)]})
        f = parse_formula("E(x,y)", Signature((("E", 2),)))
        q = verify_quotient_identity(s, f, VariablePartition(("x",), ("y",)))
        assert not q.applicable

    def test_negation_counts_complement(self):
        rng = random.Random(5)
        for _ in range(40):
            s = random_structure(rng, 4)
            f = random_formula(rng, ALL_VARS)
            part = VariablePartition(ALL_VARS)
            total = s.size ** len(ALL_VARS)
            assert count_solutions(s, f, part) + count_solutions(s, Not(f), part) == total
