import pytest
from hypothesis import given, settings

from conftest import RANDOM_SIG, formulas
from pfcount.logic import (
    And,
    ArityError,
    Atom,
    Eq,
    Exists,
    ForAll,
    Iff,
    Implies,
    Not,
    Or,
    ParseError,
    Signature,
    UnknownSymbolError,
    Var,
    VariablePartition,
    free_variables,
    is_sentence,
    parse_formula,
    rename_bound,
    to_text,
)
from pfcount.structures import K23_SIGNATURE

x, y = Var("x"), Var("y")


def p(text, sig=K23_SIGNATURE):
    return parse_formula(text, sig)


class TestSignature:
    def test_roundtrip_dict(self):
        sig = Signature((("R", 2), ("P", 1)), ("c",))
        assert Signature.from_dict(sig.to_dict()) == sig

    def test_rejects_bad_arity(self):
        with pytest.raises(ValueError):
            Signature((("R", 0),))

    def test_rejects_duplicates_and_clashes(self):
        with pytest.raises(ValueError):
            Signature((("R", 1), ("R", 2)))
        with pytest.raises(ValueError):
            Signature((("R", 1),), ("R",))

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ValueError):
            Signature.from_dict({"relations": [], "constants": [], "functions": []})


class TestParser:
    def test_precedence(self):
        assert p("P0(x) | P1(x) & R(x,x)") == Or(Atom("P0", (x,)), And(Atom("P1", (x,)), Atom("R", (x, x))))
        assert p("P0(x) -> P1(x) -> P0(x)") == Implies(Atom("P0", (x,)), Implies(Atom("P1", (x,)), Atom("P0", (x,))))
        assert p("P0(x) <-> P1(x) | P0(x)") == Iff(Atom("P0", (x,)), Or(Atom("P1", (x,)), Atom("P0", (x,))))

    def test_quantifier_scope_extends_right(self):
        f = p("exists y. R(x,y) & P1(y)")
        assert f == Exists("y", And(Atom("R", (x, y)), Atom("P1", (y,))))

    def test_negation_and_equality(self):
        assert p("!x = y") == Not(Eq(x, y))
        assert p("!!P0(x)") == Not(Not(Atom("P0", (x,))))

    def test_true_false(self):
        assert is_sentence(p("true & !false"))

    def test_unknown_relation_has_position(self):
        with pytest.raises(UnknownSymbolError) as exc:
            p("P0(x) & Q(x)")
        assert exc.value.pos == 8
        assert "position 8" in str(exc.value)

    def test_arity_error(self):
        with pytest.raises(ArityError):
            p("R(x)")

    @pytest.mark.parametrize("text", ["", "P0(x", "P0(x))", "exists . P0(x)", "P0(x) &", "x", "forall x P0(x)"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            p(text)

    def test_constants(self):
        sig = Signature((("E", 2),), ("c",))
        f = parse_formula("E(x, c)", sig)
        assert free_variables(f) == ["x"]

    def test_bound_variables_renamed_apart(self):
        f = p("P0(x) & exists x. P1(x)")
        assert free_variables(f) == ["x"]
        inner = f.right
        assert isinstance(inner, Exists) and inner.var != "x"


class TestPrinter:
    @pytest.mark.parametrize(
        "text",
        [
            "P0(x) | P1(x) & R(x,y)",
            "(P0(x) | P1(x)) & R(x,y)",
            "P0(x) -> P1(x) -> P0(x)",
            "(P0(x) -> P1(x)) -> P0(x)",
            "!(P0(x) & P1(x))",
            "(exists y. R(x,y)) & P0(x)",
            "forall x. forall y. R(x,y) -> P0(x) & P1(y)",
            "!x = y",
        ],
    )
    def test_fixed_points(self, text):
        f = p(text)
        assert p(to_text(f)) == f

    @settings(max_examples=300, deadline=None)
    @given(formulas())
    def test_print_parse_roundtrip(self, f):
        f = rename_bound(f)
        assert parse_formula(to_text(f), RANDOM_SIG) == f


class TestFreeVariables:
    def test_order_and_binding(self):
        f = p("R(y,x) & exists y. R(x,y)")
        assert free_variables(f) == ["y", "x"]

    def test_sentence(self):
        assert is_sentence(p("forall x. P0(x) | P1(x)"))
        assert not is_sentence(p("forall x. R(x,y)"))

    def test_forall_body(self):
        f = ForAll("x", Atom("R", (x, y)))
        assert free_variables(f) == ["y"]


class TestPartition:
    def test_disjoint(self):
        with pytest.raises(ValueError):
            VariablePartition(("x",), ("x",))

    def test_of_and_swap(self):
        part = VariablePartition.of(p("R(x,y)"), ("y",))
        assert part == VariablePartition(("x",), ("y",))
        assert part.swapped() == VariablePartition(("y",), ("x",))
