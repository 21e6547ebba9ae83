import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfcount.polynomials import (
    RationalPolynomial,
    ToleranceError,
    composed_leading,
    composed_leading_exact,
    empirical_limit_check,
    format_poly,
    interpolate,
    inverse_on_tail,
    inverse_shift_limit,
    leading_coefficient_sign,
    monotonicity_threshold,
    parse_poly,
    rational_power,
)

P = RationalPolynomial.of
rationals = st.fractions(min_value=-50, max_value=50, max_denominator=50)


class TestArithmetic:
    def test_normalizes_trailing_zeros(self):
        assert P(1, 2, 0, 0) == P(1, 2)
        assert P(0, 0).is_zero and P().degree is None

    def test_ops(self):
        a, b = P(1, 1), P(-1, 1)
        assert a * b == P(-1, 0, 1)
        assert a + b == P(0, 2)
        assert (a - a).is_zero
        assert P(1, 2, 3).derivative() == P(2, 6)
        assert P(1, 1).scale_argument(Fraction(2, 3)) == P(1, Fraction(2, 3))

    @settings(max_examples=200)
    @given(st.lists(rationals, max_size=6), st.lists(rationals, max_size=6), rationals)
    def test_evaluation_is_a_ring_map(self, a, b, x):
        p, q = RationalPolynomial(tuple(a)), RationalPolynomial(tuple(b))
        assert (p * q)(x) == p(x) * q(x)
        assert (p + q)(x) == p(x) + q(x)

    def test_sign(self):
        assert leading_coefficient_sign(P(5, -1)) == -1
        with pytest.raises(ValueError):
            leading_coefficient_sign(P())


class TestFormat:
    @pytest.mark.parametrize(
        "p, text",
        [
            (P(0, Fraction(5, 2)), "(5/2)*X"),
            (P(3, 0, 1), "3 + X^2"),
            (P(0, 0, -1), "(-1)*X^2"),
            (P(), "0"),
            (P(2), "2"),
            (P(Fraction(-1, 3), 4), "-1/3 + 4*X"),
        ],
    )
    def test_format(self, p, text):
        assert format_poly(p) == text
        assert parse_poly(text) == p

    @settings(max_examples=200)
    @given(st.lists(rationals, max_size=7))
    def test_roundtrip(self, cs):
        p = RationalPolynomial(tuple(cs))
        assert parse_poly(format_poly(p)) == p

    def test_bad_text(self):
        with pytest.raises(ValueError):
            parse_poly("3 X")


class TestInterpolation:
    def test_recovers_linear(self):
        fit = interpolate([(2, 5), (4, 10), (6, 15)])
        assert fit.poly == P(0, Fraction(5, 2))
        assert fit.held_out_verified and fit.construction_points == 2

    def test_holds_out_a_point(self):
        # three points on no line: degree 2 would need every point
        assert interpolate([(0, 0), (1, 1), (2, 4)]) is None
        assert interpolate([(0, 0), (1, 1), (2, 4), (3, 9)]).poly == P(0, 0, 1)

    def test_constant(self):
        assert interpolate([(1, 7), (3, 7)]).poly == P(7)

    def test_errors(self):
        with pytest.raises(ValueError):
            interpolate([(1, 1), (1, 2), (2, 3)])
        with pytest.raises(ValueError):
            interpolate([(1, 1)])

    @settings(max_examples=150, deadline=None)
    @given(st.lists(rationals, min_size=1, max_size=7), st.integers(1, 3))
    def test_exact_recovery(self, cs, extra):
        p = RationalPolynomial(tuple(cs))
        n = (p.degree or 0) + 1 + extra
        fit = interpolate([(x, p(x)) for x in range(-2, n - 2)])
        assert fit is not None and fit.poly == p

    def test_minimal_degree_against_brute_force(self):
        rng = random.Random(3)
        for _ in range(50):
            ys = [rng.randint(-3, 3) for _ in range(5)]
            pts = list(zip(range(5), ys))
            fit = interpolate(pts)
            # finite differences vanish at the first order that fits all points
            diffs, order = list(ys), 0
            while any(diffs) and len(diffs) > 1 and len(set(diffs)) > 1:
                diffs = [b - a for a, b in zip(diffs, diffs[1:])]
                order += 1
            if order <= 3:
                assert fit is not None and (fit.poly.degree or 0) == order
            else:
                assert fit is None


class TestTail:
    def test_threshold_linear_and_quadratic(self):
        assert monotonicity_threshold(P(3, 2)) == 0.0
        c = monotonicity_threshold(P(0, -4, 1))  # vertex at 2
        assert 2.0 < c <= 3.0 + 1e-9

    def test_threshold_rejects(self):
        with pytest.raises(ValueError):
            monotonicity_threshold(P(0, -1))

    def test_threshold_past_all_critical_points(self):
        p = P(0, 0, -6, 0, 1)  # critical points at 0 and +-sqrt(3)
        c = monotonicity_threshold(p)
        assert c >= math.sqrt(3)

    def test_inverse(self):
        p = P(0, 4, 1)
        for y in (5, 100, 12345):
            x = inverse_on_tail(p, y)
            assert abs(x - (-2 + math.sqrt(4 + y))) < 1e-8

    def test_inverse_below_tail(self):
        with pytest.raises(ValueError):
            inverse_on_tail(P(0, -4, 1), -10)

    def test_inverse_tolerance(self):
        with pytest.raises(ToleranceError):
            inverse_on_tail(P(0, 1), 10**6, abs_tol=1e-12, max_iter=3)

    def test_shift_limit(self):
        assert inverse_shift_limit(P(0, 4, 1)) == 2
        assert inverse_shift_limit(P(1, 3, 0, 2)) == 0
        assert inverse_shift_limit(P(0, 0, 5, 3)) == Fraction(5, 9)

    def test_empirical_shift(self):
        chk = empirical_limit_check(P(0, 4, 1), [10**4, 10**6, 10**8])
        assert chk.passed and chk.target == 2.0
        assert abs(chk.values[-1] - 2) < 1e-3

    def test_empirical_shift_wrong_target(self):
        assert not empirical_limit_check(P(0, 4, 1), [10**4, 10**6, 10**8], target=3).passed

    def test_probe_validation(self):
        with pytest.raises(ValueError):
            empirical_limit_check(P(0, 1), [10, 5, 100])
        with pytest.raises(ValueError):
            empirical_limit_check(P(0, 1), [10, 100])


class TestComposed:
    def test_leading(self):
        mu, e = composed_leading(P(0, 3), P(0, 5))
        assert e == 1 and abs(mu - 0.6) < 1e-15
        mu, e = composed_leading(P(0, 0, 1), P(0, 0, 0, 8))
        assert e == Fraction(2, 3) and abs(mu - 0.25) < 1e-15

    def test_exact(self):
        assert composed_leading_exact(P(0, 6), P(0, 5)) == Fraction(6, 5)
        assert composed_leading_exact(P(0, 0, 1), P(0, 0, 0, 8)) == Fraction(1, 4)
        assert composed_leading_exact(P(0, 1), P(0, 0, 2)) is None

    def test_rational_power(self):
        assert rational_power(Fraction(27, 8), Fraction(2, 3)) == Fraction(9, 4)
        assert rational_power(Fraction(2), Fraction(1, 2)) is None

    def test_composed_empirical(self):
        # g(f^-1(x)) = 1 + 2x/3 + x^2/9, so the scaled gap is -(2/3)/x + O(x^-2)
        chk = empirical_limit_check(P(0, 3), [10**3, 10**5, 10**7], g=P(1, 2, 1))
        assert chk.passed and chk.target == 0.0
        assert abs(chk.values[-1] + Fraction(2, 3) / 10**7) < 1e-12
        chk = empirical_limit_check(P(0, 0, 4), [10**4, 10**6, 10**8], g=P(0, 2, 1))
        assert chk.passed
