"""Exact univariate polynomials over the rationals.

Identities are kept exact with :class:`fractions.Fraction`.  Anything that
needs real roots or fractional powers (tail inverses, asymptotic leading
constants) is computed with mpmath at a working precision chosen from the
requested tolerance and returned as a float.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import mpmath


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {x!r}")


def format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class RationalPolynomial:
    """Coefficients constant term first; no trailing zeros (zero polynomial is ``()``)."""

    coefficients: tuple[Fraction, ...] = ()

    def __post_init__(self):
        cs = [_frac(c) for c in self.coefficients]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coefficients", tuple(cs))

    @classmethod
    def of(cls, *coefficients) -> "RationalPolynomial":
        return cls(tuple(coefficients))

    @classmethod
    def monomial(cls, coefficient, power: int) -> "RationalPolynomial":
        return cls(tuple([0] * power + [coefficient]))

    @property
    def degree(self) -> int | None:
        """Degree, or ``None`` for the zero polynomial."""
        return len(self.coefficients) - 1 if self.coefficients else None

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def is_constant(self) -> bool:
        return len(self.coefficients) <= 1

    @property
    def leading(self) -> Fraction:
        if not self.coefficients:
            raise ValueError("the zero polynomial has no leading coefficient")
        return self.coefficients[-1]

    def coefficient(self, k: int) -> Fraction:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else Fraction(0)

    def __call__(self, x):
        return eval_poly(self, x)

    def __add__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        n = max(len(self.coefficients), len(other.coefficients))
        return RationalPolynomial(tuple(self.coefficient(k) + other.coefficient(k) for k in range(n)))

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "RationalPolynomial":
        if not isinstance(other, RationalPolynomial):
            c = _frac(other)
            return RationalPolynomial(tuple(c * a for a in self.coefficients))
        if self.is_zero or other.is_zero:
            return RationalPolynomial()
        out = [Fraction(0)] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return RationalPolynomial(tuple(out))

    __rmul__ = __mul__

    def derivative(self) -> "RationalPolynomial":
        return RationalPolynomial(tuple(k * c for k, c in enumerate(self.coefficients) if k))

    def scale_argument(self, factor) -> "RationalPolynomial":
        """The polynomial ``X -> self(factor * X)``."""
        f = _frac(factor)
        return RationalPolynomial(tuple(c * f**k for k, c in enumerate(self.coefficients)))

    def __str__(self) -> str:
        return format_poly(self)


def format_poly(p: RationalPolynomial) -> str:
    """Render as ``c0 + (c1)*X + c2*X^2 ...``, skipping zero terms.

    Coefficients that are not nonnegative integers are parenthesised, so
    ``(5/2)*X`` or ``(-1)*X^2``.
    """
    if p.is_zero:
        return "0"
    terms = []
    for k, c in enumerate(p.coefficients):
        if c == 0:
            continue
        text = format_rational(c)
        if k == 0:
            terms.append(text)
            continue
        power = "X" if k == 1 else f"X^{k}"
        if c == 1:
            terms.append(power)
        elif c.denominator == 1 and c > 0:
            terms.append(f"{text}*{power}")
        else:
            terms.append(f"({text})*{power}")
    return " + ".join(terms)


_TERM = re.compile(
    r"^\s*(?:\(\s*(?P<pc>-?\d+(?:/\d+)?)\s*\)|(?P<c>-?\d+(?:/\d+)?))?\s*"
    r"(?:(?P<star>\*)?\s*X(?:\^(?P<k>\d+))?)?\s*$"
)


def parse_poly(text: str) -> RationalPolynomial:
    """Inverse of :func:`format_poly`."""
    coeffs: dict[int, Fraction] = {}
    for chunk in text.split("+"):
        m = _TERM.match(chunk)
        if not m or not chunk.strip():
            raise ValueError(f"cannot parse polynomial term {chunk!r}")
        coef = m.group("pc") or m.group("c")
        has_x = "X" in chunk
        if has_x:
            if coef is not None and not m.group("star"):
                raise ValueError(f"missing '*' in term {chunk!r}")
            k = int(m.group("k") or 1)
            c = Fraction(coef) if coef is not None else Fraction(1)
        else:
            if coef is None:
                raise ValueError(f"cannot parse polynomial term {chunk!r}")
            k, c = 0, Fraction(coef)
        coeffs[k] = coeffs.get(k, Fraction(0)) + c
    n = max(coeffs) + 1 if coeffs else 0
    return RationalPolynomial(tuple(coeffs.get(k, 0) for k in range(n)))


def eval_poly(p: RationalPolynomial, x):
    """Horner evaluation; exact for rational ``x``."""
    acc = 0
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return Fraction(acc) if isinstance(x, (int, Fraction)) else acc


# --------------------------------------------------------------------------
# Interpolation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    poly: RationalPolynomial
    sample_points: tuple[tuple[Fraction, Fraction], ...]
    held_out_verified: bool
    construction_points: int

    @property
    def degree(self) -> int | None:
        return self.poly.degree


def _newton_to_monomial(xs: Sequence[Fraction], dd: Sequence[Fraction]) -> RationalPolynomial:
    # p = dd[0] + dd[1](X-x0) + dd[2](X-x0)(X-x1) + ...
    poly = RationalPolynomial()
    basis = RationalPolynomial.of(1)
    for k, c in enumerate(dd):
        poly = poly + basis * c
        basis = basis * RationalPolynomial.of(-xs[k], 1)
    return poly


def interpolate(points: Iterable, max_degree: int | None = None) -> FitResult | None:
    """Least-degree exact polynomial through all ``points``.

    For ``d = 0, 1, ..., max_degree`` the unique interpolant of degree at most
    ``d`` through the first ``d + 1`` points is built with Newton divided
    differences and checked against every remaining point.  At least one
    point is always held out of the construction, so ``max_degree`` defaults
    to ``len(points) - 2``.  Returns ``None`` when no such degree exists.
    """
    pts = [(_frac(x), _frac(y)) for x, y in points]
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation points must have distinct abscissae")
    if max_degree is None:
        max_degree = len(pts) - 2
    if max_degree < 0 or len(pts) < max_degree + 2:
        raise ValueError(
            f"need at least max_degree + 2 = {max_degree + 2} points, got {len(pts)}"
        )
    ys = [y for _, y in pts]
    # column k of the divided-difference table, built one degree at a time
    column = list(ys)
    dd: list[Fraction] = []
    for d in range(max_degree + 1):
        if d:
            column = [(column[i + 1] - column[i]) / (xs[i + d] - xs[i]) for i in range(len(column) - 1)]
        dd.append(column[0])
        poly = _newton_to_monomial(xs, dd)
        if all(eval_poly(poly, x) == y for x, y in pts[d + 1:]):
            return FitResult(poly, tuple(pts), True, d + 1)
    return None


def leading_coefficient_sign(p: RationalPolynomial) -> int:
    if p.is_zero:
        raise ValueError("the zero polynomial has no leading coefficient")
    return 1 if p.leading > 0 else -1


# --------------------------------------------------------------------------
# Real-valued tail analysis
# --------------------------------------------------------------------------


class ToleranceError(ArithmeticError):
    """A requested accuracy was not reached within the iteration budget."""


def _mp_poly(p: RationalPolynomial, x):
    acc = mpmath.mpf(0)
    for c in reversed(p.coefficients):
        acc = acc * x + mpmath.mpf(c.numerator) / c.denominator
    return acc


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@functools.lru_cache(maxsize=256)
def monotonicity_threshold(p: RationalPolynomial, grid: int = 4096) -> float:
    """A point past which ``p`` is strictly increasing.

    Sign changes of the derivative are bracketed on ``[0, 1 + sum|c_i|/|lead|]``
    (every real root of the derivative lies below that bound); the largest
    bracketed root, refined by bisection, plus a margin of 1 is returned.
    With no sign change the threshold is 0.
    """
    if p.is_constant or p.leading <= 0:
        raise ValueError("need a nonconstant polynomial with positive leading coefficient")
    dp = p.derivative()
    if dp.is_constant:
        return 0.0
    lead = abs(dp.leading)
    bound = 1 + sum(abs(c) for c in dp.coefficients[:-1]) / lead
    hi = float(bound)
    step = hi / grid
    fc = [float(c) for c in dp.coefficients]

    def deriv(x: float) -> float:
        acc = 0.0
        for c in reversed(fc):
            acc = acc * x + c
        return acc

    xs = [k * step for k in range(grid + 1)]
    vals = [deriv(x) for x in xs]
    last = None
    for k in range(grid):
        if vals[k] == 0 or vals[k] * vals[k + 1] < 0:
            last = k
    if vals[grid] == 0:
        last = grid - 1
    if last is None:
        return 0.0
    a, b = xs[last], xs[last + 1]
    fa = vals[last]
    for _ in range(80):
        m = (a + b) / 2
        fm = deriv(m)
        if fm == 0:
            a = b = m
            break
        if (fa < 0) == (fm < 0):
            a, fa = m, fm
        else:
            b = m
    return b + 1.0


def _digits_for(*magnitudes) -> int:
    top = max((abs(float(mpmath.log10(abs(_mp(m)) + 1))) for m in magnitudes), default=0)
    return int(top) + 30


def inverse_on_tail(p: RationalPolynomial, y, abs_tol: float = 1e-9, max_iter: int = 2000) -> float:
    """The ``x >= C`` with ``p(x) = y`` where ``p`` is increasing on ``[C, inf)``.

    Found by bisection until the bracket is narrower than ``abs_tol``.
    """
    if abs_tol <= 0:
        raise ValueError("abs_tol must be positive")
    c = monotonicity_threshold(p)
    with mpmath.workdps(_digits_for(y, 1 / abs_tol, c)):
        target = _mp(y)
        lo = mpmath.mpf(c)
        if target < _mp_poly(p, lo):
            raise ValueError(f"{y} lies below the monotone tail, which starts at p({c}) = {_mp_poly(p, lo)}")
        hi = lo + 1
        while _mp_poly(p, hi) < target:
            hi = lo + 2 * (hi - lo)
        tol = mpmath.mpf(abs_tol)
        for _ in range(max_iter):
            if hi - lo <= tol:
                return float((lo + hi) / 2)
            mid = (lo + hi) / 2
            if _mp_poly(p, mid) < target:
                lo = mid
            else:
                hi = mid
    raise ToleranceError(f"bisection did not reach tolerance {abs_tol} in {max_iter} steps")


def _inverse_mp(p: RationalPolynomial, y, rel_tol):
    """High-precision tail inverse at the current mpmath precision."""
    c = mpmath.mpf(monotonicity_threshold(p))
    target = _mp(y)
    if target < _mp_poly(p, c):
        raise ValueError(f"probe {y} lies below the monotone tail of {format_poly(p)}")
    lo, hi = c, c + 1
    while _mp_poly(p, hi) < target:
        hi = c + 2 * (hi - c)
    tol = rel_tol * max(hi, 1)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _mp_poly(p, mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def inverse_shift_limit(p: RationalPolynomial) -> Fraction:
    """``lim (x / a_n)^(1/n) - p^-1(x)``, which equals ``a_{n-1} / (n a_n)``."""
    if p.is_constant:
        raise ValueError("constant polynomials have no tail inverse")
    n = p.degree
    return p.coefficient(n - 1) / (n * p.leading)


def composed_leading(g: RationalPolynomial, f: RationalPolynomial) -> tuple[float, Fraction]:
    """Leading behaviour ``mu * x^e`` of ``g(f^-1(x))``: ``mu = b_m / a_n^(m/n)``, ``e = m/n``."""
    if g.is_constant or f.is_constant:
        raise ValueError("composed_leading needs nonconstant polynomials")
    if f.leading <= 0 or g.leading <= 0:
        raise ValueError("composed_leading needs positive leading coefficients")
    m, n = g.degree, f.degree
    with mpmath.workdps(40):
        mu = _mp(g.leading) / mpmath.power(_mp(f.leading), mpmath.mpf(m) / n)
        return float(mu), Fraction(m, n)


def _exact_root(x: Fraction, n: int) -> Fraction | None:
    if x < 0:
        return None
    roots = []
    for part in (x.numerator, x.denominator):
        r = mpmath.nint(mpmath.root(part, n)) if part else 0
        r = int(r)
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**n == part:
                roots.append(cand)
                break
        else:
            return None
    return Fraction(roots[0], roots[1])


def rational_power(x: Fraction, e: Fraction) -> Fraction | None:
    """``x ** e`` when it is rational, else ``None``."""
    x, e = _frac(x), _frac(e)
    if x == 0:
        return Fraction(0) if e > 0 else (Fraction(1) if e == 0 else None)
    with mpmath.workdps(max(50, 3 * len(str(x.numerator)) + 3 * len(str(x.denominator)))):
        root = _exact_root(x, e.denominator)
    if root is None:
        return None
    return root ** e.numerator


def composed_leading_exact(g: RationalPolynomial, f: RationalPolynomial) -> Fraction | None:
    """``b_m / a_n^(m/n)`` as an exact rational when it is one."""
    if g.is_zero:
        return Fraction(0)
    if g.is_constant:
        return g.leading
    m, n = g.degree, f.degree
    power = rational_power(f.leading, Fraction(m, n))
    return None if power is None else g.leading / power


@dataclass(frozen=True)
class LimitCheck:
    passed: bool
    target: float
    values: tuple[float, ...]
    deviations: tuple[float, ...]
    rel_tol: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "target": self.target,
            "values": list(self.values),
            "deviations": list(self.deviations),
            "rel_tol": self.rel_tol,
        }


def empirical_limit_check(
    p: RationalPolynomial,
    probe_points: Sequence,
    target=None,
    rel_tol: float = 1e-3,
    g: RationalPolynomial | None = None,
    noise_floor: float = 1e-20,
) -> LimitCheck:
    """Probe the tail-inverse asymptotics of ``p`` at increasing points.

    Without ``g`` the probed quantity is ``(x / a_n)^(1/n) - p^-1(x)`` and the
    default target is :func:`inverse_shift_limit`.  With ``g`` it is
    ``(mu x^(m/n) - g(p^-1(x))) / x^(m/n)`` with ``mu, m/n`` from
    :func:`composed_leading` and default target 0.

    Passes when the last value is within ``rel_tol * max(|target|, 1)`` of the
    target and the absolute deviations do not increase over the last three
    probes.  Deviations below ``noise_floor`` count as zero.
    """
    probes = list(probe_points)
    if len(probes) < 3:
        raise ValueError("need at least three probe points")
    if any(_frac_or_float(b) <= _frac_or_float(a) for a, b in zip(probes, probes[1:])):
        raise ValueError("probe points must be strictly increasing")
    if p.is_constant or p.leading <= 0:
        raise ValueError("need a nonconstant polynomial with positive leading coefficient")
    if g is None:
        exact_target = inverse_shift_limit(p) if target is None else target
    else:
        exact_target = 0 if target is None else target
        composed_leading(g, p)  # validates g

    n = p.degree
    values = []
    with mpmath.workdps(_digits_for(*probes) + 30):
        eps = mpmath.mpf(10) ** (-(mpmath.mp.dps - 10))
        a_n = _mp(p.leading)
        for x in probes:
            xm = _mp(x)
            inv = _inverse_mp(p, xm, eps)
            if g is None:
                v = mpmath.root(xm / a_n, n) - inv
            else:
                m = g.degree
                scale = mpmath.power(xm, mpmath.mpf(m) / n)
                mu = _mp(g.leading) / mpmath.power(a_n, mpmath.mpf(m) / n)
                v = (mu * scale - _mp_poly(g, inv)) / scale
            values.append(v)
        tgt = _mp(exact_target) if isinstance(exact_target, (int, Fraction)) else mpmath.mpf(exact_target)
        devs = [abs(v - tgt) for v in values]
        devs = [mpmath.mpf(0) if d < noise_floor else d for d in devs]
        within = devs[-1] <= rel_tol * max(abs(tgt), 1)
        tail = devs[-3:]
        monotone = all(b <= a for a, b in zip(tail, tail[1:]))
        return LimitCheck(
            bool(within and monotone),
            float(tgt),
            tuple(float(v) for v in values),
            tuple(float(d) for d in devs),
            rel_tol,
        )


def _frac_or_float(x):
    return x if isinstance(x, (int, Fraction)) else float(x)
