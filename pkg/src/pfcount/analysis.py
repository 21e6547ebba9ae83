"""Family-level analyses over sampled members of a :class:`FamilySpec`.

Every analysis samples members by index, does exact per-member counting,
and then looks at how the counts move with the size ``q`` of a chosen
one-variable definable set (the q-selector).  Classes of parameter tuples
are matched across members by the rank of their fiber cardinality, largest
first; which formula defines a class is never synthesised, only its
extension and a witness are reported.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .counting import (
    DEFAULT_BUDGET,
    Evaluator,
    FiberSpectrum,
    count_solutions,
    evaluate_sentence,
    fiber_spectrum,
)
from .logic import Formula, VariablePartition, free_variables, is_sentence, to_text
from .polynomials import (
    RationalPolynomial,
    composed_leading,
    composed_leading_exact,
    format_poly,
    format_rational,
    interpolate,
    rational_power,
)
from .structures import FamilySpec, FiniteStructure, build_member

log = logging.getLogger(__name__)


class SelectorError(ValueError):
    """The q-selector picks out nothing in a member."""


class AnalysisError(ValueError):
    """The requested analysis cannot be run on these inputs."""


# --------------------------------------------------------------------------
# q-selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QSelector:
    """``theta(v, w)`` gives the set whose size is ``q``; ``kappa(w)`` admits parameters.

    The parameter tuple used in a member is the lexicographically least one
    satisfying ``kappa``.
    """

    theta: Formula
    kappa: Formula | None = None
    object_var: str = "v"
    parameter_vars: tuple[str, ...] = ()

    def describe(self) -> dict:
        return {
            "theta": to_text(self.theta),
            "kappa": to_text(self.kappa) if self.kappa is not None else None,
            "object_var": self.object_var,
            "parameter_vars": list(self.parameter_vars),
        }


def make_selector(theta: Formula, kappa: Formula | None = None) -> QSelector:
    """Build a selector; the object variable is ``v`` if free in theta, else its first free variable."""
    fv = free_variables(theta)
    if not fv:
        raise AnalysisError(f"theta {to_text(theta)} has no free variable to count")
    obj = "v" if "v" in fv else fv[0]
    params = [w for w in fv if w != obj]
    if kappa is not None:
        kfv = free_variables(kappa)
        if obj in kfv:
            raise AnalysisError(f"kappa may not mention the counted variable {obj}")
        params += [w for w in kfv if w not in params]
    return QSelector(theta, kappa, obj, tuple(params))


def select_q_parameters(
    member: FiniteStructure, sel: QSelector, budget: int = DEFAULT_BUDGET
) -> tuple[tuple[int, ...], int]:
    """Lexicographically least kappa-satisfying tuple and the size of theta there."""
    k = len(sel.parameter_vars)
    if member.size ** (k + 1) > budget:
        raise AnalysisError(f"selector enumeration exceeds the budget of {budget}")
    kappa = Evaluator(member, sel.kappa, sel.parameter_vars) if sel.kappa is not None else None
    part = VariablePartition((sel.object_var,), sel.parameter_vars)
    for d in itertools.product(range(member.size), repeat=k):
        if kappa is None or kappa.holds(d):
            q = count_solutions(member, sel.theta, part, dict(zip(sel.parameter_vars, d)), budget)
            if q == 0:
                raise SelectorError(f"theta is empty at the selected parameters {d}")
            return d, q
    raise SelectorError("kappa is not satisfied by any tuple")


# --------------------------------------------------------------------------
# Per-member data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MemberData:
    index: int
    size: int
    q: int | None
    selector_params: tuple[int, ...] | None
    spectrum: FiberSpectrum | None
    combined: int | None
    skipped: str | None = None


def _member_data(spec: FamilySpec, index: int, f: Formula, part: VariablePartition,
                 sel: QSelector | None, budget: int) -> MemberData:
    member = build_member(spec, index)
    if sel is None:
        d, q = None, index
    else:
        try:
            d, q = select_q_parameters(member, sel, budget)
        except SelectorError as exc:
            return MemberData(index, member.size, None, None, None, None, str(exc))
    spectrum = fiber_spectrum(member, f, part, None, budget)
    combined = count_solutions(member, f, VariablePartition(part.object_vars + part.parameter_vars), None, budget)
    return MemberData(index, member.size, q, d, spectrum, combined)


def _collect(spec, indices, f, part, sel, budget, jobs) -> list[MemberData]:
    args = [(spec, i, f, part, sel, budget) for i in indices]
    if jobs and jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_member_data, *zip(*args)))
    return [_member_data(*a) for a in args]


def _resolve_indices(spec: FamilySpec, indices) -> list[int]:
    if indices is None:
        lo, hi = spec.index_domain
        indices = range(lo, min(hi, lo + 11) + 1)
    indices = list(indices)
    lo, hi = spec.index_domain
    bad = [i for i in indices if not lo <= i <= hi]
    if bad:
        raise AnalysisError(f"indices {bad} lie outside the family's index domain {lo}..{hi}")
    if not indices:
        raise AnalysisError("no indices to sample")
    if sorted(set(indices)) != indices:
        raise AnalysisError("indices must be strictly increasing")
    return indices


# --------------------------------------------------------------------------
# Polynomial fitting
# --------------------------------------------------------------------------


def _fit_series(qs: Sequence[int], values: Sequence[int]) -> tuple[RationalPolynomial | None, str | None]:
    pts: dict[int, int] = {}
    for q, v in zip(qs, values):
        if q in pts and pts[q] != v:
            return None, f"q = {q} occurs with different values {pts[q]} and {v}"
        pts[q] = v
    if len(pts) < 2:
        return None, "fewer than two distinct q values; nothing can be held out"
    fit = interpolate(sorted(pts.items()))
    if fit is None:
        return None, "unstable counts: no polynomial of degree <= points - 2 fits the sampled values"
    return fit.poly, None


@dataclass
class ClassFit:
    rank: int
    polynomial: RationalPolynomial | None
    counts: list[int]
    sizes: list[int]
    witnesses: list[list[int]]
    size_polynomial: RationalPolynomial | None = None
    members: list[list[list[int]]] | None = None
    note: str | None = None

    @property
    def degree(self) -> int | None:
        return None if self.polynomial is None else self.polynomial.degree

    @property
    def leading_sign(self) -> int | None:
        if self.polynomial is None or self.polynomial.is_zero:
            return None
        return 1 if self.polynomial.leading > 0 else -1

    @property
    def is_constant(self) -> bool:
        return self.polynomial is not None and self.polynomial.is_constant

    def to_dict(self, full: bool = False) -> dict:
        out = {
            "rank": self.rank,
            "polynomial": format_poly(self.polynomial) if self.polynomial is not None else None,
            "degree": self.degree,
            "leading_sign": self.leading_sign,
            "counts": self.counts,
            "class_sizes": self.sizes,
            "size_polynomial": format_poly(self.size_polynomial) if self.size_polynomial is not None else None,
            "witnesses": self.witnesses,
            "note": self.note,
        }
        if full:
            out["members"] = self.members
        return out


@dataclass
class MecReport:
    formula: str
    object_vars: list[str]
    parameter_vars: list[str]
    selector: dict | None
    sampled_indices: list[int]
    skipped: list[dict]
    sizes: list[int]
    q_values: list[int]
    selector_params: list[list[int] | None]
    class_counts: list[int]
    classes: list[ClassFit]
    class_count_stable: bool
    sum_consistent: bool
    diagnostics: list[str] = field(default_factory=list)

    @property
    def fitted(self) -> bool:
        return self.class_count_stable and bool(self.classes) and all(c.polynomial is not None for c in self.classes)

    @property
    def leading_positive(self) -> bool:
        return all(c.leading_sign in (None, 1) for c in self.classes)

    @property
    def ok(self) -> bool:
        return self.fitted and self.leading_positive and self.sum_consistent

    def to_dict(self, full: bool = False) -> dict:
        return {
            "command": "mec" if full else "fit",
            "formula": self.formula,
            "object_vars": self.object_vars,
            "parameter_vars": self.parameter_vars,
            "selector": self.selector,
            "sampled_indices": self.sampled_indices,
            "skipped": self.skipped,
            "sizes": self.sizes,
            "q_values": self.q_values,
            "selector_params": self.selector_params,
            "class_counts": self.class_counts,
            "class_count_stable": self.class_count_stable,
            "fitted": self.fitted,
            "leading_positive": self.leading_positive,
            "sum_consistent": self.sum_consistent,
            "ok": self.ok,
            "classes": [c.to_dict(full) for c in self.classes],
            "diagnostics": self.diagnostics,
        }


def fit_counting_polynomials(
    spec: FamilySpec,
    f: Formula,
    part: VariablePartition,
    sel: QSelector | None = None,
    indices=None,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> MecReport:
    """Fit one exact polynomial in ``q`` per fiber-cardinality class.

    Without a selector ``q`` is the member index itself.  The degree of each
    fitted polynomial is the rank proxy for that class.
    """
    indices = _resolve_indices(spec, indices)
    data = _collect(spec, indices, f, part, sel, budget, jobs)
    used = [m for m in data if m.skipped is None]
    skipped = [{"index": m.index, "reason": m.skipped} for m in data if m.skipped is not None]
    diagnostics = [f"member {s['index']} skipped: {s['reason']}" for s in skipped]

    sizes = [m.size for m in used]
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        diagnostics.append("member sizes decrease along the sampled indices")

    qs = [m.q for m in used]
    class_counts = [len(m.spectrum.entries) for m in used]
    stable = bool(used) and len(set(class_counts)) == 1
    classes: list[ClassFit] = []
    sum_ok = True

    if not used:
        diagnostics.append("no member could be sampled")
    elif not stable:
        diagnostics.append(
            "number of fiber classes changes across members: "
            + ", ".join(f"{m.index}:{c}" for m, c in zip(used, class_counts))
        )
    else:
        for rank in range(class_counts[0]):
            entries = [m.spectrum.entries[rank] for m in used]
            counts = [e.cardinality for e in entries]
            csizes = [e.size for e in entries]
            poly, why = _fit_series(qs, counts)
            size_poly, _ = _fit_series(qs, csizes)
            cf = ClassFit(
                rank=rank + 1,
                polynomial=poly,
                counts=counts,
                sizes=csizes,
                witnesses=[list(e.witness) for e in entries],
                size_polynomial=size_poly,
                members=[[list(t) for t in e.members] for e in entries],
                note=why,
            )
            if why:
                diagnostics.append(f"class {rank + 1}: {why}")
            elif cf.leading_sign == -1:
                diagnostics.append(f"class {rank + 1}: fitted polynomial has negative leading coefficient")
            classes.append(cf)
        for m in used:
            weighted = sum(e.cardinality * e.size for e in m.spectrum.entries)
            if weighted != m.combined:
                sum_ok = False
                diagnostics.append(f"member {m.index}: sum of class counts {weighted} != combined count {m.combined}")
        if all(c.polynomial is not None for c in classes):
            for m_i, m in enumerate(used):
                lifted = sum(c.polynomial(m.q) * c.sizes[m_i] for c in classes)
                if lifted != m.combined:
                    sum_ok = False
                    diagnostics.append(f"member {m.index}: fitted sum {lifted} != combined count {m.combined}")

    return MecReport(
        formula=to_text(f),
        object_vars=list(part.object_vars),
        parameter_vars=list(part.parameter_vars),
        selector=sel.describe() if sel is not None else None,
        sampled_indices=[m.index for m in used],
        skipped=skipped,
        sizes=sizes,
        q_values=qs,
        selector_params=[list(m.selector_params) if m.selector_params is not None else None for m in used],
        class_counts=class_counts,
        classes=classes,
        class_count_stable=stable,
        sum_consistent=sum_ok,
        diagnostics=diagnostics,
    )


# --------------------------------------------------------------------------
# N-dimensional asymptotic certification
# --------------------------------------------------------------------------


@dataclass
class NDimEntry:
    rank: int
    polynomial: RationalPolynomial
    mu: float
    mu_exact: Fraction | None
    d: int
    errors: list[float]
    exact_zero: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "polynomial": format_poly(self.polynomial),
            "mu": self.mu,
            "mu_exact": format_rational(self.mu_exact) if self.mu_exact is not None else None,
            "d": self.d,
            "relative_errors": self.errors,
            "exact_zero": self.exact_zero,
            "pass": self.passed,
        }


@dataclass
class NDimReport:
    N: int
    formula: str
    universe_polynomial: str | None
    sampled_indices: list[int]
    sizes: list[int]
    entries: list[NDimEntry]
    rel_tol: float
    passed: bool
    error: str | None = None
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": "ndim",
            "N": self.N,
            "formula": self.formula,
            "universe_polynomial": self.universe_polynomial,
            "sampled_indices": self.sampled_indices,
            "sizes": self.sizes,
            "rel_tol": self.rel_tol,
            "pass": self.passed,
            "error": self.error,
            "entries": [e.to_dict() for e in self.entries],
            "diagnostics": self.diagnostics,
        }


def _relative_error(count: int, mu: float, mu_exact: Fraction | None, size: int, exponent: Fraction):
    """|count - mu * size^e| / size^e, exactly when everything is rational."""
    scale = rational_power(Fraction(size), exponent)
    if mu_exact is not None and scale is not None:
        return abs(count - mu_exact * scale) / scale
    with mpmath.workdps(40):
        s = mpmath.power(size, mpmath.mpf(exponent.numerator) / exponent.denominator)
        m = mpmath.mpf(mu_exact.numerator) / mu_exact.denominator if mu_exact is not None else mpmath.mpf(mu)
        return float(abs(count - m * s) / s)


def ndim_certify(
    spec: FamilySpec,
    f: Formula,
    part: VariablePartition,
    sel: QSelector | None,
    indices,
    N: int,
    rel_tol: float = 1e-3,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> NDimReport:
    """Derive ``(mu_i, d_i)`` for each class of ``f`` and track the relative error.

    With ``F`` the fitted polynomial for the universe and ``G_i`` the one for
    class ``i``, ``d_i = deg G_i`` and ``mu_i = lead(G_i) / lead(F)^(d_i/N)``.
    The error at a member is ``|count - mu_i |M|^(d_i/N)| / |M|^(d_i/N)``.
    """
    if N < 1:
        raise AnalysisError("N must be a positive integer")
    if rel_tol <= 0:
        raise AnalysisError("rel_tol must be positive")
    indices = _resolve_indices(spec, indices)
    universe_f = spec.parse("x = x")
    universe = fit_counting_polynomials(spec, universe_f, VariablePartition(("x",)), sel, indices, budget, jobs)
    report = NDimReport(N, to_text(f), None, universe.sampled_indices, universe.sizes, [], rel_tol, False)
    if not universe.ok or len(universe.classes) != 1:
        report.error = "universe size is not fitted by a polynomial in q"
        report.diagnostics = universe.diagnostics
        return report
    F = universe.classes[0].polynomial
    report.universe_polynomial = format_poly(F)
    if F.degree != N:
        report.error = f"fitted universe degree is {F.degree}, not N = {N}"
        return report

    fit = fit_counting_polynomials(spec, f, part, sel, indices, budget, jobs)
    report.diagnostics = list(fit.diagnostics)
    if not fit.ok:
        report.error = "the formula's class counts are not fitted by polynomials in q"
        return report

    all_pass = True
    for c in fit.classes:
        G = c.polynomial
        d = 0 if G.is_zero else G.degree
        exponent = Fraction(d, N)
        if G.is_constant:
            mu = float(G.leading) if not G.is_zero else 0.0
        else:
            mu, exponent = composed_leading(G, F)
        mu_exact = composed_leading_exact(G, F)
        errors = [_relative_error(cnt, mu, mu_exact, size, exponent) for cnt, size in zip(c.counts, fit.sizes)]
        exact_zero = all(isinstance(e, Fraction) and e == 0 for e in errors)
        errors_f = [float(e) for e in errors]
        tail = errors_f[-3:]
        passed = d <= N and errors_f[-1] <= rel_tol and all(b <= a for a, b in zip(tail, tail[1:]))
        if d > N:
            report.diagnostics.append(f"class {c.rank}: degree {d} exceeds N = {N}")
        all_pass = all_pass and passed
        report.entries.append(NDimEntry(c.rank, G, mu, mu_exact, d, errors_f, exact_zero, passed))
    report.passed = all_pass
    return report


# --------------------------------------------------------------------------
# Zero-one scan, Num bound, partitions
# --------------------------------------------------------------------------


@dataclass
class ZeroOneResult:
    sentence: str
    values: list[bool]
    stabilized: bool
    value: bool | None
    first_stable_index: int | None

    def to_dict(self) -> dict:
        return {
            "sentence": self.sentence,
            "values": self.values,
            "stabilized": self.stabilized,
            "value": self.value,
            "first_stable_index": self.first_stable_index,
        }


def zero_one_scan(spec: FamilySpec, sentences: Sequence[Formula], indices=None,
                  min_suffix: int = 3) -> list[ZeroOneResult]:
    """Truth of each sentence along the sampled members.

    A sentence counts as stabilized when its truth value is constant on the
    last ``min_suffix`` sampled members; ``first_stable_index`` is where the
    maximal constant suffix starts.
    """
    indices = _resolve_indices(spec, indices)
    if len(indices) < 3:
        raise AnalysisError("the zero-one scan needs at least three indices")
    for s in sentences:
        if not is_sentence(s):
            raise AnalysisError(f"not a sentence: {to_text(s)}")
    members = [build_member(spec, i) for i in indices]
    results = []
    for s in sentences:
        values = [evaluate_sentence(m, s) for m in members]
        start = len(values) - 1
        while start > 0 and values[start - 1] == values[-1]:
            start -= 1
        stable = len(values) - start >= min_suffix
        results.append(ZeroOneResult(
            to_text(s), values, stable,
            values[-1] if stable else None,
            indices[start] if stable else None,
        ))
    return results


@dataclass
class NumBound:
    bound: int | None
    caveat: bool
    small_cardinalities: list[int]
    class_count_stable: bool
    note: str = "empirical lower estimate from sampled members, not the true bound"

    def to_dict(self) -> dict:
        return {
            "command": "num-bound",
            "bound": self.bound,
            "caveat": self.caveat,
            "note": self.note,
            "small_cardinalities": self.small_cardinalities,
            "class_count_stable": self.class_count_stable,
        }


def num_bound(spec: FamilySpec, f: Formula, part: VariablePartition, indices=None,
              sel: QSelector | None = None, budget: int = DEFAULT_BUDGET, jobs: int = 1) -> NumBound:
    """One more than the largest fiber size in any class with a constant polynomial."""
    report = fit_counting_polynomials(spec, f, part, sel, indices, budget, jobs)
    if not report.class_count_stable:
        return NumBound(None, True, [], False)
    small = sorted({cnt for c in report.classes if c.is_constant for cnt in c.counts})
    return NumBound(1 + max(small, default=0), True, small, True)


def check_partition(member: FiniteStructure, formulas: Sequence[Formula], arity: int,
                    variables: Sequence[str] | None = None, budget: int = DEFAULT_BUDGET) -> bool:
    """Whether the nonempty solution sets of ``formulas`` partition ``member^arity``.

    The variable tuple defaults to the free variables of all formulas in
    first-occurrence order, padded with fresh names up to ``arity``.
    """
    if variables is None:
        seen: dict[str, None] = {}
        for g in formulas:
            for v in free_variables(g):
                seen.setdefault(v, None)
        variables = list(seen)
        k = 0
        while len(variables) < arity:
            k += 1
            name = f"_pad{k}"
            if name not in seen:
                variables.append(name)
    variables = tuple(variables)
    if len(variables) != arity:
        raise AnalysisError(f"formulas use {len(variables)} variables but arity is {arity}")
    if member.size ** arity > budget:
        raise AnalysisError(f"partition check exceeds the budget of {budget}")
    evs = [Evaluator(member, g, variables) for g in formulas]
    for t in itertools.product(range(member.size), repeat=arity):
        if sum(1 for ev in evs if ev.holds(t)) != 1:
            return False
    return True
