"""Finite relational structures and indexed families of them.

Builtin generators:

* ``k23`` -- member ``n`` is the disjoint union of ``n`` copies of the
  complete bipartite digraph from a 2-element source side to a 3-element
  target side.  Copy ``k`` occupies elements ``5k .. 5k+4``; ``5k, 5k+1``
  are in ``P0``, ``5k+2 .. 5k+4`` in ``P1``, and ``R`` holds all six
  source-to-target pairs of the copy.
* ``bipartite`` -- the same layout with ``p`` sources and ``q`` targets.
* ``pure_set`` -- member ``n`` is a bare ``n``-element set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .logic import Formula, Signature, is_sentence, parse_formula, to_text

DEFAULT_MAX_TUPLES = 10**6


class FamilyError(ValueError):
    """Invalid family specification or member request."""


@dataclass(frozen=True)
class FiniteStructure:
    size: int
    relations: Mapping[str, frozenset] = field(default_factory=dict)
    constants: Mapping[str, int] = field(default_factory=dict)

    def table(self, name: str) -> frozenset:
        return self.relations.get(name, frozenset())

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "relations": {n: sorted(list(t) for t in self.relations[n]) for n in sorted(self.relations)},
            "constants": {c: self.constants[c] for c in sorted(self.constants)},
        }

    def __hash__(self):
        return hash((self.size, tuple(sorted((n, t) for n, t in self.relations.items())),
                     tuple(sorted(self.constants.items()))))


def make_structure(size: int, relations: Mapping[str, object] = (), constants: Mapping[str, int] = ()) -> FiniteStructure:
    rels = {str(n): frozenset(tuple(int(e) for e in t) for t in ts) for n, ts in dict(relations).items()}
    return FiniteStructure(int(size), rels, {str(c): int(v) for c, v in dict(constants).items()})


def validate_structure(s: FiniteStructure, sig: Signature) -> list[str]:
    """Every violation of ``s`` against ``sig``; an empty list means valid."""
    problems = []
    if s.size < 0:
        problems.append(f"negative size {s.size}")
    for name in sorted(s.relations):
        arity = sig.arity(name)
        if arity is None:
            problems.append(f"undeclared relation {name!r} in table")
            continue
        for t in sorted(s.relations[name]):
            if len(t) != arity:
                problems.append(f"{name}{t}: expected {arity} entries, got {len(t)}")
            for e in t:
                if not 0 <= e < s.size:
                    problems.append(f"{name}{t}: index {e} out of range for size {s.size}")
    for c in sig.constants:
        if c not in s.constants:
            problems.append(f"constant {c!r} is not mapped")
        elif not 0 <= s.constants[c] < s.size:
            problems.append(f"constant {c!r}: index {s.constants[c]} out of range for size {s.size}")
    for c in sorted(set(s.constants) - set(sig.constants)):
        problems.append(f"undeclared constant {c!r}")
    return problems


# --------------------------------------------------------------------------
# Builtin families
# --------------------------------------------------------------------------

K23_SIGNATURE = Signature((("P0", 1), ("P1", 1), ("R", 2)))
PURE_SET_SIGNATURE = Signature()


def bipartite_member(n: int, p: int, q: int) -> FiniteStructure:
    width = p + q
    sources, targets, edges = [], [], []
    for k in range(n):
        base = width * k
        src = [base + i for i in range(p)]
        tgt = [base + p + j for j in range(q)]
        sources += [(a,) for a in src]
        targets += [(b,) for b in tgt]
        edges += [(a, b) for a in src for b in tgt]
    return FiniteStructure(
        width * n,
        {"P0": frozenset(sources), "P1": frozenset(targets), "R": frozenset(edges)},
        {},
    )


def _check_params(params: dict, allowed: set[str]) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise FamilyError(f"unknown generator params: {sorted(unknown)}")


@dataclass(frozen=True)
class FamilySpec:
    """An indexed family ``index -> FiniteStructure`` over ``lo..hi``."""

    signature: Signature
    kind: str
    params: Mapping[str, int] = field(default_factory=dict)
    members: Mapping[int, FiniteStructure] = field(default_factory=dict)
    index_domain: tuple[int, int] = (1, 12)

    def __post_init__(self):
        lo, hi = self.index_domain
        if not (isinstance(lo, int) and isinstance(hi, int)) or lo < 1 or hi < lo:
            raise FamilyError(f"index_domain must be positive integers lo <= hi, got {self.index_domain}")
        if self.kind == "k23":
            _check_params(dict(self.params), set())
        elif self.kind == "bipartite":
            _check_params(dict(self.params), {"p", "q"})
            for key in ("p", "q"):
                v = self.params.get(key)
                if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                    raise FamilyError(f"bipartite parameter {key!r} must be a positive integer, got {v!r}")
        elif self.kind == "pure_set":
            _check_params(dict(self.params), set())
        elif self.kind == "table":
            missing = [i for i in range(lo, hi + 1) if i not in self.members]
            if missing:
                raise FamilyError(f"table family lacks members for indices {missing}")
            extra = sorted(set(self.members) - set(range(lo, hi + 1)))
            if extra:
                raise FamilyError(f"table members outside index_domain: {extra}")
        else:
            raise FamilyError(f"unknown generator kind {self.kind!r}")

    @property
    def indices(self) -> range:
        return range(self.index_domain[0], self.index_domain[1] + 1)

    def parse(self, text: str) -> Formula:
        return parse_formula(text, self.signature)


def k23_family(hi: int = 12) -> FamilySpec:
    return FamilySpec(K23_SIGNATURE, "k23", {}, {}, (1, hi))


def bipartite_family(p: int, q: int, hi: int = 12) -> FamilySpec:
    return FamilySpec(K23_SIGNATURE, "bipartite", {"p": p, "q": q}, {}, (1, hi))


def pure_set_family(hi: int = 12) -> FamilySpec:
    return FamilySpec(PURE_SET_SIGNATURE, "pure_set", {}, {}, (1, hi))


def build_member(spec: FamilySpec, index: int) -> FiniteStructure:
    lo, hi = spec.index_domain
    if not isinstance(index, int) or not lo <= index <= hi:
        raise FamilyError(f"index {index!r} outside index domain {lo}..{hi}")
    if spec.kind == "k23":
        return bipartite_member(index, 2, 3)
    if spec.kind == "bipartite":
        return bipartite_member(index, spec.params["p"], spec.params["q"])
    if spec.kind == "pure_set":
        return FiniteStructure(index, {}, {})
    return spec.members[index]


def check_sizes_nondecreasing(spec: FamilySpec, indices) -> list[str]:
    problems = []
    prev = None
    for i in indices:
        size = build_member(spec, i).size
        if prev is not None and size < prev[1]:
            problems.append(f"member {i} has size {size} < size {prev[1]} of member {prev[0]}")
        prev = (i, size)
    return problems


# --------------------------------------------------------------------------
# Family spec files
# --------------------------------------------------------------------------

_BUILTIN_SIGNATURES = {"k23": K23_SIGNATURE, "bipartite": K23_SIGNATURE, "pure_set": PURE_SET_SIGNATURE}


def family_from_dict(data: dict, max_tuples: int = DEFAULT_MAX_TUPLES) -> FamilySpec:
    if not isinstance(data, dict):
        raise FamilyError("family spec must be a JSON object")
    unknown = set(data) - {"signature", "generator", "index_domain"}
    if unknown:
        raise FamilyError(f"unknown family fields: {sorted(unknown)}")
    gen = data.get("generator")
    if not isinstance(gen, dict) or "kind" not in gen:
        raise FamilyError("family spec needs a generator object with a 'kind'")
    kind = gen["kind"]
    try:
        sig = Signature.from_dict(data["signature"]) if "signature" in data else None
    except ValueError as exc:
        raise FamilyError(str(exc)) from exc

    domain = data.get("index_domain")
    if not (isinstance(domain, list) and len(domain) == 2 and all(isinstance(v, int) for v in domain)):
        raise FamilyError("index_domain must be a two-element integer list [lo, hi]")

    if kind in _BUILTIN_SIGNATURES:
        unknown = set(gen) - {"kind", "params"}
        if unknown:
            raise FamilyError(f"unknown generator fields: {sorted(unknown)}")
        builtin = _BUILTIN_SIGNATURES[kind]
        if sig is not None and sig != builtin:
            raise FamilyError(f"signature does not match builtin {kind!r} signature {builtin.to_dict()}")
        params = gen.get("params", {})
        if not isinstance(params, dict):
            raise FamilyError("generator params must be an object")
        return FamilySpec(builtin, kind, params, {}, tuple(domain))

    if kind != "table":
        raise FamilyError(f"unknown generator kind {kind!r}")
    unknown = set(gen) - {"kind", "members"}
    if unknown:
        raise FamilyError(f"unknown generator fields: {sorted(unknown)}")
    if sig is None:
        raise FamilyError("table families need an explicit signature")
    members = {}
    total = 0
    for key, entry in dict(gen.get("members", {})).items():
        try:
            index = int(key)
        except ValueError as exc:
            raise FamilyError(f"member key {key!r} is not an integer") from exc
        if not isinstance(entry, dict):
            raise FamilyError(f"member {key} must be an object")
        bad = set(entry) - {"size", "relations", "constants"}
        if bad:
            raise FamilyError(f"unknown member fields in {key}: {sorted(bad)}")
        rels = entry.get("relations", {})
        total += sum(len(ts) for ts in rels.values())
        if total > max_tuples:
            raise FamilyError(f"table family exceeds {max_tuples} tuples")
        s = make_structure(entry.get("size", 0), rels, entry.get("constants", {}))
        problems = validate_structure(s, sig)
        if problems:
            raise FamilyError(f"member {index} invalid: " + "; ".join(problems))
        members[index] = s
    return FamilySpec(sig, "table", {}, members, tuple(domain))


def family_to_dict(spec: FamilySpec) -> dict:
    if spec.kind == "table":
        gen = {
            "kind": "table",
            "members": {
                str(i): {
                    "size": s.size,
                    "relations": {n: sorted(list(t) for t in ts) for n, ts in sorted(s.relations.items())},
                    "constants": dict(sorted(s.constants.items())),
                }
                for i, s in sorted(spec.members.items())
            },
        }
    else:
        gen = {"kind": spec.kind, "params": dict(spec.params)}
    return {"signature": spec.signature.to_dict(), "generator": gen, "index_domain": list(spec.index_domain)}


def load_family(path, max_tuples: int = DEFAULT_MAX_TUPLES) -> FamilySpec:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FamilyError(f"{path}: invalid JSON: {exc}") from exc
    return family_from_dict(data, max_tuples=max_tuples)


# --------------------------------------------------------------------------
# Axioms
# --------------------------------------------------------------------------

# The five axioms of the K(2,3) theory, in the formula grammar.  The first
# also demands both parts be nonempty, the finite shadow of "infinite".
K23_AXIOMS = (
    "(forall x. (P0(x) | P1(x)) & !(P0(x) & P1(x))) & (exists x. P0(x)) & (exists x. P1(x))",
    "forall x. forall y. R(x,y) -> P0(x) & P1(y)",
    "forall x. P0(x) -> exists y1. P1(y1) & R(x,y1) & exists y2. P1(y2) & R(x,y2) & !y1 = y2"
    " & exists y3. P1(y3) & R(x,y3) & !y1 = y3 & !y2 = y3"
    " & forall y. P1(y) & R(x,y) -> y = y1 | y = y2 | y = y3",
    "forall y. P1(y) -> exists x1. P0(x1) & R(x1,y) & exists x2. P0(x2) & R(x2,y) & !x1 = x2"
    " & forall x. P0(x) & R(x,y) -> x = x1 | x = x2",
    "forall x. forall x2. forall y. forall y2."
    " P0(x) & P0(x2) & P1(y) & P1(y2) & R(x,y) & R(x2,y) & R(x,y2) -> R(x2,y2)",
)


def k23_axioms() -> list[Formula]:
    return [parse_formula(text, K23_SIGNATURE) for text in K23_AXIOMS]


def check_axioms(s: FiniteStructure, sentences: list[Formula]) -> list[bool]:
    from .counting import evaluate_sentence

    for f in sentences:
        if not is_sentence(f):
            raise ValueError(f"not a sentence: {to_text(f)}")
    return [evaluate_sentence(s, f) for f in sentences]
