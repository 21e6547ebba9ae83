"""Relational signatures, first-order formulas, a text parser and a printer.

Grammar (whitespace-insensitive)::

    formula := iff
    iff     := imp ("<->" imp)*          left-associative
    imp     := or ("->" or)*             right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | "forall" var "." formula | "exists" var "." formula | atom
    atom    := name "(" term ("," term)* ")" | term "=" term | "(" formula ")"
             | "true" | "false"
    term    := var | constant

A quantifier's scope extends as far right as possible.  Bound variables that
clash with an enclosing binder or with a free variable of the formula are
renamed at parse time, so evaluation can extend an environment without
substitution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

KEYWORDS = frozenset({"forall", "exists", "true", "false"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# --------------------------------------------------------------------------
# Signatures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple((str(n), int(a)) for n, a in self.relations))
        object.__setattr__(self, "constants", tuple(str(c) for c in self.constants))
        names = [n for n, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate relation names in {names}")
        for name, arity in self.relations:
            _check_identifier(name)
            if arity < 1:
                raise ValueError(f"relation {name} has arity {arity}; arities must be >= 1")
        if len(set(self.constants)) != len(self.constants):
            raise ValueError(f"duplicate constant names in {list(self.constants)}")
        for c in self.constants:
            _check_identifier(c)
        clash = set(names) & set(self.constants)
        if clash:
            raise ValueError(f"names used both as relation and constant: {sorted(clash)}")

    def arity(self, name: str) -> int | None:
        for n, a in self.relations:
            if n == name:
                return a
        return None

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.relations)

    def to_dict(self) -> dict:
        return {
            "relations": [{"name": n, "arity": a} for n, a in self.relations],
            "constants": list(self.constants),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Signature":
        if not isinstance(data, dict):
            raise ValueError("signature must be an object")
        unknown = set(data) - {"relations", "constants"}
        if unknown:
            raise ValueError(f"unknown signature fields: {sorted(unknown)}")
        rels = []
        for entry in data.get("relations", []):
            if not isinstance(entry, dict) or set(entry) != {"name", "arity"}:
                raise ValueError(f"relation entries need exactly 'name' and 'arity': {entry!r}")
            if not isinstance(entry["arity"], int) or isinstance(entry["arity"], bool):
                raise ValueError(f"arity of {entry['name']} must be an integer")
            rels.append((entry["name"], entry["arity"]))
        return cls(tuple(rels), tuple(data.get("constants", [])))


def _check_identifier(name: str) -> None:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise ValueError(f"invalid identifier {name!r}")
    if name in KEYWORDS:
        raise ValueError(f"{name!r} is a reserved word")


# --------------------------------------------------------------------------
# Syntax tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class ForAll:
    var: str
    body: "Formula"


Formula = Union[Atom, Eq, Top, Bottom, Not, And, Or, Implies, Iff, Exists, ForAll]
BINARY = (And, Or, Implies, Iff)
QUANTIFIERS = (Exists, ForAll)


@dataclass(frozen=True)
class VariablePartition:
    """Split of a formula's variables into object variables and parameters."""

    object_vars: tuple[str, ...]
    parameter_vars: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "object_vars", tuple(self.object_vars))
        object.__setattr__(self, "parameter_vars", tuple(self.parameter_vars))
        both = self.object_vars + self.parameter_vars
        if len(set(both)) != len(both):
            raise ValueError(
                f"object variables {self.object_vars} and parameters {self.parameter_vars} "
                "must be disjoint and without repeats"
            )

    def swapped(self) -> "VariablePartition":
        return VariablePartition(self.parameter_vars, self.object_vars)

    @classmethod
    def of(cls, f: Formula, params: tuple[str, ...] = ()) -> "VariablePartition":
        """Every free variable not listed in ``params`` becomes an object variable."""
        params = tuple(params)
        return cls(tuple(v for v in free_variables(f) if v not in params), params)


# --------------------------------------------------------------------------
# Syntactic utilities
# --------------------------------------------------------------------------


def _term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name


def _free_iter(f: Formula, bound: frozenset) -> Iterator[str]:
    if isinstance(f, Atom):
        for t in f.terms:
            for v in _term_vars(t):
                if v not in bound:
                    yield v
    elif isinstance(f, Eq):
        for t in (f.left, f.right):
            for v in _term_vars(t):
                if v not in bound:
                    yield v
    elif isinstance(f, Not):
        yield from _free_iter(f.body, bound)
    elif isinstance(f, BINARY):
        yield from _free_iter(f.left, bound)
        yield from _free_iter(f.right, bound)
    elif isinstance(f, QUANTIFIERS):
        yield from _free_iter(f.body, bound | {f.var})


def free_variables(f: Formula) -> list[str]:
    """Free variables of ``f`` in order of first occurrence."""
    seen: dict[str, None] = {}
    for v in _free_iter(f, frozenset()):
        seen.setdefault(v, None)
    return list(seen)


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, QUANTIFIERS):
        yield from subformulas(f.body)


def all_names(f: Formula) -> set[str]:
    """Every identifier occurring anywhere in ``f`` (variables, binders, constants)."""
    names: set[str] = set()
    for g in subformulas(f):
        if isinstance(g, Atom):
            names.update(t.name for t in g.terms)
        elif isinstance(g, Eq):
            names.update((g.left.name, g.right.name))
        elif isinstance(g, QUANTIFIERS):
            names.add(g.var)
    return names


def conjunction(parts: list[Formula]) -> Formula:
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjunction(parts: list[Formula]) -> Formula:
    if not parts:
        return Bottom()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def rename_bound(f: Formula) -> Formula:
    """Rename binders that shadow an enclosing binder or a free variable."""
    taken = set(all_names(f))
    counter: dict[str, int] = {}

    def fresh(v: str) -> str:
        k = counter.get(v, 0)
        while True:
            k += 1
            cand = f"{v}_{k}"
            if cand not in taken:
                counter[v] = k
                taken.add(cand)
                return cand

    def term(t: Term, env: dict) -> Term:
        if isinstance(t, Var) and t.name in env:
            return Var(env[t.name])
        return t

    def go(g: Formula, env: dict, blocked: frozenset) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.relation, tuple(term(t, env) for t in g.terms))
        if isinstance(g, Eq):
            return Eq(term(g.left, env), term(g.right, env))
        if isinstance(g, (Top, Bottom)):
            return g
        if isinstance(g, Not):
            return Not(go(g.body, env, blocked))
        if isinstance(g, BINARY):
            return type(g)(go(g.left, env, blocked), go(g.right, env, blocked))
        new = fresh(g.var) if g.var in blocked else g.var
        return type(g)(new, go(g.body, {**env, g.var: new}, blocked | {new}))

    return go(f, {}, frozenset(free_variables(f)))


# --------------------------------------------------------------------------
# Printer
# --------------------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYM = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def _prec(f: Formula) -> int:
    if isinstance(f, QUANTIFIERS):
        return 0
    return _PREC.get(type(f), 9)


def to_text(f: Formula) -> str:
    """Render ``f`` in the parser's grammar with minimal parentheses."""
    if isinstance(f, Atom):
        return f"{f.relation}({','.join(t.name for t in f.terms)})"
    if isinstance(f, Eq):
        return f"{f.left.name} = {f.right.name}"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Not):
        inner = to_text(f.body)
        if isinstance(f.body, (Atom, Not, Top, Bottom)):
            return "!" + inner
        return f"!({inner})"
    if isinstance(f, QUANTIFIERS):
        kw = "exists" if isinstance(f, Exists) else "forall"
        return f"{kw} {f.var}. {to_text(f.body)}"
    p = _PREC[type(f)]
    right_assoc = isinstance(f, Implies)
    lp, rp = _prec(f.left), _prec(f.right)
    left_paren = lp <= p if right_assoc else lp < p
    right_paren = rp < p if right_assoc else rp <= p
    # quantifiers swallow everything to their right
    if isinstance(f.left, QUANTIFIERS):
        left_paren = True
    if isinstance(f.right, QUANTIFIERS):
        right_paren = True
    left = to_text(f.left)
    right = to_text(f.right)
    if left_paren:
        left = f"({left})"
    if right_paren:
        right = f"({right})"
    return f"{left} {_SYM[type(f)]} {right}"


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class ParseError(ValueError):
    """Malformed formula text; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)


class UnknownSymbolError(ParseError):
    pass


class ArityError(ParseError):
    pass


_TOKEN = re.compile(r"\s*(?:(<->|->|[()!&|=.,])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group(1):
            tokens.append(("op", m.group(1), m.start(1)))
        else:
            tokens.append(("id", m.group(2), m.start(2)))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.sig = sig
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0):
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        kind, val, _ = self.peek()
        if kind == "op" and val == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str):
        kind, val, pos = self.peek()
        if not (kind == "op" and val == op):
            shown = val or "end of input"
            raise ParseError(f"expected {op!r} but found {shown!r}", pos)
        self.i += 1

    def parse(self) -> Formula:
        f = self.formula()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {val!r}", pos)
        return f

    def formula(self) -> Formula:
        left = self.imp()
        while self.accept("<->"):
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.accept("|"):
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.accept("&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "op" and val == "!":
            self.next()
            return Not(self.unary())
        if kind == "id" and val in ("forall", "exists"):
            self.next()
            vkind, var, vpos = self.next()
            if vkind != "id" or var in KEYWORDS:
                raise ParseError(f"expected a variable after {val!r}", vpos)
            if var in self.sig.constants:
                raise ParseError(f"cannot quantify over constant {var!r}", vpos)
            self.expect(".")
            body = self.formula()
            return ForAll(var, body) if val == "forall" else Exists(var, body)
        return self.atom()

    def term(self) -> Term:
        kind, val, pos = self.next()
        if kind != "id" or val in KEYWORDS:
            raise ParseError(f"expected a term but found {val or 'end of input'!r}", pos)
        if self.sig.arity(val) is not None:
            raise ParseError(f"relation {val!r} used as a term", pos)
        return Const(val) if val in self.sig.constants else Var(val)

    def atom(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "op" and val == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "id" and val == "true":
            self.next()
            return Top()
        if kind == "id" and val == "false":
            self.next()
            return Bottom()
        if kind == "id" and self.peek(1)[:2] == ("op", "("):
            self.next()
            self.next()
            arity = self.sig.arity(val)
            if arity is None:
                raise UnknownSymbolError(f"unknown relation {val!r}", pos)
            terms = [self.term()]
            while self.accept(","):
                terms.append(self.term())
            self.expect(")")
            if len(terms) != arity:
                raise ArityError(
                    f"relation {val!r} has arity {arity} but was given {len(terms)} terms", pos
                )
            return Atom(val, tuple(terms))
        if kind == "id":
            left = self.term()
            self.expect("=")
            return Eq(left, self.term())
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse ``text`` against ``sig``, renaming clashing bound variables."""
    return rename_bound(_Parser(text, sig).parse())
