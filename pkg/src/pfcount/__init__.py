"""Exact counting of definable sets in families of finite structures."""

__version__ = "0.1.0"

from .logic import Signature, VariablePartition, free_variables, is_sentence, parse_formula, to_text
from .structures import FamilySpec, FiniteStructure, build_member, load_family
from .counting import count_solutions, evaluate, fiber_spectrum
from .polynomials import RationalPolynomial, interpolate

__all__ = [
    "Signature",
    "VariablePartition",
    "free_variables",
    "is_sentence",
    "parse_formula",
    "to_text",
    "FamilySpec",
    "FiniteStructure",
    "build_member",
    "load_family",
    "count_solutions",
    "evaluate",
    "fiber_spectrum",
    "RationalPolynomial",
    "interpolate",
]
