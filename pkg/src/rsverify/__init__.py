"""Transformation and three-valued verification of reactive stream programs."""

from .core import RestrictedProgram, validate_restricted
from .corpus import load_corpus
from .evaluator import eval_ground, eval_whnf, step
from .ltl import FairnessSet, TruthVal, parse_formula
from .lts import extract_lts, oracle_check
from .syntax import parse_expr, parse_program, pretty_program
from .transformer import bounded_bisim, transform
from .verifier import verify_program

__all__ = [
    "FairnessSet",
    "RestrictedProgram",
    "TruthVal",
    "bounded_bisim",
    "eval_ground",
    "eval_whnf",
    "extract_lts",
    "load_corpus",
    "oracle_check",
    "parse_expr",
    "parse_formula",
    "parse_program",
    "pretty_program",
    "step",
    "transform",
    "validate_restricted",
    "verify_program",
]
