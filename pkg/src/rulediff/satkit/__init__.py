"""Propositional kernel: Tseitin encoding, CDCL with assumptions, brute-force oracle."""

from .cnf import CnfFormula, Encoder, Literal, miter, parse_dimacs, tseitin
from .oracle import brute_force_models, truth_table
from .solver import SatOutcome, Solver, solve

__all__ = [
    "CnfFormula",
    "Encoder",
    "Literal",
    "SatOutcome",
    "Solver",
    "brute_force_models",
    "miter",
    "parse_dimacs",
    "solve",
    "truth_table",
    "tseitin",
]
