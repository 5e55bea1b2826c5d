"""Exhaustive model enumeration, the reference the SAT path is tested against."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels
from ..errors import TooManyVariables
from ..expr import BoolExpr, variables

DEFAULT_MAX_VARS = 20

Assignment = tuple[tuple[str, bool], ...]


def truth_table(e: BoolExpr, order: Sequence[str] | None = None, max_vars: int = DEFAULT_MAX_VARS):
    """(variable order, boolean table) with table[i] = e under assignment i."""
    order = tuple(sorted(variables(e))) if order is None else tuple(order)
    if len(order) > max_vars:
        raise TooManyVariables(f"{len(order)} variables exceed the brute-force bound of {max_vars}")
    return order, kernels.truth_table(e, order)


def assignment_at(order: Sequence[str], i: int) -> Assignment:
    return tuple((v, bool((i >> j) & 1)) for j, v in enumerate(order))


def brute_force_models(e: BoolExpr, max_vars: int = DEFAULT_MAX_VARS) -> set[Assignment]:
    """Every total assignment (as sorted (var, value) tuples) under which ``e`` holds."""
    order, table = truth_table(e, max_vars=max_vars)
    return {assignment_at(order, int(i)) for i in np.flatnonzero(table)}
