"""Dense truth-table kernels used by the brute-force oracle.

Assignment ``i`` of ``n`` variables gives variable ``j`` the value of bit
``j`` of ``i``.  Each kernel exists twice: a numba ``@njit`` loop and a
vectorized numpy version.  The numba path is used when numba imports and
``RULEDIFF_NO_NUMBA`` is unset (or ``0``).
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from .expr import BoolExpr, Var
from .formal import Operator

OP_VAR, OP_AND, OP_OR, OP_NAND, OP_NOR = 0, 1, 2, 3, 4
_OPCODE = {Operator.AND: OP_AND, Operator.OR: OP_OR, Operator.NAND: OP_NAND, Operator.NOR: OP_NOR}

MAX_TABLE_VARS = 26

try:
    if os.environ.get("RULEDIFF_NO_NUMBA", "0") not in ("", "0"):
        raise ImportError("disabled by RULEDIFF_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def compile_program(e: BoolExpr, order: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten ``e`` to postfix: (opcodes, args), arg = var index or arity."""
    index = {v: i for i, v in enumerate(order)}
    codes, args = [], []

    def rec(x):
        if isinstance(x, Var):
            codes.append(OP_VAR)
            args.append(index[x.name])
            return
        for a in x.args:
            rec(a)
        codes.append(_OPCODE[x.operator])
        args.append(len(x.args))

    rec(e)
    return np.asarray(codes, dtype=np.int8), np.asarray(args, dtype=np.int64)


def truth_table_numpy(codes: np.ndarray, args: np.ndarray, n_vars: int) -> np.ndarray:
    idx = np.arange(1 << n_vars, dtype=np.int64)
    stack: list[np.ndarray] = []
    for code, arg in zip(codes.tolist(), args.tolist()):
        if code == OP_VAR:
            stack.append(((idx >> arg) & 1).astype(bool))
            continue
        operands = np.stack(stack[len(stack) - arg:])
        del stack[len(stack) - arg:]
        if code in (OP_AND, OP_NAND):
            out = operands.all(axis=0)
        else:
            out = operands.any(axis=0)
        stack.append(~out if code in (OP_NAND, OP_NOR) else out)
    return stack[0]


def cover_mask_numpy(care: np.ndarray, value: np.ndarray, n_vars: int) -> np.ndarray:
    """Assignments matching at least one cube; a cube matches i iff i & care == value."""
    idx = np.arange(1 << n_vars, dtype=np.int64)
    out = np.zeros(idx.shape, dtype=bool)
    for c, v in zip(care.tolist(), value.tolist()):
        out |= (idx & c) == v
    return out


_BLOCK = 4096


def _truth_table_loop(codes, args, n_vars):
    # interpret the postfix program once per block of assignments, not per row
    size = 1 << n_vars
    block = min(size, _BLOCK)
    out = np.empty(size, dtype=np.bool_)
    stack = np.empty((codes.shape[0], block), dtype=np.bool_)
    for start in range(0, size, block):
        sp = 0
        for k in range(codes.shape[0]):
            code = codes[k]
            arg = args[k]
            if code == OP_VAR:
                for i in range(block):
                    stack[sp, i] = ((start + i) >> arg) & 1 == 1
                sp += 1
                continue
            base = sp - arg
            neg = code == OP_NAND or code == OP_NOR
            if code == OP_AND or code == OP_NAND:
                for j in range(base + 1, sp):
                    for i in range(block):
                        stack[base, i] = stack[base, i] and stack[j, i]
            else:
                for j in range(base + 1, sp):
                    for i in range(block):
                        stack[base, i] = stack[base, i] or stack[j, i]
            if neg:
                for i in range(block):
                    stack[base, i] = not stack[base, i]
            sp = base + 1
        for i in range(block):
            out[start + i] = stack[0, i]
    return out


def _cover_mask_loop(care, value, n_vars):
    size = 1 << n_vars
    out = np.zeros(size, dtype=np.bool_)
    for i in range(size):
        for k in range(care.shape[0]):
            if (i & care[k]) == value[k]:
                out[i] = True
                break
    return out


if HAVE_NUMBA:
    truth_table_numba = njit(cache=True)(_truth_table_loop)
    cover_mask_numba = njit(cache=True)(_cover_mask_loop)
    _truth_table_impl = truth_table_numba
    _cover_mask_impl = cover_mask_numba
else:
    truth_table_numba = cover_mask_numba = None
    _truth_table_impl = truth_table_numpy
    _cover_mask_impl = cover_mask_numpy


def truth_table(e: BoolExpr, order: Sequence[str]) -> np.ndarray:
    n = len(order)
    if n > MAX_TABLE_VARS:
        raise ValueError(f"{n} variables exceed the dense table limit of {MAX_TABLE_VARS}")
    codes, args = compile_program(e, order)
    return _truth_table_impl(codes, args, n)


def encode_cubes(cubes, order: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Turn partial assignments (mappings var -> bool) into (care, value) bit masks."""
    index = {v: i for i, v in enumerate(order)}
    care = np.zeros(len(cubes), dtype=np.int64)
    value = np.zeros(len(cubes), dtype=np.int64)
    for k, cube in enumerate(cubes):
        for var, val in dict(cube).items():
            bit = 1 << index[var]
            care[k] |= bit
            if val:
                value[k] |= bit
    return care, value


def cover_mask(cubes, order: Sequence[str]) -> np.ndarray:
    n = len(order)
    care, value = encode_cubes(cubes, order)
    if len(cubes) == 0:
        return np.zeros(1 << n, dtype=bool)
    return _cover_mask_impl(care, value, n)
