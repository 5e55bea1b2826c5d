"""Boolean expressions over named variables, built from the four tree operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .errors import UnboundVariable
from .formal import Operator


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Op:
    operator: Operator
    args: tuple["BoolExpr", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("operator node needs at least one argument")
        object.__setattr__(self, "operator", Operator(self.operator))
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return f"{self.operator.value}({', '.join(map(str, self.args))})"


BoolExpr = Union[Var, Op]


def op(operator: Operator | str, *args: BoolExpr) -> Op:
    return Op(Operator(operator), tuple(args))


def variables(e: BoolExpr) -> set[str]:
    out, stack = set(), [e]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Var):
            out.add(cur.name)
        else:
            stack.extend(cur.args)
    return out


def apply(operator: Operator, values) -> bool:
    """Apply ``operator`` to an iterable of truth values (unary AND/OR is identity)."""
    if operator is Operator.AND:
        return all(values)
    if operator is Operator.OR:
        return any(values)
    if operator is Operator.NAND:
        return not all(values)
    return not any(values)


def evaluate(e: BoolExpr, assignment: Mapping[str, bool]) -> bool:
    if isinstance(e, Var):
        try:
            return bool(assignment[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    return apply(e.operator, [evaluate(a, assignment) for a in e.args])


# public name used across the package; `eval` would shadow the builtin
eval_expr = evaluate


def size(e: BoolExpr) -> int:
    if isinstance(e, Var):
        return 1
    return 1 + sum(size(a) for a in e.args)


def to_json(e: BoolExpr):
    if isinstance(e, Var):
        return e.name
    return {"op": e.operator.value, "args": [to_json(a) for a in e.args]}
