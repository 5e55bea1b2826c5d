"""Equivalence checking and irredundant prime-implicant covers of f_A xor f_B.

The cover loop keeps two solvers over one shared Tseitin encoding: ``phi``
asserts that the two functions disagree and accumulates blocking clauses;
``neg`` asserts they agree and is only queried under assumptions, to test
whether a cube is an implicant of the disagreement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InternalError
from .expr import BoolExpr, variables
from .satkit.cnf import Encoder
from .satkit.solver import Solver

DEFAULT_CAP = 100_000


@dataclass(frozen=True)
class PrimeImplicant:
    fixed: tuple[tuple[str, bool], ...]
    pair: tuple[str, str] = ("", "")
    provision_id: str = ""

    @property
    def assignment(self) -> dict[str, bool]:
        return dict(self.fixed)

    @property
    def size(self) -> int:
        return len(self.fixed)

    def to_dict(self) -> dict:
        return {"fixed": dict(self.fixed)}


@dataclass(frozen=True)
class EdgeCaseCover:
    pis: tuple[PrimeImplicant, ...]
    complete: bool
    cap_hit: bool
    variables: tuple[str, ...] = ()
    pair: tuple[str, str] = ("", "")
    provision_id: str = ""
    iterations: int = 0
    solver_calls: int = field(default=0, compare=False)

    @property
    def count(self) -> int:
        return len(self.pis)

    def to_dict(self) -> dict:
        return {
            "provision_id": self.provision_id,
            "pair": list(self.pair),
            "complete": self.complete,
            "cap_hit": self.cap_hit,
            "variables": list(self.variables),
            "count": self.count,
            "pis": [p.to_dict() for p in self.pis],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def cover_from_dict(doc: Mapping) -> EdgeCaseCover:
    pair = tuple(doc["pair"])
    prov = doc.get("provision_id", "")
    pis = tuple(
        PrimeImplicant(tuple(sorted((k, bool(v)) for k, v in p["fixed"].items())), pair, prov) for p in doc["pis"]
    )
    return EdgeCaseCover(
        pis, bool(doc["complete"]), bool(doc["cap_hit"]), tuple(doc.get("variables", ())), pair, prov, len(pis)
    )


class _Miter:
    """Both solvers of the cover loop over a shared encoding of fa xor fb."""

    def __init__(self, fa: BoolExpr, fb: BoolExpr, inputs: Sequence[str], max_conflicts: int | None):
        enc = Encoder(inputs)
        x = enc.xor(enc.gate(fa), enc.gate(fb))
        self.n_inputs = len(inputs)
        self.phi = Solver(max_conflicts=max_conflicts)
        self.neg = Solver(max_conflicts=max_conflicts)
        for s, unit in ((self.phi, x), (self.neg, -x)):
            s.reserve(len(enc.names))
            for c in enc.clauses:
                s.add_clause(c)
            s.add_clause([unit])

    def is_implicant(self, cube: Sequence[int]) -> bool:
        return not self.neg.solve(cube)


def _resolve_inputs(fa, fb, inputs):
    if inputs is None:
        return tuple(sorted(variables(fa) | variables(fb)))
    missing = (variables(fa) | variables(fb)) - set(inputs)
    if missing:
        raise ValueError(f"expressions use variables outside the inputs: {sorted(missing)}")
    return tuple(sorted(inputs))


def equivalent(fa: BoolExpr, fb: BoolExpr, max_conflicts: int | None = None) -> bool:
    m = _Miter(fa, fb, _resolve_inputs(fa, fb, None), max_conflicts)
    return not m.phi.solve()


def enumerate_cover(
    fa: BoolExpr,
    fb: BoolExpr,
    cap: int | None = DEFAULT_CAP,
    *,
    pair: tuple[str, str] = ("", ""),
    provision_id: str = "",
    inputs: Sequence[str] | None = None,
    max_conflicts: int | None = None,
) -> EdgeCaseCover:
    """SAT-iterative irredundant prime-implicant cover of ``fa xor fb``.

    Each round takes a disagreement minterm not yet blocked, shrinks it to
    the unsat core of the agreement check, drops core literals one at a
    time in ascending variable order while the cube stays an implicant, and
    blocks the resulting prime implicant.  An empty complete cover means the
    two expressions are equivalent.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be positive or None")
    order = _resolve_inputs(fa, fb, inputs)
    m = _Miter(fa, fb, order, max_conflicts)
    n = len(order)
    pis: list[PrimeImplicant] = []
    complete = cap_hit = False
    rounds = 0
    while True:
        if not m.phi.solve():
            complete = True
            break
        if cap is not None and len(pis) >= cap:
            cap_hit = True
            break
        rounds += 1
        minterm = [v if m.phi.model_value(v) else -v for v in range(1, n + 1)]
        if m.neg.solve(minterm):
            raise InternalError("minterm of the disagreement satisfies the agreement check")
        cube = sorted(set(m.neg.core), key=abs)
        for lit in list(cube):
            trial = [x for x in cube if x != lit]
            if m.is_implicant(trial):
                cube = trial
        fixed = tuple((order[abs(x) - 1], x > 0) for x in cube)
        pis.append(PrimeImplicant(fixed, pair, provision_id))
        m.phi.add_clause([-x for x in cube])
    return EdgeCaseCover(
        tuple(pis), complete, cap_hit, order, pair, provision_id, rounds, m.phi.calls + m.neg.calls
    )


def covers(pi: PrimeImplicant, assignment: Mapping[str, bool]) -> bool:
    return all(bool(assignment[v]) == val for v, val in pi.fixed)
