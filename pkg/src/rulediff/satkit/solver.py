"""A small deterministic CDCL solver with assumptions, unsat cores and scopes.

Literals are nonzero ints in DIMACS convention.  Branching is fixed: the
lowest-numbered unassigned variable is set to false first.  Assumptions
occupy the first decision levels; when one of them is refuted the solver
walks the implication graph back to the assumptions responsible, which
gives the (non-minimal) unsat core.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import ResourceLimit
from .cnf import CnfFormula, Literal


class Solver:
    def __init__(self, max_conflicts: int | None = None, max_seconds: float | None = None):
        self.max_conflicts = max_conflicts
        self.max_seconds = max_seconds
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.value = [0]
        self.level = [0]
        self.reason: list[int | None] = [None]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.ok = True
        self.model: list[int] | None = None
        self.core: list[int] | None = None
        self.conflicts = 0
        self.calls = 0
        self._scopes: list[int] = []
        self._selectors: set[int] = set()

    # -- construction -----------------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        self.value.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.watches[self.nvars] = []
        self.watches[-self.nvars] = []
        return self.nvars

    def reserve(self, n: int):
        while self.nvars < n:
            self.new_var()

    def add_clause(self, lits: Iterable[int]):
        lits = list(lits)
        if self._scopes:
            lits.append(-self._scopes[-1])
        self._add(lits)

    def add_cnf(self, cnf: CnfFormula):
        self.reserve(len(cnf.names))
        for c in cnf.clauses:
            self.add_clause(c)

    def _add(self, lits: list[int]):
        if not self.ok:
            return
        self._cancel_until(0)
        out = []
        seen = set()
        for lit in lits:
            if lit == 0 or abs(lit) > self.nvars:
                raise ValueError(f"literal {lit} outside 1..{self.nvars}")
            if -lit in seen:
                return
            val = self._lit_value(lit)
            if val == 1:
                return
            if val == -1 or lit in seen:
                continue
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
        elif len(out) == 1:
            self._enqueue(out[0], None)
            if self._propagate() is not None:
                self.ok = False
        else:
            self._attach(out)

    def push(self):
        """Open a scope; clauses added until the matching pop() are temporary."""
        s = self.new_var()
        self._selectors.add(s)
        self._scopes.append(s)

    def pop(self):
        s = self._scopes.pop()
        self._add([-s])

    # -- search -----------------------------------------------------------

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        self.calls += 1
        self.model = None
        self.core = None
        if not self.ok:
            self.core = []
            return False
        assumptions = list(dict.fromkeys([*self._scopes, *assumptions]))
        for a in assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise ValueError(f"assumption {a} outside 1..{self.nvars}")
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            self.core = []
            return False
        started = time.monotonic()
        budget = self.max_conflicts
        conflicts_here = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts_here += 1
                if budget is not None and conflicts_here > budget:
                    self._cancel_until(0)
                    raise ResourceLimit(f"conflict budget of {budget} exhausted")
                if self.max_seconds is not None and time.monotonic() - started > self.max_seconds:
                    self._cancel_until(0)
                    raise ResourceLimit(f"time budget of {self.max_seconds}s exhausted")
                if not self.trail_lim:
                    self.ok = False
                    self.core = []
                    return False
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    ci = self._attach(learnt)
                    self._enqueue(learnt[0], ci)
                continue

            dl = len(self.trail_lim)
            if dl < len(assumptions):
                p = assumptions[dl]
                val = self._lit_value(p)
                if val == -1:
                    self.core = [x for x in self._analyze_final(p) if abs(x) not in self._selectors]
                    self._cancel_until(0)
                    return False
                self.trail_lim.append(len(self.trail))
                if val == 0:
                    self._enqueue(p, None)
                continue

            v = self._pick()
            if v == 0:
                self.model = list(self.value)
                self._cancel_until(0)
                return True
            self.trail_lim.append(len(self.trail))
            self._enqueue(-v, None)

    def model_value(self, var: int) -> bool:
        return self.model[var] == 1

    # -- internals --------------------------------------------------------

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _pick(self) -> int:
        value = self.value
        for v in range(1, self.nvars + 1):
            if value[v] == 0:
                return v
        return 0

    def _attach(self, lits: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)
        return ci

    def _enqueue(self, lit: int, reason: int | None):
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _cancel_until(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        for lit in self.trail[stop:]:
            v = abs(lit)
            self.value[v] = 0
            self.reason[v] = None
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _propagate(self) -> int | None:
        clauses, watches, value = self.clauses, self.watches, self.value
        while self.qhead < len(self.trail):
            false_lit = -self.trail[self.qhead]
            self.qhead += 1
            ws = watches[false_lit]
            kept = []
            i, n = 0, len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    kept.append(ci)
                    continue
                for k in range(2, len(c)):
                    lv = value[abs(c[k])]
                    if (lv if c[k] > 0 else -lv) != -1:
                        c[1], c[k] = c[k], c[1]
                        watches[c[1]].append(ci)
                        break
                else:
                    kept.append(ci)
                    if (fv if first > 0 else -fv) == -1:
                        kept.extend(ws[i:])
                        watches[false_lit] = kept
                        self.qhead = len(self.trail)
                        return ci
                    self._enqueue(first, ci)
            watches[false_lit] = kept
        return None

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        """First-UIP learning; returns (learnt clause with asserting literal first, backjump level)."""
        current = len(self.trail_lim)
        seen: set[int] = set()
        learnt = [0]
        path = 0
        p = 0
        idx = len(self.trail) - 1
        clause = self.clauses[confl]
        while True:
            for q in clause:
                v = abs(q)
                if v == abs(p) or v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                if self.level[v] >= current:
                    path += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            path -= 1
            if path == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _analyze_final(self, p: int) -> list[int]:
        """Assumption literals that together with the clauses force ``-p``; ``p`` included."""
        core = [p]
        v0 = abs(p)
        if self.level[v0] == 0:
            return core
        seen = {v0}
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            x = self.trail[i]
            v = abs(x)
            if v not in seen:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0:
                    core.append(x)
            else:
                for q in self.clauses[r]:
                    if abs(q) != v and self.level[abs(q)] > 0:
                        seen.add(abs(q))
        return core


@dataclass(frozen=True)
class SatOutcome:
    sat: bool
    model: dict[str, bool] = field(default_factory=dict)
    core: tuple[Literal, ...] = ()

    def __bool__(self):
        return self.sat


def solve(
    f: CnfFormula,
    assumptions: Sequence[Literal] = (),
    max_conflicts: int | None = None,
    max_seconds: float | None = None,
) -> SatOutcome:
    """One-shot solve of ``f`` under ``assumptions``."""
    s = Solver(max_conflicts=max_conflicts, max_seconds=max_seconds)
    s.add_cnf(f)
    ints = [f.to_int(a) for a in assumptions]
    if s.solve(ints):
        return SatOutcome(True, model={name: s.model_value(i) for i, name in enumerate(f.originals, 1)})
    core = tuple(Literal(f.names[abs(x) - 1], x > 0) for x in sorted(set(s.core), key=ints.index))
    return SatOutcome(False, core=core)
