"""CNF carrier, Tseitin encoding of BoolExprs and DIMACS export."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..expr import BoolExpr, Var, variables
from ..formal import Operator


@dataclass(frozen=True)
class Literal:
    var_id: str
    polarity: bool = True

    def __post_init__(self):
        if not self.var_id:
            raise ValueError("literal needs a variable id")

    def __neg__(self) -> "Literal":
        return Literal(self.var_id, not self.polarity)

    def __str__(self):
        return self.var_id if self.polarity else f"-{self.var_id}"


@dataclass(frozen=True)
class CnfFormula:
    """Clauses over integer variables 1..len(names); the first ``n_original`` are inputs."""

    names: tuple[str, ...]
    n_original: int
    clauses: tuple[tuple[int, ...], ...]

    @property
    def universe(self) -> frozenset[str]:
        return frozenset(self.names)

    @property
    def originals(self) -> tuple[str, ...]:
        return self.names[: self.n_original]

    @property
    def auxiliary(self) -> tuple[str, ...]:
        return self.names[self.n_original:]

    def index(self, var_id: str) -> int:
        return self.names.index(var_id) + 1

    def to_int(self, lit: Literal) -> int:
        v = self.index(lit.var_id)
        return v if lit.polarity else -v

    def literal_clauses(self) -> list[list[Literal]]:
        return [[Literal(self.names[abs(x) - 1], x > 0) for x in c] for c in self.clauses]

    def to_dimacs(self) -> str:
        lines = [f"c var {i} {name}" for i, name in enumerate(self.names, 1)]
        lines.append(f"p cnf {len(self.names)} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


class Encoder:
    """Incremental Tseitin encoder with structural sharing of identical sub-expressions.

    Original variables are numbered first, in the order given, so the
    solver's fixed branching order visits them before any gate variable.
    """

    def __init__(self, originals: Iterable[str] = ()):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.clauses: list[tuple[int, ...]] = []
        self._gates: dict[BoolExpr, int] = {}
        self._n_original = 0
        for name in originals:
            self._add_original(name)

    def _add_original(self, name: str) -> int:
        if self._n_original != len(self.names):
            raise ValueError(f"cannot add input {name!r} after gate variables were created")
        self.names.append(name)
        self.index[name] = len(self.names)
        self._n_original += 1
        return len(self.names)

    def var(self, name: str) -> int:
        if name in self.index:
            return self.index[name]
        return self._add_original(name)

    def aux(self) -> int:
        n = len(self.names) + 1
        name = f"@t{n}"
        while name in self.index:
            name = "@" + name
        self.names.append(name)
        self.index[name] = n
        return n

    def gate(self, e: BoolExpr) -> int:
        """Literal equivalent to ``e``."""
        if isinstance(e, Var):
            return self.var(e.name)
        if e in self._gates:
            return self._gates[e]
        kids = [self.gate(a) for a in e.args]
        if e.operator.base is Operator.AND:
            t = self._and(kids)
        else:
            t = -self._and([-k for k in kids])
        lit = -t if e.operator.negated else t
        self._gates[e] = lit
        return lit

    def _and(self, kids: list[int]) -> int:
        kids = list(dict.fromkeys(kids))
        if len(kids) == 1:
            return kids[0]
        g = self.aux()
        for k in kids:
            self.clauses.append((-g, k))
        self.clauses.append((g, *(-k for k in kids)))
        return g

    def xor(self, a: int, b: int) -> int:
        g = self.aux()
        self.clauses += [(-g, a, b), (-g, -a, -b), (g, -a, b), (g, a, -b)]
        return g

    def assert_lit(self, lit: int):
        self.clauses.append((lit,))

    def formula(self) -> CnfFormula:
        return CnfFormula(tuple(self.names), self._n_original, tuple(self.clauses))


def tseitin(e: BoolExpr, polarity: bool = True) -> CnfFormula:
    """Equisatisfiable CNF asserting ``e`` (or its negation when ``polarity`` is False)."""
    enc = Encoder(sorted(variables(e)))
    root = enc.gate(e)
    enc.assert_lit(root if polarity else -root)
    return enc.formula()


def miter(fa: BoolExpr, fb: BoolExpr, differ: bool = True, inputs: Sequence[str] | None = None) -> CnfFormula:
    """CNF asserting ``fa xor fb`` (``differ``) or ``fa == fb``."""
    enc = Encoder(inputs if inputs is not None else sorted(variables(fa) | variables(fb)))
    x = enc.xor(enc.gate(fa), enc.gate(fb))
    enc.assert_lit(x if differ else -x)
    return enc.formula()


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    """Read a DIMACS CNF string (used to round-trip exports in tests)."""
    n_vars, clauses, cur = 0, [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            n_vars = int(line.split()[2])
            continue
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
    return n_vars, clauses
