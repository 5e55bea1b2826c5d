"""Root-cause localization, signature grouping and representative selection."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ecgraph import Atom, shared_ecs
from .edgecase import EdgeCaseCover, PrimeImplicant
from .formal import Formalization
from .interface import DEFAULT_COVERAGE_THRESHOLD, Interface, compile_node, subformulas
from .satkit.cnf import Encoder
from .satkit.solver import Solver

DEFAULT_REP_CAP = 25


@dataclass(frozen=True)
class RootCause:
    ec_id: str
    # tree whose sub-formula at the EC is forced true; None when neither is (mixed)
    true_side: str | None

    @property
    def mixed(self) -> bool:
        return self.true_side is None


@dataclass(frozen=True)
class SideShape:
    operator: str | None  # AND / OR after folding negation, None for a leaf
    negated: bool
    children: tuple[str, ...]

    def to_dict(self):
        return {"operator": self.operator, "negated": self.negated, "children": list(self.children)}


@dataclass(frozen=True)
class SignatureEntry:
    ec_id: str
    true_side: SideShape
    false_side: SideShape


@dataclass(frozen=True)
class Signature:
    """Local disagreement shape at the deepest root causes of one edge case.

    Shapes are stored as (side concluding true, side concluding false) at
    the root, so the same fork seen in pairs (A, B) and (B, A) hashes equal.
    When neither side is forced true the two shapes are sorted instead and
    ``mixed`` is set.
    """

    entries: tuple[SignatureEntry, ...]
    mixed: bool = False

    def to_dict(self) -> dict:
        return {
            "mixed": self.mixed,
            "entries": [
                {"ec_id": e.ec_id, "true_side": e.true_side.to_dict(), "false_side": e.false_side.to_dict()}
                for e in self.entries
            ],
        }

    @property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Representative:
    signature: Signature
    pi: PrimeImplicant
    pair: tuple[str, str]
    class_size: int
    root_causes: tuple[RootCause, ...]
    # (concluding-true tree, concluding-false tree); None when mixed
    sides: tuple[str, str] | None = None


class PairTriage:
    """Shared encoding of every candidate sub-formula pair for one interface."""

    def __init__(self, iface: Interface, max_conflicts: int | None = None):
        self.iface = iface
        m = iface.matching
        self.a, self.b = iface.pair
        self.ta: Formalization = m.trees[self.a]
        self.tb: Formalization = m.trees[self.b]
        subs = {self.a: subformulas(self.ta, iface), self.b: subformulas(self.tb, iface)}

        # shared ECs whose node sits on or above the cut in both trees
        self.candidates: dict[str, tuple[str, str]] = {}
        for e in sorted(shared_ecs(m, self.a, self.b)):
            na, nb = m.node_of(e, self.a), m.node_of(e, self.b)
            if na in iface.live[self.a] and nb in iface.live[self.b]:
                self.candidates[e] = (na, nb)

        enc = Encoder(iface.variables)
        self.gates: dict[str, tuple[int, int, int]] = {}
        for e, (na, nb) in self.candidates.items():
            ga, gb = enc.gate(subs[self.a][na]), enc.gate(subs[self.b][nb])
            self.gates[e] = (ga, gb, enc.xor(ga, gb))
        self.root_a = enc.gate(compile_node(self.ta, iface, self.ta.root))
        self.root_b = enc.gate(compile_node(self.tb, iface, self.tb.root))
        self.index = enc.index
        self.solver = Solver(max_conflicts=max_conflicts)
        self.solver.reserve(len(enc.names))
        for c in enc.clauses:
            self.solver.add_clause(c)

        self.children = {e: self._shared_children(e) for e in self.candidates}

    def _shared_children(self, e: str) -> frozenset[str]:
        """Nearest candidate ECs below e's node in either tree."""
        m = self.iface.matching
        out = set()
        for t, node in zip((self.a, self.b), self.candidates[e]):
            f = m.trees[t]
            stack = list(f.nodes[node].children)
            while stack:
                nid = stack.pop()
                ec = m.ec_of[Atom(t, nid)]
                if ec in self.candidates:
                    out.add(ec)
                else:
                    stack.extend(f.nodes[nid].children)
        return frozenset(out)

    def _lits(self, pi: PrimeImplicant) -> list[int]:
        return [self.index[v] if val else -self.index[v] for v, val in pi.fixed]

    def _forced(self, lits: list[int], lit: int) -> bool:
        """True if ``lit`` holds under every completion of the cube."""
        return not self.solver.solve([*lits, -lit])

    def differs(self, pi: PrimeImplicant) -> set[str]:
        """Candidate ECs whose two sub-formulas are forced to differ under ``pi``."""
        lits = self._lits(pi)
        return {e for e, (_, _, x) in self.gates.items() if self._forced(lits, x)}

    def root_causes(self, pi: PrimeImplicant) -> tuple[RootCause, ...]:
        lits = self._lits(pi)
        diff = self.differs(pi)
        out = []
        for e in sorted(diff):
            if self.children[e] & diff:
                continue
            ga, gb, _ = self.gates[e]
            if self._forced(lits, ga):
                side = self.a
            elif self._forced(lits, gb):
                side = self.b
            else:
                side = None
            out.append(RootCause(e, side))
        return tuple(out)

    def deepest(self, causes: Iterable[RootCause]) -> tuple[RootCause, ...]:
        """Root causes with no other root cause strictly below them."""
        causes = tuple(causes)
        ids = {c.ec_id for c in causes}
        m = self.iface.matching
        keep = []
        for c in causes:
            below = set()
            for t, node in zip((self.a, self.b), self.candidates[c.ec_id]):
                below |= {m.ec_of[Atom(t, d)] for d in m.trees[t].descendants(node)}
            if not (below & (ids - {c.ec_id})):
                keep.append(c)
        return tuple(keep)

    def concluding_true(self, pi: PrimeImplicant) -> str | None:
        """Tree whose root is forced true under ``pi``, or None (mixed)."""
        lits = self._lits(pi)
        if self._forced(lits, self.root_a):
            return self.a
        if self._forced(lits, -self.root_a):
            return self.b
        return None

    def shape(self, tree_id: str, ec_id: str) -> SideShape:
        m = self.iface.matching
        node = self.candidates[ec_id][0 if tree_id == self.a else 1]
        n = m.trees[tree_id].nodes[node]
        kids = tuple(sorted(m.ec_of[Atom(tree_id, c)] for c in n.children))
        if n.operator is None:
            return SideShape(None, False, kids)
        return SideShape(n.operator.base.value, n.operator.negated, kids)

    def signature(self, pi: PrimeImplicant, causes: Sequence[RootCause] | None = None) -> Signature:
        causes = self.root_causes(pi) if causes is None else causes
        top = self.concluding_true(pi)
        entries = []
        for c in sorted(self.deepest(causes), key=lambda c: c.ec_id):
            sa, sb = self.shape(self.a, c.ec_id), self.shape(self.b, c.ec_id)
            if top == self.a:
                entries.append(SignatureEntry(c.ec_id, sa, sb))
            elif top == self.b:
                entries.append(SignatureEntry(c.ec_id, sb, sa))
            else:
                lo, hi = sorted((sa, sb), key=lambda s: json.dumps(s.to_dict(), sort_keys=True))
                entries.append(SignatureEntry(c.ec_id, lo, hi))
        return Signature(tuple(entries), mixed=top is None)


def root_causes(pi: PrimeImplicant, iface: Interface) -> tuple[RootCause, ...]:
    return PairTriage(iface).root_causes(pi)


def signature_of(pi: PrimeImplicant, iface: Interface) -> Signature:
    return PairTriage(iface).signature(pi)


def root_operators_differ(iface: Interface) -> bool:
    m = iface.matching
    a, b = (m.trees[t] for t in iface.pair)
    return a.nodes[a.root].operator != b.nodes[b.root].operator


def _rank(pi: PrimeImplicant, pair: tuple[str, str]):
    return (pi.size, pair, pi.fixed)


def select_representatives(
    analyses: Iterable[tuple[Interface, EdgeCaseCover]],
    cap: int = DEFAULT_REP_CAP,
    cov_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    max_conflicts: int | None = None,
) -> list[Representative]:
    """Reduce the covers of one provision to at most ``cap`` representative edge cases."""
    classes: dict[Signature, list] = {}
    for iface, cover in analyses:
        if not cover.pis or iface.cov_pair < cov_threshold or root_operators_differ(iface):
            continue
        pt = PairTriage(iface, max_conflicts=max_conflicts)
        for pi in cover.pis:
            causes = pt.root_causes(pi)
            sig = pt.signature(pi, causes)
            top = pt.concluding_true(pi)
            sides = None if top is None else (top, pt.b if top == pt.a else pt.a)
            classes.setdefault(sig, []).append((pi, iface.pair, causes, sides))

    reps = []
    for sig, members in classes.items():
        pi, pair, causes, sides = min(members, key=lambda x: _rank(x[0], x[1]))
        reps.append(Representative(sig, pi, pair, len(members), causes, sides))
    reps.sort(key=lambda r: _rank(r.pi, r.pair))
    return reps[:cap]


def representatives_json(provision_id: str, reps: Sequence[Representative], matching) -> str:
    rows = []
    for r in reps:
        rows.append(
            {
                "provision_id": provision_id,
                "signature": r.signature.digest,
                "signature_detail": r.signature.to_dict(),
                "pair": list(r.pair),
                "sides": list(r.sides) if r.sides else None,
                "fixed": dict(r.pi.fixed),
                "root_causes": [
                    {"ec_id": c.ec_id, "label": matching.label(c.ec_id), "true_side": c.true_side}
                    for c in r.root_causes
                ],
                "class_size": r.class_size,
            }
        )
    return json.dumps(rows, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
