"""Pairwise interfaces: the shared EC frontier two trees are compared over.

The interface of trees A and B is an antichain of ECs both trees contribute
to, pushed as deep as the two trees allow.  Each tree is then compiled into
a Boolean expression whose inputs are the interface ECs plus one private
variable per maximal subtree that contains no interface EC.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .ecgraph import Atom, Matching, shared_ecs
from .errors import InternalError, UnknownTree
from .expr import BoolExpr, Op, Var
from .formal import Formalization

DEFAULT_COVERAGE_THRESHOLD = 0.4


def private_var_id(tree_id: str, node_id: str) -> str:
    return f"~{tree_id}:{node_id}"


@dataclass(frozen=True, eq=False)
class Interface:
    pair: tuple[str, str]
    cut_ecs: frozenset[str]
    private_vars: Mapping[str, Atom]
    cov_a: float
    cov_b: float
    cov_pair: float
    matching: Matching = field(repr=False)
    # node ids per tree whose subtree holds a cut node (cut nodes included)
    live: Mapping[str, frozenset[str]] = field(repr=False, default_factory=dict)

    @property
    def no_shared(self) -> bool:
        return not self.cut_ecs

    @cached_property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.cut_ecs) | set(self.private_vars)))

    def tree(self, tree_id: str) -> Formalization:
        if tree_id not in self.pair:
            raise UnknownTree(f"{tree_id!r} is not part of interface {self.pair}")
        return self.matching.trees[tree_id]

    def summary(self) -> dict:
        return {
            "pair": list(self.pair),
            "cut_ecs": sorted(self.cut_ecs),
            "private_vars": {
                v: {"tree_id": a.tree_id, "node_id": a.node_id} for v, a in sorted(self.private_vars.items())
            },
            "cov_a": self.cov_a,
            "cov_b": self.cov_b,
            "cov_pair": self.cov_pair,
            "no_shared": self.no_shared,
        }


def _strictly_below(m: Matching, trees: tuple[str, str], d: str, e: str) -> bool:
    """True if d's node is a strict descendant of e's node in either tree."""
    for t in trees:
        nd, ne = m.node_of(d, t), m.node_of(e, t)
        if nd is not None and ne is not None and nd in m.trees[t].descendants(ne):
            return True
    return False


def cut_frontier(m: Matching, a: str, b: str) -> frozenset[str]:
    """Deepest antichain of shared ECs for the pair (a, b)."""
    shared = shared_ecs(m, a, b)
    candidates = set()
    for t in (a, b):
        f = m.trees[t]
        for e in shared:
            node = m.node_of(e, t)
            below = f.descendants(node)
            if not any(m.ec_of[Atom(t, d)] in shared for d in below):
                candidates.add(e)
    while True:
        dominated = {
            d for d in candidates if any(e != d and _strictly_below(m, (a, b), d, e) for e in candidates)
        }
        if not dominated:
            return frozenset(candidates)
        candidates -= dominated


def _live_nodes(f: Formalization, cut_nodes: set[str]) -> frozenset[str]:
    live = set()

    def visit(nid):
        n = f.nodes[nid]
        hit = nid in cut_nodes
        for c in n.children:
            hit = visit(c) or hit
        if hit:
            live.add(nid)
        return hit

    visit(f.root)
    return frozenset(live)


def compute_interface(m: Matching, a: str, b: str) -> Interface:
    m._require(a)
    m._require(b)
    if a == b:
        raise ValueError("an interface needs two distinct trees")
    cut = cut_frontier(m, a, b)
    live = {}
    covs = []
    private: dict[str, Atom] = {}
    ec_ids = {c.ec_id for c in m.classes}
    for t in (a, b):
        f = m.trees[t]
        cut_nodes = {m.node_of(e, t) for e in cut}
        live[t] = _live_nodes(f, cut_nodes)
        # every node of t sits in exactly one EC, so |E^t| = |nodes(t)|
        covs.append(len(live[t]) / len(f.nodes))
        for nid in f.preorder():
            # only subtrees hanging off an expanded (live, non-cut) node reach the formula
            p = f.parent(nid)
            expanded = nid == f.root or (p in live[t] and p not in cut_nodes)
            if nid not in live[t] and expanded:
                vid = private_var_id(t, nid)
                if vid in ec_ids:
                    raise InternalError(f"private variable id {vid!r} collides with an EC id")
                private[vid] = Atom(t, nid)
    cov_a, cov_b = covs
    cov_pair = math.sqrt(cov_a * cov_b) if cov_a > 0 and cov_b > 0 else 0.0
    return Interface((a, b), cut, private, cov_a, cov_b, cov_pair, m, live)


def compile_node(f: Formalization, iface: Interface, node_id: str) -> BoolExpr:
    """Translate the subtree at ``node_id`` over the interface variables."""
    m = iface.matching
    live = iface.live[f.tree_id]

    def rec(nid):
        ec = m.ec_of[Atom(f.tree_id, nid)]
        if ec in iface.cut_ecs:
            return Var(ec)
        if nid not in live:
            vid = private_var_id(f.tree_id, nid)
            if vid not in iface.private_vars:
                raise InternalError(f"node {nid!r} of {f.tree_id!r} is below a private subtree")
            return Var(vid)
        n = f.nodes[nid]
        if n.is_leaf or n.operator is None:
            raise InternalError(f"node {nid!r} of {f.tree_id!r} is live but has no cut below it")
        return Op(n.operator, tuple(rec(c) for c in n.children))

    return rec(node_id)


def compile(f: Formalization, iface: Interface) -> BoolExpr:  # noqa: A001
    iface.tree(f.tree_id)
    return compile_node(f, iface, f.root)


def subformulas(f: Formalization, iface: Interface) -> dict[str, BoolExpr]:
    """Compiled expression for every live node of ``f``, keyed by node id."""
    iface.tree(f.tree_id)
    return {nid: compile_node(f, iface, nid) for nid in iface.live[f.tree_id]}


def interface_rows(ifaces) -> str:
    return json.dumps([i.summary() for i in ifaces], indent=2, sort_keys=True) + "\n"
