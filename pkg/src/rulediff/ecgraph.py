"""Matchings of nodes across formalizations into equivalence classes (ECs).

A matching partitions every node of every participating tree into ECs.
Tree edges are lifted onto ECs to form the EC graph, which must be acyclic.
"""

from __future__ import annotations

import graphlib
import itertools
import logging
from functools import cached_property
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import jsonschema

from .errors import (
    CycleError,
    DuplicateTreeInEC,
    EmptyInput,
    PartitionError,
    SchemaError,
    UnknownTree,
)
from .formal import Formalization, load_json

log = logging.getLogger(__name__)

MATCHING_SCHEMA = {
    "type": "object",
    "required": ["provision_id", "classes"],
    "properties": {
        "provision_id": {"type": "string", "minLength": 1},
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["ec_id", "members"],
                "properties": {
                    "ec_id": {"type": "string", "minLength": 1},
                    "label": {"type": ["string", "null"]},
                    "members": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["tree_id", "node_id"],
                            "properties": {
                                "tree_id": {"type": "string"},
                                "node_id": {"type": "string"},
                            },
                        },
                    },
                },
            },
        },
    },
}


class Atom(NamedTuple):
    tree_id: str
    node_id: str


@dataclass(frozen=True)
class EquivalenceClass:
    ec_id: str
    members: frozenset[Atom]
    label: str | None = None

    def member_of(self, tree_id: str) -> Atom | None:
        for a in self.members:
            if a.tree_id == tree_id:
                return a
        return None


@dataclass(frozen=True, eq=False)
class Matching:
    provision_id: str
    classes: tuple[EquivalenceClass, ...]
    trees: Mapping[str, Formalization] = field(repr=False)
    ec_of: Mapping[Atom, str] = field(repr=False)
    ec_edges: frozenset[tuple[str, str]] = frozenset()

    def ec(self, ec_id: str) -> EquivalenceClass:
        return self._by_id[ec_id]

    @cached_property
    def _by_id(self) -> dict[str, EquivalenceClass]:
        return {c.ec_id: c for c in self.classes}

    def node_of(self, ec_id: str, tree_id: str) -> str | None:
        """The node ``tree_id`` contributes to ``ec_id``, if any."""
        a = self.ec(ec_id).member_of(tree_id)
        return a.node_id if a else None

    def ecs_of_tree(self, tree_id: str) -> set[str]:
        self._require(tree_id)
        return {ec for atom, ec in self.ec_of.items() if atom.tree_id == tree_id}

    def label(self, ec_id: str) -> str:
        """EC label, falling back to the first member's node label."""
        c = self.ec(ec_id)
        if c.label:
            return c.label
        a = min(c.members)
        return self.trees[a.tree_id].nodes[a.node_id].label

    def _require(self, tree_id: str):
        if tree_id not in self.trees:
            raise UnknownTree(tree_id)

    def to_dict(self) -> dict:
        return {
            "provision_id": self.provision_id,
            "classes": [
                {
                    "ec_id": c.ec_id,
                    "label": c.label,
                    "members": [{"tree_id": a.tree_id, "node_id": a.node_id} for a in sorted(c.members)],
                }
                for c in self.classes
            ],
        }


def build_matching(
    provision_id: str,
    classes: Iterable[EquivalenceClass],
    formalizations: Iterable[Formalization],
) -> Matching:
    """Validate classes against the trees and derive the lifted EC edges."""
    trees = {f.tree_id: f for f in formalizations}
    classes = tuple(classes)
    seen_ids = set()
    ec_of: dict[Atom, str] = {}
    for c in classes:
        if c.ec_id in seen_ids:
            raise SchemaError(f"duplicate ec_id {c.ec_id!r}")
        seen_ids.add(c.ec_id)
        if not c.members:
            raise SchemaError(f"EC {c.ec_id!r} has no members")
        tree_ids = [a.tree_id for a in c.members]
        dup = sorted(t for t in set(tree_ids) if tree_ids.count(t) > 1)
        if dup:
            raise DuplicateTreeInEC(f"EC {c.ec_id!r} holds several nodes of tree {dup[0]!r}")
        for a in sorted(c.members):
            if a.tree_id not in trees:
                raise UnknownTree(f"EC {c.ec_id!r} references unknown tree {a.tree_id!r}")
            if a.node_id not in trees[a.tree_id].nodes:
                raise PartitionError(f"EC {c.ec_id!r} references unknown node {a}")
            if a in ec_of:
                raise PartitionError(f"atom {a} assigned to both {ec_of[a]!r} and {c.ec_id!r}")
            ec_of[a] = c.ec_id

    for t, f in sorted(trees.items()):
        if f.provision_id != provision_id:
            raise SchemaError(f"tree {t!r} belongs to provision {f.provision_id!r}, not {provision_id!r}")
        for nid in sorted(f.nodes):
            if Atom(t, nid) not in ec_of:
                raise PartitionError(f"atom {Atom(t, nid)} is not assigned to any EC")

    edges = set()
    for t, f in trees.items():
        for nid, n in f.nodes.items():
            for c in n.children:
                edges.add((ec_of[Atom(t, nid)], ec_of[Atom(t, c)]))
    check_acyclic(edges)
    return Matching(provision_id, classes, trees, ec_of, frozenset(edges))


def check_acyclic(edges: Iterable[tuple[str, str]]):
    graph: dict[str, set[str]] = {}
    for p, c in edges:
        if p == c:
            raise CycleError(f"EC {p!r} is its own parent")
        graph.setdefault(c, set()).add(p)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        raise CycleError(f"lifted EC relation is cyclic: {exc.args[1]}") from exc


def parse_matching(data: bytes | str | dict, formalizations: Iterable[Formalization]) -> Matching:
    doc = load_json(data) if isinstance(data, (bytes, str)) else data
    try:
        jsonschema.validate(doc, MATCHING_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{path or '<root>'}: {exc.message}") from exc
    if "edges" in doc or "ec_edges" in doc:
        log.warning("matching %s: supplied edges are ignored; EC edges are derived from the trees", doc["provision_id"])
    classes = [
        EquivalenceClass(
            ec_id=c["ec_id"],
            members=frozenset(Atom(m["tree_id"], m["node_id"]) for m in c["members"]),
            label=c.get("label"),
        )
        for c in doc["classes"]
    ]
    for c, raw in zip(classes, doc["classes"]):
        if len(c.members) != len(raw["members"]):
            raise PartitionError(f"EC {c.ec_id!r} lists the same atom twice")
    return build_matching(doc["provision_id"], classes, formalizations)


PairSet = frozenset  # of frozenset({Atom, Atom})


def co_membership(m: Matching) -> PairSet:
    pairs = set()
    for c in m.classes:
        for a, b in itertools.combinations(sorted(c.members), 2):
            pairs.add(frozenset((a, b)))
    return frozenset(pairs)


def jaccard_n(runs: Sequence[PairSet]) -> float | None:
    """Intersection over union of co-membership pair sets; None when the union is empty."""
    if not runs:
        raise EmptyInput("jaccard_n needs at least one run")
    union = frozenset().union(*runs)
    if not union:
        return None
    inter = frozenset(runs[0]).intersection(*runs[1:])
    return len(inter) / len(union)


def shared_ecs(m: Matching, a: str, b: str) -> set[str]:
    m._require(a)
    m._require(b)
    out = set()
    for c in m.classes:
        trees = {x.tree_id for x in c.members}
        if a in trees and b in trees:
            out.add(c.ec_id)
    return out
