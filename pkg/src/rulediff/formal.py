"""Formalization trees: types, validation and the JSON exchange format."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import jsonschema

from .errors import SchemaError, StructureError


class Operator(str, enum.Enum):
    AND = "AND"
    OR = "OR"
    NAND = "NAND"
    NOR = "NOR"

    @property
    def base(self) -> "Operator":
        """AND for AND/NAND, OR for OR/NOR."""
        return Operator.AND if self in (Operator.AND, Operator.NAND) else Operator.OR

    @property
    def negated(self) -> bool:
        return self in (Operator.NAND, Operator.NOR)


FORMALIZATION_SCHEMA = {
    "type": "object",
    "required": ["tree_id", "provision_id", "root", "nodes"],
    "additionalProperties": False,
    "properties": {
        "tree_id": {"type": "string", "minLength": 1},
        "provision_id": {"type": "string", "minLength": 1},
        "root": {"type": "string"},
        "nodes": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "required": ["label", "operator", "children"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "operator": {"enum": ["AND", "OR", "NAND", "NOR", None]},
                    "children": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class Node:
    id: str
    label: str
    operator: Operator | None = None
    children: tuple[str, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Violation:
    rule: str
    node_id: str | None
    detail: str = ""

    def __str__(self):
        where = f"({self.node_id})" if self.node_id is not None else ""
        return f"{self.rule}{where}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True, eq=True)
class Formalization:
    """A rooted labeled tree; ``nodes`` must not be mutated after construction."""

    tree_id: str
    provision_id: str
    root: str
    nodes: Mapping[str, Node]

    __hash__ = None  # nodes is a dict

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    @cached_property
    def _parent(self) -> dict[str, str]:
        return {c: n.id for n in self.nodes.values() for c in n.children}

    @cached_property
    def _below(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for nid in reversed(self.preorder()):
            acc = set()
            for c in self.nodes[nid].children:
                acc.add(c)
                acc |= out[c]
            out[nid] = frozenset(acc)
        return out

    def parents(self) -> dict[str, str]:
        return dict(self._parent)

    def parent(self, node_id: str) -> str | None:
        return self._parent.get(node_id)

    def preorder(self) -> list[str]:
        out, stack = [], [self.root]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(reversed(self.nodes[nid].children))
        return out

    def descendants(self, node_id: str) -> frozenset[str]:
        """Strict descendants of ``node_id``."""
        return self._below[node_id]

    def ancestors(self, node_id: str) -> list[str]:
        """Strict ancestors of ``node_id``, nearest first."""
        out = []
        while node_id in self._parent:
            node_id = self._parent[node_id]
            out.append(node_id)
        return out

    def depth(self) -> int:
        def rec(nid):
            n = self.nodes[nid]
            return 0 if n.is_leaf else 1 + max(rec(c) for c in n.children)

        return rec(self.root)

    def to_dict(self) -> dict:
        return {
            "tree_id": self.tree_id,
            "provision_id": self.provision_id,
            "root": self.root,
            "nodes": {
                nid: {
                    "label": n.label,
                    "operator": n.operator.value if n.operator else None,
                    "children": list(n.children),
                }
                for nid, n in self.nodes.items()
            },
        }


def leaves(f: Formalization) -> set[str]:
    return {nid for nid, n in f.nodes.items() if n.is_leaf}


def internal(f: Formalization) -> set[str]:
    return {nid for nid, n in f.nodes.items() if not n.is_leaf}


def validate(f: Formalization) -> list[Violation]:
    """Return every invariant violation of ``f``; an empty list means valid."""
    out: list[Violation] = []
    nodes = f.nodes
    if not nodes:
        return [Violation("Empty", None, "formalization has no nodes")]

    parent_of: dict[str, str] = {}
    for nid, n in nodes.items():
        if n.id != nid:
            out.append(Violation("IdMismatch", nid, f"node stored under {nid!r} has id {n.id!r}"))
        if not n.label:
            out.append(Violation("EmptyLabel", nid))
        if n.children and n.operator is None:
            out.append(Violation("MissingOperator", nid))
        if not n.children and n.operator is not None:
            out.append(Violation("LeafWithOperator", nid))
        seen_here = set()
        for c in n.children:
            if c in seen_here:
                out.append(Violation("DuplicateChild", nid, c))
                continue
            seen_here.add(c)
            if c not in nodes:
                out.append(Violation("DanglingChild", nid, c))
            elif c == nid:
                out.append(Violation("Cycle", nid, "node lists itself as child"))
            elif c in parent_of:
                out.append(Violation("MultipleParents", c, f"{parent_of[c]} and {nid}"))
            else:
                parent_of[c] = nid

    if f.root not in nodes:
        out.append(Violation("MissingRoot", f.root))
        return out
    if f.root in parent_of:
        out.append(Violation("RootHasParent", f.root, parent_of[f.root]))

    roots = sorted(nid for nid in nodes if nid not in parent_of)
    for r in roots:
        if r != f.root:
            out.append(Violation("ExtraRoot", r))

    reached = set()
    stack = [f.root]
    while stack:
        nid = stack.pop()
        if nid in reached:
            continue
        reached.add(nid)
        stack.extend(c for c in nodes[nid].children if c in nodes)
    for nid in sorted(set(nodes) - reached):
        out.append(Violation("Unreachable", nid))

    # cycles not through the root: follow parent links from each unreached node
    for nid in sorted(set(nodes) - reached):
        cur, path = nid, set()
        while cur in parent_of and cur not in path:
            path.add(cur)
            cur = parent_of[cur]
        if cur in path and cur == nid:
            out.append(Violation("Cycle", nid))
    return out


def _no_duplicate_keys(pairs):
    obj = {}
    for k, v in pairs:
        if k in obj:
            raise StructureError([Violation("DuplicateId", k)])
        obj[k] = v
    return obj


def load_json(data: bytes | str) -> object:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(data, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc


def from_dict(doc: object) -> Formalization:
    try:
        jsonschema.validate(doc, FORMALIZATION_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{path or '<root>'}: {exc.message}") from exc
    nodes = {
        nid: Node(
            id=nid,
            label=raw["label"],
            operator=Operator(raw["operator"]) if raw["operator"] is not None else None,
            children=tuple(raw["children"]),
        )
        for nid, raw in doc["nodes"].items()
    }
    f = Formalization(doc["tree_id"], doc["provision_id"], doc["root"], nodes)
    violations = validate(f)
    if violations:
        raise StructureError(violations)
    return f


def parse_formalization(data: bytes | str) -> Formalization:
    """Parse and validate one formalization document."""
    return from_dict(load_json(data))


def serialize(f: Formalization) -> str:
    return json.dumps(f.to_dict(), indent=2, ensure_ascii=False) + "\n"
