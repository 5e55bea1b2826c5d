"""Compact builders for trees/matchings and seeded random instances."""

from __future__ import annotations

import random

from rulediff.ecgraph import Atom, EquivalenceClass, build_matching
from rulediff.formal import Formalization, Node, Operator
from rulediff.interface import compile, compute_interface

OPS = [Operator.AND, Operator.OR, Operator.NAND, Operator.NOR]


def make_tree(tree_id, shape, provision="p", labels=None):
    """shape: leaf = "id"; internal = ("id", "OP", [child shapes])."""
    labels = labels or {}
    nodes = {}

    def rec(s):
        if isinstance(s, str):
            nodes[s] = Node(s, labels.get(s, s))
            return s
        nid, op, kids = s
        ids = tuple(rec(k) for k in kids)
        nodes[nid] = Node(nid, labels.get(nid, nid), Operator(op), ids)
        return nid

    root = rec(shape)
    return Formalization(tree_id, provision, root, nodes)


def match_by_ids(trees, provision="p", labels=None):
    """One EC per distinct node id; nodes sharing an id across trees are matched."""
    groups = {}
    for f in trees:
        for nid in f.nodes:
            groups.setdefault(nid, set()).add(Atom(f.tree_id, nid))
    labels = labels or {}
    classes = [EquivalenceClass(nid, frozenset(m), labels.get(nid)) for nid, m in sorted(groups.items())]
    return build_matching(provision, classes, trees)


# -- random instances -------------------------------------------------------

def _random_shape(rng, leaves, prefix, counter, max_arity=3):
    """Random tree shape over the given leaf ids (each used once)."""
    leaves = list(leaves)
    if len(leaves) == 1 and rng.random() < 0.85:
        return leaves[0]
    counter[0] += 1
    nid = f"{prefix}{counter[0]}"
    k = min(len(leaves), rng.randint(1, max_arity)) if len(leaves) > 1 else 1
    rng.shuffle(leaves)
    cuts = sorted(rng.sample(range(1, len(leaves)), k - 1)) if k > 1 else []
    parts, prev = [], 0
    for c in cuts + [len(leaves)]:
        parts.append(leaves[prev:c])
        prev = c
    return (nid, rng.choice(OPS).value, [_random_shape(rng, p, prefix, counter, max_arity) for p in parts])


def _shape_to_tree(tree_id, shape, root_id):
    if isinstance(shape, str):
        shape = (root_id, "AND", [shape])
    shape = (root_id, shape[1], shape[2])
    return make_tree(tree_id, shape)


def _mutate(rng, shape, counter):
    """Copy of shape with one random local change; new nodes get fresh ids."""
    if isinstance(shape, str):
        r = rng.random()
        if r < 0.3:
            counter[0] += 1
            return f"fresh{counter[0]}"
        if r < 0.6:
            counter[0] += 1
            return (f"wrap{counter[0]}", rng.choice(OPS).value, [shape])
        return shape
    nid, op, kids = shape
    r = rng.random()
    if r < 0.35:
        return (nid, rng.choice(OPS).value, kids)
    if r < 0.5 and len(kids) > 1:
        kids = list(kids)
        kids.pop(rng.randrange(len(kids)))
        return (nid, op, kids)
    if r < 0.6:
        counter[0] += 1
        return (nid, op, [*kids, f"fresh{counter[0]}"])
    i = rng.randrange(len(kids))
    kids = list(kids)
    kids[i] = _mutate(rng, kids[i], counter)
    return (nid, op, kids)


def random_instance(rng: random.Random, max_vars=12):
    """(matching, "A", "B", fa, fb, iface) with at most ``max_vars`` interface variables."""
    while True:
        mode = rng.random()
        n_leaves = rng.randint(1, 9)
        leaves = [f"c{i}" for i in range(n_leaves)]
        counter = [0]
        if mode < 0.55:
            shape_a = _random_shape(rng, leaves, "n", counter)
            shape_b = shape_a
            for _ in range(rng.randint(1, 3)):
                shape_b = _mutate(rng, shape_b, counter)
            ta = _shape_to_tree("A", shape_a, "root")
            tb = _shape_to_tree("B", shape_b, "root")
        else:
            la = rng.sample(leaves, rng.randint(1, n_leaves))
            lb = rng.sample(leaves, rng.randint(1, n_leaves))
            la += [f"pa{i}" for i in range(rng.randint(0, 2))]
            lb += [f"pb{i}" for i in range(rng.randint(0, 2))]
            ta = _shape_to_tree("A", _random_shape(rng, la, "a", counter), "root")
            tb = _shape_to_tree("B", _random_shape(rng, lb, "b", [0]), "root")
        m = match_by_ids([ta, tb])
        iface = compute_interface(m, "A", "B")
        if len(iface.variables) > max_vars:
            continue
        fa, fb = compile(ta, iface), compile(tb, iface)
        return m, "A", "B", fa, fb, iface


def write_workspace(root, provision, trees, matching, law_text=None):
    """Lay out ``root/provisions/<provision>/{formalizations,matchings}``."""
    import json
    from pathlib import Path

    from rulediff.formal import serialize

    pdir = Path(root) / "provisions" / provision
    (pdir / "formalizations").mkdir(parents=True, exist_ok=True)
    (pdir / "matchings").mkdir(parents=True, exist_ok=True)
    for f in trees:
        (pdir / "formalizations" / f"{f.tree_id}.json").write_text(serialize(f), encoding="utf-8")
    (pdir / "matchings" / "run1.json").write_text(json.dumps(matching.to_dict(), indent=2) + "\n", encoding="utf-8")
    if law_text is not None:
        (pdir / "provision.txt").write_text(law_text, encoding="utf-8")
    return pdir


def fixture_trees(provision="p", n=5, seed=7):
    """``n`` mutated variants of one base tree, all matched by node id."""
    rng = random.Random(seed)
    leaves = [f"c{i}" for i in range(7)]
    base = _random_shape(rng, leaves, "n", [0])
    trees = []
    counter = [0]
    for k in range(n):
        shape = base
        for _ in range(k % 3):
            shape = _mutate(rng, shape, counter)
        t = _shape_to_tree(f"m{k}", shape, "root")
        trees.append(Formalization(t.tree_id, provision, t.root, t.nodes))
    return trees, match_by_ids(trees, provision)


# -- brute-force checks that use only expression evaluation ----------------

def _completions(order, fixed):
    import itertools

    free = [v for v in order if v not in fixed]
    for bits in itertools.product([False, True], repeat=len(free)):
        yield {**fixed, **dict(zip(free, bits))}


def xor_minterms(fa, fb, order):
    from rulediff.expr import evaluate

    return {
        tuple(s[v] for v in order)
        for s in _completions(order, {})
        if evaluate(fa, s) != evaluate(fb, s)
    }


def is_implicant(fa, fb, order, fixed):
    from rulediff.expr import evaluate

    return all(evaluate(fa, s) != evaluate(fb, s) for s in _completions(order, dict(fixed)))


def is_prime(fa, fb, order, fixed):
    fixed = dict(fixed)
    return all(not is_implicant(fa, fb, order, {k: v for k, v in fixed.items() if k != drop}) for drop in fixed)


def covered(order, pis):
    out = set()
    for pi in pis:
        out |= {tuple(s[v] for v in order) for s in _completions(order, dict(pi.fixed))}
    return out


def condition_i(iface, ec_id, fixed):
    """Brute force: the two sub-formulas at ``ec_id`` differ under every completion of ``fixed``."""
    from rulediff.expr import evaluate
    from rulediff.interface import subformulas

    m = iface.matching
    a, b = iface.pair
    ga = subformulas(m.trees[a], iface)[m.node_of(ec_id, a)]
    gb = subformulas(m.trees[b], iface)[m.node_of(ec_id, b)]
    return all(evaluate(ga, s) != evaluate(gb, s) for s in _completions(list(iface.variables), dict(fixed)))


def candidate_ecs(iface):
    """Shared ECs whose node is live (on or above the cut) in both trees."""
    m = iface.matching
    a, b = iface.pair
    return {
        ec.ec_id
        for ec in m.classes
        if ec.member_of(a) and ec.member_of(b)
        and ec.member_of(a).node_id in iface.live[a]
        and ec.member_of(b).node_id in iface.live[b]
    }


def shared_children(iface, ec_id):
    """ECs of the children of ``ec_id``'s node in either tree that are candidates."""
    m = iface.matching
    cands = candidate_ecs(iface)
    out = set()
    for t in iface.pair:
        node = m.node_of(ec_id, t)
        for c in m.trees[t].nodes[node].children:
            e = m.ec_of[Atom(t, c)]
            if e in cands:
                out.add(e)
    return out


def candidate_descendants(iface, ec_id):
    m = iface.matching
    cands = candidate_ecs(iface)
    out = set()
    for t in iface.pair:
        node = m.node_of(ec_id, t)
        out |= {m.ec_of[Atom(t, d)] for d in m.trees[t].descendants(node) if d != node}
    return out & cands
