import itertools
import math
import random

import pytest

from helpers import make_tree, match_by_ids, random_instance
from rulediff.ecgraph import Atom
from rulediff.errors import UnknownTree
from rulediff.expr import Op, Var, evaluate, op, variables
from rulediff.formal import Operator, leaves
from rulediff.interface import compile, compute_interface, private_var_id, subformulas


def test_identical_trees_full_coverage():
    trees = [make_tree(t, ("r", "AND", ["x", ("o", "OR", ["y", "z"])])) for t in "AB"]
    i = compute_interface(match_by_ids(trees), "A", "B")
    assert i.cut_ecs == frozenset({"x", "y", "z"})
    assert i.private_vars == {}
    assert i.cov_a == i.cov_b == i.cov_pair == 1.0


def coverage_fixture():
    # A: root, 4-node chain over x, y, 3 private leaves -> 10 nodes, 7 live
    ta = make_tree(
        "A",
        ("root", "AND", [("a1", "OR", [("a2", "AND", [("a3", "OR", [("a4", "AND", ["x", "pa1"]), "pa2"]), "pa3"])]), "y"]),
    )
    # B: root, 2-node chain over x, y, 5 private leaves -> 10 nodes, 5 live
    tb = make_tree(
        "B",
        ("root", "AND", [("b1", "OR", [("b2", "AND", ["x", "pb1", "pb2"]), "pb3"]), "y", "pb4", "pb5"]),
    )
    return match_by_ids([ta, tb])


def test_coverage_fixture():
    m = coverage_fixture()
    assert len(m.ecs_of_tree("A")) == len(m.ecs_of_tree("B")) == 10
    i = compute_interface(m, "A", "B")
    assert i.cut_ecs == frozenset({"x", "y"})
    assert abs(i.cov_a - 0.7) < 1e-12
    assert abs(i.cov_b - 0.5) < 1e-12
    assert abs(i.cov_pair - math.sqrt(0.35)) < 1e-12


def test_unmatched_subtrees_become_private():
    ta = make_tree("A", ("r", "AND", ["x", "yA"]))
    tb = make_tree("B", ("r", "AND", ["x", ("o", "OR", ["y1", "y2"])]))
    m = match_by_ids([ta, tb])
    i = compute_interface(m, "A", "B")
    assert i.cut_ecs == frozenset({"x"})
    assert i.private_vars == {
        private_var_id("A", "yA"): Atom("A", "yA"),
        private_var_id("B", "o"): Atom("B", "o"),
    }
    fa = compile(m.trees["A"], i)
    fb = compile(m.trees["B"], i)
    assert fa == op("AND", Var("x"), Var("~A:yA"))
    assert fb == op("AND", Var("x"), Var("~B:o"))


def test_nand_nor_compile_differs_only_in_operator():
    ta = make_tree("claude", ("root", "AND", [("carve", "NAND", ["acq", "le"])]))
    tb = make_tree("gemini", ("root", "AND", [("carve", "NOR", ["acq", "le"])]))
    m = match_by_ids([ta, tb])
    i = compute_interface(m, "claude", "gemini")
    fa, fb = compile(ta, i), compile(tb, i)
    assert fa == op("AND", op("NAND", Var("acq"), Var("le")))
    assert fb == op("AND", op("NOR", Var("acq"), Var("le")))


def test_single_leaf_and_nand_root():
    ta = make_tree("A", "x")
    tb = make_tree("B", "x")
    i = compute_interface(match_by_ids([ta, tb]), "A", "B")
    assert compile(ta, i) == Var("x")
    tc = make_tree("A", ("r", "NAND", ["a", "b"]))
    td = make_tree("B", ("r", "NAND", ["a", "b"]))
    i = compute_interface(match_by_ids([tc, td]), "A", "B")
    assert compile(tc, i) == op("NAND", Var("a"), Var("b"))


def test_nothing_private_below_a_cut_node():
    ta = make_tree("A", ("root", "NAND", ["u", "v"]))
    tb = make_tree("B", ("root", "AND", [("w", "OR", ["z"])]))
    i = compute_interface(match_by_ids([ta, tb]), "A", "B")
    assert i.cut_ecs == frozenset({"root"})
    assert i.private_vars == {}
    assert compile(ta, i) == compile(tb, i) == Var("root")


def test_no_shared_ecs():
    ta = make_tree("A", ("ra", "AND", ["a1"]))
    tb = make_tree("B", ("rb", "OR", ["b1"]))
    i = compute_interface(match_by_ids([ta, tb]), "A", "B")
    assert i.no_shared and i.summary()["no_shared"]
    assert i.cov_a == i.cov_b == i.cov_pair == 0.0
    assert compile(ta, i) == Var("~A:ra")


def test_unknown_tree():
    m = coverage_fixture()
    with pytest.raises(UnknownTree):
        compute_interface(m, "A", "nope")


def test_shallower_cut_when_one_side_is_leaf():
    # B treats "o" as an atomic concept that A refines
    ta = make_tree("A", ("r", "AND", [("o", "OR", ["y", "z"]), "x"]))
    tb = make_tree("B", ("r", "AND", ["o", "x"]))
    tc = make_tree("C", ("r", "AND", [("o", "OR", ["y", "z"]), "x"]))
    m = match_by_ids([ta, tb, tc])
    assert compute_interface(m, "A", "B").cut_ecs == frozenset({"o", "x"})
    assert compute_interface(m, "A", "C").cut_ecs == frozenset({"x", "y", "z"})


def _strict_desc(m, tree, d, e):
    f = m.trees[tree]
    nd, ne = m.node_of(d, tree), m.node_of(e, tree)
    return nd is not None and ne is not None and nd in f.descendants(ne) and nd != ne


def test_antichain_and_expressibility_random():
    rng = random.Random(3)
    for _ in range(150):
        m, a, b, fa, fb, i = random_instance(rng)
        for d, e in itertools.permutations(i.cut_ecs, 2):
            assert not _strict_desc(m, a, d, e)
            assert not _strict_desc(m, b, d, e)
        assert 0.0 <= i.cov_pair <= 1.0
        assert (i.cov_pair == 0.0) == (not i.cut_ecs)
        assert abs(i.cov_pair - math.sqrt(i.cov_a * i.cov_b)) < 1e-15
        # every interface variable reaches at least one compiled formula
        assert variables(fa) | variables(fb) == set(i.variables)


def direct_eval(f, nid, sigma):
    n = f.nodes[nid]
    if not n.children:
        return sigma[nid]
    vals = [direct_eval(f, c, sigma) for c in n.children]
    base = all(vals) if n.operator.base is Operator.AND else any(vals)
    return base != n.operator.negated


def test_compile_preserves_semantics_at_leaf_cut():
    rng = random.Random(8)
    from helpers import _random_shape

    for _ in range(40):
        shape = _random_shape(rng, [f"l{i}" for i in range(rng.randint(1, 7))], "n", [0])
        if isinstance(shape, str):
            shape = ("r", "NOR", [shape])
        trees = [make_tree(t, shape) for t in "AB"]
        i = compute_interface(match_by_ids(trees), "A", "B")
        assert i.cut_ecs == frozenset(leaves(trees[0])) and not i.private_vars
        e = compile(trees[0], i)
        order = sorted(i.cut_ecs)
        for bits in itertools.product([False, True], repeat=len(order)):
            sigma = dict(zip(order, bits))
            assert evaluate(e, sigma) == direct_eval(trees[0], trees[0].root, sigma)


def test_subformulas_cover_live_nodes():
    m = coverage_fixture()
    i = compute_interface(m, "A", "B")
    subs = subformulas(m.trees["A"], i)
    assert set(subs) == set(i.live["A"])
    assert isinstance(subs["root"], Op)
