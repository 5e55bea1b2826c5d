import json
import random

from helpers import (
    candidate_descendants,
    candidate_ecs,
    condition_i,
    make_tree,
    match_by_ids,
    random_instance,
    shared_children,
)
from rulediff.edgecase import EdgeCaseCover, PrimeImplicant, enumerate_cover
from rulediff.interface import compile, compute_interface
from rulediff.triage import (
    PairTriage,
    SideShape,
    representatives_json,
    root_causes,
    select_representatives,
    signature_of,
)


def pair_setup(shape_a, shape_b, names=("A", "B")):
    ta, tb = make_tree(names[0], shape_a), make_tree(names[1], shape_b)
    m = match_by_ids([ta, tb])
    i = compute_interface(m, *names)
    return m, i, compile(ta, i), compile(tb, i)


def pi(**fixed):
    return PrimeImplicant(tuple(sorted(fixed.items())))


CARVE_A = ("root", "AND", ["c", ("carveout", "NAND", ["a", "b"])])
CARVE_B = ("root", "AND", ["c", ("carveout", "NOR", ["a", "b"])])


def test_carveout_root_cause_not_root():
    _, i, _, _ = pair_setup(CARVE_A, CARVE_B)
    p = pi(c=True, a=True, b=False)
    rc = root_causes(p, i)
    assert [r.ec_id for r in rc] == ["carveout"]
    assert rc[0].true_side == "A"
    # the root satisfies (i) as well, but is not minimal
    assert condition_i(i, "root", p.fixed)


def test_negation_root_cause_is_root():
    _, i, _, _ = pair_setup(("root", "AND", ["x"]), ("root", "NAND", ["x"]))
    rc = root_causes(pi(x=True), i)
    assert [r.ec_id for r in rc] == ["root"]
    assert rc[0].true_side == "A"


def test_single_operator_change_localized():
    base = ("root", "OR", [("g1", "AND", ["a", "b"]), ("g2", "NOR", ["c", ("g3", "AND", ["d", "e"])])])
    changed = ("root", "OR", [("g1", "AND", ["a", "b"]), ("g2", "NOR", ["c", ("g3", "OR", ["d", "e"])])])
    _, i, fa, fb = pair_setup(base, changed)
    cover = enumerate_cover(fa, fb, inputs=i.variables)
    assert cover.pis
    for p in cover.pis:
        assert [r.ec_id for r in root_causes(p, i)] == ["g3"]
        holding = {e for e in candidate_ecs(i) if condition_i(i, e, p.fixed)}
        assert "g3" in holding and not ({"a", "b", "c", "d", "e", "g1"} & holding)


def test_carveout_signature_shape():
    _, i, _, _ = pair_setup(CARVE_A, CARVE_B)
    sig = signature_of(pi(c=True, a=True, b=False), i)
    assert not sig.mixed
    (entry,) = sig.entries
    assert entry.ec_id == "carveout"
    assert entry.true_side == SideShape("AND", True, ("a", "b"))
    assert entry.false_side == SideShape("OR", True, ("a", "b"))


def test_equal_signatures_across_pairs():
    # (A, B) has the NAND side first; (B, C) has it second
    _, i1, _, _ = pair_setup(CARVE_A, CARVE_B, ("A", "B"))
    _, i2, _, _ = pair_setup(CARVE_B, CARVE_A, ("B", "C"))
    p = pi(c=True, a=False, b=True)
    s1, s2 = signature_of(p, i1), signature_of(p, i2)
    assert s1 == s2 and s1.digest == s2.digest
    assert len(s1.digest) == 16


def test_mixed_polarity():
    _, i, fa, fb = pair_setup(("root", "AND", ["x"]), ("root", "NAND", ["x"]))
    cover = enumerate_cover(fa, fb, inputs=i.variables)
    assert cover.pis[0].fixed == ()
    sig = signature_of(cover.pis[0], i)
    assert sig.mixed
    assert root_causes(cover.pis[0], i)[0].true_side is None


def test_select_min_rule():
    shape_a = ("root", "AND", [("carve", "NAND", ["a", "b"]), ("o", "OR", ["c", "q", "r"])])
    shape_b = ("root", "AND", [("carve", "NOR", ["a", "b"]), ("o", "OR", ["c", "q", "r"])])
    _, i, fa, fb = pair_setup(shape_a, shape_b)
    cubes = [
        pi(a=True, b=False, c=True, q=True, r=False),
        pi(a=True, b=False, c=True),
        pi(a=True, b=False, c=True, q=True),
    ]
    cover = EdgeCaseCover(tuple(cubes), True, False, i.variables, i.pair)
    (rep,) = select_representatives([(i, cover)])
    assert rep.pi == cubes[1]
    assert rep.class_size == 3
    assert rep.sides == ("A", "B")


def test_root_operator_mismatch_dropped():
    _, i, fa, fb = pair_setup(("root", "AND", ["x", "y"]), ("root", "OR", ["x", "y"]))
    cover = enumerate_cover(fa, fb, inputs=i.variables)
    assert cover.pis
    assert select_representatives([(i, cover)]) == []


def test_low_coverage_dropped():
    shape_a = ("root", "AND", [("carve", "NAND", ["a", "b"]), ("u", "OR", ["u1", "u2", "u3", "u4"])])
    _, i, fa, fb = pair_setup(shape_a, CARVE_B)
    cover = enumerate_cover(fa, fb, inputs=i.variables)
    assert select_representatives([(i, cover)], cov_threshold=0.0)
    assert select_representatives([(i, cover)], cov_threshold=0.99) == []


def fork_pair(j, fillers):
    hs = [(f"h{j}_{k}", "NAND", [f"p{j}_{k}", f"q{j}_{k}"]) for k in range(fillers)]
    a = ("root", "OR", [(f"f{j}", "NAND", [f"a{j}", f"b{j}"]), *hs])
    b = ("root", "OR", [(f"f{j}", "NOR", [f"a{j}", f"b{j}"]), *hs])
    return pair_setup(a, b, (f"A{j:02d}", f"B{j:02d}"))


def test_cap_drops_largest():
    analyses = []
    for j in range(30):
        _, i, fa, fb = fork_pair(j, j // 5)
        analyses.append((i, enumerate_cover(fa, fb, inputs=i.variables)))
    reps = select_representatives(analyses, cap=25)
    assert len(reps) == 25
    assert {r.pi.size for r in reps} == {2 + 2 * k for k in range(5)}
    assert {r.pair[0] for r in reps} == {f"A{j:02d}" for j in range(25)}
    assert select_representatives(analyses, cap=25) == reps
    assert len(select_representatives(analyses, cap=100)) == 30


def test_empty_input():
    assert select_representatives([]) == []


def test_representatives_json():
    m, i, fa, fb = pair_setup(CARVE_A, CARVE_B)
    reps = select_representatives([(i, enumerate_cover(fa, fb, inputs=i.variables))])
    rows = json.loads(representatives_json("p", reps, m))
    assert len(rows) == 1
    row = rows[0]
    assert row["root_causes"][0]["ec_id"] == "carveout"
    assert row["root_causes"][0]["label"] == "carveout"
    assert row["class_size"] == 2 and len(row["fixed"]) == 3
    assert row["signature"] == reps[0].signature.digest


def test_root_cause_minimality_random():
    rng = random.Random(21)
    checked = 0
    for _ in range(60):
        _, _, _, fa, fb, i = random_instance(rng, max_vars=8)
        cover = enumerate_cover(fa, fb, inputs=i.variables)
        pt = PairTriage(i)
        for p in cover.pis:
            for rc in pt.root_causes(p):
                assert condition_i(i, rc.ec_id, p.fixed)
                assert not any(condition_i(i, c, p.fixed) for c in shared_children(i, rc.ec_id))
                checked += 1
            for c in pt.deepest(pt.root_causes(p)):
                assert not any(condition_i(i, d, p.fixed) for d in candidate_descendants(i, c.ec_id))
    assert checked > 20
