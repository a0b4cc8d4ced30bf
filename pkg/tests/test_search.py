import random

import pytest

from qpmut import (
    McKaySpec,
    PreprojectiveSpec,
    QPError,
    deformed_preprojective,
    mckay_cyclic,
)
from qpmut.core import Arrow, QPState, Quiver, with_length_cap
from qpmut.search import canonical_key, explore, replay
from qpmut.serialize import dumps, qp_to_json


@pytest.fixture(scope="module")
def z5():
    return mckay_cyclic(McKaySpec(5, (1, 2, 2)))


@pytest.fixture(scope="module")
def z6():
    return mckay_cyclic(McKaySpec(6, (2, 5, 5)))


def relabel_arrows(qp, shift):
    amap = {a.id: a.id + shift for a in qp.quiver.arrows}
    arrows = tuple(
        Arrow(amap[a.id], f"r{a.id}", a.source, a.target, a.degree)
        for a in qp.quiver.arrows
    )
    from qpmut.core import Potential, canonical_cycle

    terms = {
        canonical_cycle(tuple(amap[x] for x in w)): c
        for w, c in qp.potential.terms.items()
    }
    pot = Potential(terms, qp.potential.length_cap, qp.potential.exact)
    return QPState(Quiver(qp.quiver.vertices, arrows, qp.quiver.grading), pot)


def test_key_invariant_under_arrow_relabeling(z5):
    assert canonical_key(relabel_arrows(z5, 100)) == canonical_key(z5)


def test_key_invariant_under_vertex_rotation(z5):
    n = 5
    vmap = {v.id: (v.id + 2) % n for v in z5.quiver.vertices}
    arrows = tuple(
        Arrow(a.id, a.name, vmap[a.source], vmap[a.target], a.degree)
        for a in z5.quiver.arrows
    )
    rot = QPState(Quiver(z5.quiver.vertices, arrows, z5.quiver.grading), z5.potential)
    assert canonical_key(rot) == canonical_key(z5)


def test_key_separates_different_states(z5, z6):
    assert canonical_key(z5) != canonical_key(z6)
    # a changed coefficient must change the key
    from qpmut.core import Potential
    from fractions import Fraction

    terms = dict(z5.potential.terms)
    w = next(iter(terms))
    terms[w] = terms[w] * 2
    other = QPState(z5.quiver, Potential(terms, 16, True))
    assert canonical_key(other) != canonical_key(z5)


def test_explore_witness_mod6(z6):
    rep = explore(z6, 1, root_spec="mckay:n=6,w=2,5,5")
    assert rep.status == "witness"
    assert rep.witness["sequence"] == [0]
    assert rep.witness["two_cycle_vertices"] == [2, 4]
    cert = rep.witness["certificate"]
    assert cert["degree_sum"] == [3, 0, 0]
    assert cert["potential_degree"] == [1, 1, 1]


def test_explore_depth_zero(z5):
    rep = explore(z5, 0)
    assert rep.status == "clean-to-depth"
    assert rep.explored == 1
    assert rep.depth_reached == 0


def test_explore_clean_mod5(z5):
    rep = explore(with_length_cap(z5, 32), 2)
    assert rep.status == "clean-to-depth"
    assert rep.all_exact


def test_explore_rejects_bad_root():
    qp = deformed_preprojective(PreprojectiveSpec("A~2", (1, 1, -2)))
    with pytest.raises(QPError, match="root"):
        explore(qp, 1)


def test_explore_node_cap(z5):
    rep = explore(z5, 3, node_cap=1)
    assert rep.status == "inconclusive"
    assert "node cap" in rep.inconclusive_reason


def test_depth_monotonicity(z6):
    first = explore(z6, 1)
    for depth in (2, 3):
        again = explore(z6, depth)
        assert again.status == "witness"
        assert again.witness["sequence"] == first.witness["sequence"]
        assert again.witness["qp"] == first.witness["qp"]


def test_witness_replay_byte_identical(z6):
    rep = explore(z6, 1)
    node = replay(z6, rep.witness["sequence"])
    assert dumps(qp_to_json(node)) == dumps(rep.witness["qp"])
    # the reported two-cycle arrows are present in the replayed state
    pair = rep.witness["two_cycle"]
    twos = {frozenset((a.id, b.id)) for a, b in node.quiver.two_cycles()}
    assert frozenset(pair) in twos


def test_pruning_soundness(z5, z6):
    for qp, depth in ((z5, 2), (z6, 1)):
        with_p = explore(qp, depth, prune=True)
        without = explore(qp, depth, prune=False)
        assert with_p.status == without.status
        assert with_p.witness == without.witness
        assert without.pruned == 0
        assert without.explored >= with_p.explored


def test_thread_invariance(z5, z6):
    for qp, depth in ((z5, 2), (z6, 1)):
        base = explore(qp, depth, threads=1).to_json()
        for threads in (2, 4):
            assert explore(qp, depth, threads=threads).to_json() == base


def test_report_json_excludes_timing(z5):
    rep = explore(z5, 1)
    doc = rep.to_json()
    assert "wall_ms" not in doc
    assert rep.wall_ms > 0
    assert "wall_ms" in rep.to_json(include_timing=True)


def test_tree_dot_output(z5):
    rep = explore(z5, 1)
    dot = rep.to_dot()
    assert dot.startswith("digraph")
    assert '"" -> "0" [label="0"]' in dot


def test_exactness_policing(z5):
    # truncating hard makes short horizons; the subtree must not report clean
    capped = with_length_cap(z5, 4)
    rep = explore(capped, 3)
    if rep.status == "clean-to-depth":
        assert rep.all_exact
    else:
        assert rep.status in ("witness", "inconclusive")
