import random
from fractions import Fraction

import pytest

from qpmut import (
    Arrow,
    Grading,
    McKaySpec,
    Potential,
    PreprojectiveSpec,
    QPError,
    QPState,
    Quiver,
    Vertex,
    canonical_cycle,
    cyclic_derivative,
    deformed_preprojective,
    is_homogeneous,
    make_potential,
    mckay_cyclic,
    path_degree,
    substitute,
)
from qpmut.core import add_degrees, validate_cycle, with_length_cap
from qpmut.serialize import dumps, loads_qp, qp_from_json, qp_to_json


@pytest.fixture(scope="module")
def z5():
    return mckay_cyclic(McKaySpec(5, (1, 2, 2)))


@pytest.fixture(scope="module")
def a2bar():
    return deformed_preprojective(PreprojectiveSpec("A~2", (1, 1, -2)))


def arrow_id(qp, name):
    return next(a.id for a in qp.quiver.arrows if a.name == name)


def test_canonical_cycle_single_loop():
    assert canonical_cycle((7,)) == (7,)


def test_canonical_cycle_minimal_rotation():
    assert canonical_cycle((5, 3)) == (3, 5)
    assert canonical_cycle((2, 9, 4)) == (2, 9, 4)


def test_canonical_cycle_all_rotations_agree(z5):
    x1 = arrow_id(z5, "x1@0")
    x2 = arrow_id(z5, "x2@1")
    x3 = arrow_id(z5, "x3@3")
    words = {canonical_cycle(w) for w in [(x1, x2, x3), (x2, x3, x1), (x3, x1, x2)]}
    assert len(words) == 1


def test_canonical_cycle_idempotent_random():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randrange(1, 9)
        w = tuple(rng.randrange(0, 30) for _ in range(n))
        j = rng.randrange(n)
        assert canonical_cycle(w[j:] + w[:j]) == canonical_cycle(w)


def test_canonical_cycle_rejects_empty():
    with pytest.raises(QPError, match="not a cycle"):
        canonical_cycle(())


def test_validate_cycle_rejects_open_path(z5):
    with pytest.raises(QPError, match="not a cycle"):
        validate_cycle(z5.quiver, (arrow_id(z5, "x1@0"),))


def test_path_degree(z5):
    x1 = arrow_id(z5, "x1@0")
    assert path_degree(z5.quiver, (x1,)) == (1, 0, 0)
    cyc = (x1, arrow_id(z5, "x2@1"), arrow_id(z5, "x3@3"))
    assert path_degree(z5.quiver, cyc) == (1, 1, 1)
    assert path_degree(z5.quiver, ()) == (0, 0, 0)


def test_path_degree_composite_square():
    # two steps of the same generator stack up in one coordinate
    qp = mckay_cyclic(McKaySpec(6, (2, 5, 5)))
    x10 = arrow_id(qp, "x1@0")
    x12 = arrow_id(qp, "x1@2")
    assert path_degree(qp.quiver, (x10, x12)) == (2, 0, 0)


def test_is_homogeneous(z5, a2bar):
    assert is_homogeneous(z5) == (1, 1, 1)
    assert is_homogeneous(a2bar) == (4,)
    # zero potential: vacuously homogeneous, degree undetermined
    empty = QPState(z5.quiver, Potential({}, 16, True))
    assert is_homogeneous(empty) is None


def test_is_homogeneous_mixed_degrees(z5):
    x1 = arrow_id(z5, "x1@0")
    w2 = next(iter(z5.potential.terms))
    # graft a square of x1@… cycle? use a 5-step x1 cycle (degree (5,0,0))
    x1s = [arrow_id(z5, f"x1@{l}") for l in range(5)]
    pot = make_potential(
        z5.quiver, [(tuple(x1s), Fraction(1)), (w2, Fraction(1))], 16
    )
    assert is_homogeneous(z5.quiver, pot) is None


def test_cyclic_derivative_basic(z5):
    x1 = arrow_id(z5, "x1@0")
    x2 = arrow_id(z5, "x2@1")
    x3 = arrow_id(z5, "x3@3")
    w = canonical_cycle((x1, x2, x3))
    pot = Potential({w: Fraction(1)}, 16, True)
    assert cyclic_derivative(pot, x1) == {(x2, x3): Fraction(1)}
    assert cyclic_derivative(pot, 9999) == {}


def test_cyclic_derivative_loop_square(a2bar):
    t0 = arrow_id(a2bar, "t0")
    lam0 = Fraction(1)
    pot = Potential({(t0, t0): -lam0 / 2}, 16, True)
    assert cyclic_derivative(pot, t0) == {(t0,): -lam0}


def test_cyclic_derivative_endpoints_and_degree_law(z5):
    r = z5.quiver.grading.potential_degree
    for a in z5.quiver.arrows:
        ps = cyclic_derivative(z5.potential, a.id)
        for p in ps:
            src, tgt = z5.quiver.path_endpoints(p)
            assert (src, tgt) == (a.target, a.source)
            assert add_degrees(path_degree(z5.quiver, p), a.degree) == r


def test_cyclic_derivative_linear(z5):
    pot = z5.potential
    terms = list(pot.terms.items())
    half1 = Potential(dict(terms[:5]), 16, True)
    half2 = Potential(dict(terms[5:]), 16, True)
    c = Fraction(3, 2)
    scaled = Potential({w: c * k for w, k in half1.terms.items()}, 16, True)
    combo = Potential({**scaled.terms, **half2.terms}, 16, True)
    for a in z5.quiver.arrows:
        lhs = cyclic_derivative(combo, a.id)
        rhs = {}
        for p, k in cyclic_derivative(half1, a.id).items():
            rhs[p] = rhs.get(p, Fraction(0)) + c * k
        for p, k in cyclic_derivative(half2, a.id).items():
            rhs[p] = rhs.get(p, Fraction(0)) + k
        rhs = {p: k for p, k in rhs.items() if k != 0}
        assert lhs == rhs


def test_substitute_empty_and_identity(z5):
    assert substitute(z5.quiver, z5.potential, {}) == z5.potential
    ident = {a.id: {(a.id,): Fraction(1)} for a in z5.quiver.arrows}
    assert substitute(z5.quiver, z5.potential, ident).terms == z5.potential.terms


def test_substitute_endpoint_mismatch(z5):
    x1 = arrow_id(z5, "x1@0")
    x2 = arrow_id(z5, "x2@0")
    with pytest.raises(QPError, match="substitution"):
        substitute(z5.quiver, z5.potential, {x1: {(x2,): Fraction(1)}})


def test_substitute_multilinear_lengths(z5):
    # a -> a - p with len(p) = 2 sends a cubic word to lengths 3 and 4
    x1 = arrow_id(z5, "x1@0")  # 0 -> 1
    x2 = arrow_id(z5, "x2@1")  # 1 -> 3
    x3 = arrow_id(z5, "x3@3")  # 3 -> 0
    w = canonical_cycle((x1, x2, x3))
    pot = Potential({w: Fraction(1)}, 16, True)
    # parallel path 0 -> 1: x2@0 (0->2) then x3@2? 2+2=4 no; use x3@0 (0->2), x2@2? 2+2=4.
    # simplest: subtract a path 0 -> ... -> 1 of length 2: x1@… no; weights (1,2,2):
    # 0 -x2-> 2 -x3-> 4? no.  0 -x1-> 1 is the only length-1; length-2 paths 0->1:
    # none with these weights (1+2, 2+2 land on 3 or 4), so build one ending at 1:
    # 4 -x1-> 0 -x1-> 1 is 4 -> 1; instead substitute into x2@1 (1 -> 3):
    # 1 -x1-> 2 -x1-> 3 gives a parallel length-2 path.
    x11 = arrow_id(z5, "x1@1")
    x12 = arrow_id(z5, "x1@2")
    sigma = {x2: {(x2,): Fraction(1), (x11, x12): Fraction(-1)}}
    out = substitute(z5.quiver, pot, sigma)
    assert sorted(len(w2) for w2 in out.terms) == [3, 4]


def test_substitute_truncation_clears_exact(z5):
    x2 = arrow_id(z5, "x2@1")
    x11 = arrow_id(z5, "x1@1")
    x12 = arrow_id(z5, "x1@2")
    w = next(iter(z5.potential.terms))
    pot = Potential({w: Fraction(1)}, 3, True)
    if x2 not in w:
        x2 = next(a for a in w)
        arr = z5.quiver.arrow(x2)
        # build any parallel 2-path for an arrow of this word
        sigma = None
        for p1 in z5.quiver.arrows:
            if p1.source != arr.source:
                continue
            for p2 in z5.quiver.arrows:
                if p2.source == p1.target and p2.target == arr.target:
                    sigma = {x2: {(x2,): Fraction(1), (p1.id, p2.id): Fraction(1)}}
                    break
            if sigma:
                break
        assert sigma is not None
    else:
        sigma = {x2: {(x2,): Fraction(1), (x11, x12): Fraction(1)}}
    out = substitute(z5.quiver, pot, sigma)
    assert not out.exact
    assert all(len(w2) <= 3 for w2 in out.terms)


def test_loops_and_two_cycles(z5, a2bar):
    assert z5.quiver.loops() == ()
    assert z5.quiver.two_cycles() == ()
    loops = a2bar.quiver.loops()
    assert sorted(a.name for a in loops) == ["t0", "t1", "t2"]
    # the doubled triangle carries one antiparallel pair per edge
    pairs = a2bar.quiver.two_cycles()
    assert len(pairs) == 3
    assert all({a.source, a.target} == {b.source, b.target} for a, b in pairs)


def test_weight_zero_gives_loops():
    qp = mckay_cyclic(McKaySpec(2, (0, 1, 1)))
    assert len(qp.quiver.loops()) == 2


def test_potential_invariants():
    v = (Vertex(0, "0"),)
    a = Arrow(0, "t", 0, 0, ())
    q = Quiver(v, (a,), Grading())
    with pytest.raises(QPError):
        Potential({(0,): Fraction(1)}, 16, True)  # too short
    with pytest.raises(QPError):
        Potential({(0, 0): Fraction(0)}, 16, True)  # zero coefficient
    p = Potential({(0, 0): Fraction(1, 2)}, 16, True)
    assert QPState(q, p).exact


def test_qpstate_horizon_cap_invariant(z5):
    with pytest.raises(QPError, match="horizon"):
        QPState(z5.quiver, z5.potential, 20)  # cap is 16


def test_with_length_cap_drop(z5):
    qp = with_length_cap(z5, 2)
    assert not qp.potential.exact and qp.potential.terms == {}
    up = with_length_cap(z5, 32)
    assert up.potential.exact and up.potential.terms == z5.potential.terms


def test_json_roundtrip(z5, a2bar):
    for qp in (z5, a2bar):
        doc = qp_to_json(qp)
        back = qp_from_json(doc)
        assert qp_to_json(back) == doc
        assert dumps(qp_to_json(back)) == dumps(doc)


def test_json_cycles_stored_canonically(z5):
    doc = qp_to_json(z5)
    for entry in doc["potential"]:
        w = tuple(entry["cycle"])
        assert canonical_cycle(w) == w


def test_json_bad_coefficient(z5):
    doc = qp_to_json(z5)
    doc["potential"][0]["coeff"] = "1/0"
    with pytest.raises(QPError, match="coefficient"):
        qp_from_json(doc)


def test_json_line_diagnostics():
    with pytest.raises(QPError, match="line 2 column"):
        loads_qp('{\n  "grading": ,\n}')


def test_quiver_validation():
    v = (Vertex(0, "0"),)
    with pytest.raises(QPError, match="dangling"):
        Quiver(v, (Arrow(0, "a", 0, 1, ()),), Grading())
    with pytest.raises(QPError, match="degree length"):
        Quiver(v, (Arrow(0, "a", 0, 0, (1,)),), Grading())
    with pytest.raises(QPError, match="duplicate"):
        Quiver(v + v, (), Grading())
