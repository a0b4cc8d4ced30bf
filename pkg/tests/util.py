"""Shared test helpers: seeded random corpus instances and dense oracles."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from qpmut import McKaySpec, PreprojectiveSpec, deformed_preprojective, mckay_cyclic
from qpmut.core import QPState, substitute
from qpmut.mutation import mutate


def dense_rank(rows: List[List[Fraction]]) -> int:
    """Plain Gaussian elimination rank over the rationals."""
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / pr[c]
                rows[i] = [x - f * y for x, y in zip(rows[i], pr)]
        rank += 1
    return rank


def random_mckay_spec(rng: random.Random, *, clean: bool, n_max: int = 7) -> McKaySpec:
    """Random weights summing to zero; with ``clean`` the quiver is loop-free
    and two-cycle free (no weight is 0 and no two weights cancel)."""
    while True:
        n = rng.randrange(3, n_max + 1)
        a1 = rng.randrange(1, n)
        a2 = rng.randrange(1, n)
        a3 = (-a1 - a2) % n
        w = (a1, a2, a3)
        if clean:
            if any(x == 0 for x in w):
                continue
            if any((x + y) % n == 0 for x in w for y in w):
                continue
        elif a3 == 0:
            continue
        return McKaySpec(n, w)


def rescale_arrows(qp: QPState, rng: random.Random) -> QPState:
    """Right equivalence rescaling each arrow by a random nonzero rational;
    exercises reduction beyond unit coefficients."""
    sigma = {}
    for a in qp.quiver.arrows:
        c = Fraction(rng.choice([1, 2, 3, -1, -2, 1]), rng.choice([1, 1, 2]))
        if c != 1:
            sigma[a.id] = {(a.id,): c}
    pot = substitute(qp.quiver, qp.potential, sigma)
    return QPState(qp.quiver, pot, qp.faithful_horizon)


def is_clean(qp: QPState) -> bool:
    return not qp.quiver.loops() and not qp.quiver.two_cycles()


def random_clean_instance(rng: random.Random, *, prefix_max: int = 2) -> QPState:
    """A loop-free two-cycle-free graded state: a random clean McKay state,
    optionally pushed along a short random mutation path and rescaled."""
    qp = mckay_cyclic(random_mckay_spec(rng, clean=True))
    if rng.random() < 0.5:
        qp = rescale_arrows(qp, rng)
    for _ in range(rng.randrange(0, prefix_max + 1)):
        v = rng.choice([vv.id for vv in qp.quiver.vertices])
        nxt, _ = mutate(qp, v)
        if not is_clean(nxt):
            break
        qp = nxt
    return qp


def random_preproj_instance(rng: random.Random) -> QPState:
    label = rng.choice(("A~2", "A~3", "D~4"))
    m = {"A~2": 3, "A~3": 4, "D~4": 5}[label]
    lam = tuple(Fraction(rng.randrange(-3, 4)) for _ in range(m))
    return deformed_preprojective(PreprojectiveSpec(label, lam))


def random_degenerate_spec(rng: random.Random) -> McKaySpec:
    """Clean quiver whose weights share a factor with the modulus, the
    configuration that tends to trip the degree obstruction."""
    while True:
        spec = random_mckay_spec(rng, clean=True, n_max=9)
        import math

        if any(math.gcd(a, spec.n) > 1 for a in spec.weights):
            return spec


def quadratic_block_oracle(qp: QPState, vertex: int):
    """Ranks of the opposite quadratic blocks created by mutating at a
    vertex, computed straight from the cubic potential by hand: contract each
    word passing through the vertex and collect coefficient matrices.  Fully
    independent of the mutation engine.
    """
    Q = qp.quiver
    entries: Dict[Tuple[int, int], Dict] = {}
    for w, c in qp.potential.terms.items():
        arrows = [Q.arrow(x) for x in w]
        visits = [a.source for a in arrows]
        if vertex not in visits:
            continue
        k = visits.index(vertex)
        w = w[k:] + w[:k]  # based at the vertex: (out, mid, in)
        assert len(w) == 3
        pair = (w[-1], w[0])  # (arrow into the vertex, arrow out of it)
        mid = w[1]
        u, v = Q.arrow(mid).target, Q.arrow(mid).source
        entries.setdefault((min(u, v), max(u, v)), {})[(pair, mid)] = c
    ranks = {}
    for block, cell in entries.items():
        rows = sorted({pair for pair, _ in cell})
        cols = sorted({back for _, back in cell})
        mat = [[cell.get((p, b), Fraction(0)) for b in cols] for p in rows]
        ranks[block] = dense_rank(mat)
    return ranks
