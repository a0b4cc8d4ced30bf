"""Mutation at a vertex, splitting reduction, and the degree obstruction.

``premutate`` adds one composite arrow per in/out pair at the vertex,
reverses the incident arrows with the graded degree rules, and rewrites the
potential.  ``reduce`` splits off the trivial quadratic part by exact linear
algebra over the rationals followed by iterated higher-order substitutions.
``mutate`` is their composition.  ``degree_obstruction`` certifies that a
two-cycle must survive reduction purely from arrow degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .core import (
    Arrow,
    CyclicWord,
    Degree,
    PathSum,
    Potential,
    QPError,
    QPState,
    Quiver,
    add_degrees,
    canonical_cycle,
    cyclic_derivative,
    is_homogeneous,
    make_potential,
    sub_degrees,
    substitute,
)

REDUCE_ROUND_CAP = 64


@dataclass(frozen=True)
class TrivialBlock:
    """One quadratic block split off by reduction.

    ``kind`` is "opposite" for antiparallel arrows between two vertices
    (deletes 2*rank arrows) or "loops" for the symmetric form on loops at a
    single vertex (deletes rank arrows).
    """

    vertices: Tuple[int, int]
    kind: str
    rows: Tuple[int, ...]
    cols: Tuple[int, ...]
    matrix: Tuple[Tuple[Fraction, ...], ...]
    rank: int
    deleted: Tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "kind": self.kind,
            "rows": list(self.rows),
            "cols": list(self.cols),
            "matrix": [[str(c) for c in row] for row in self.matrix],
            "rank": self.rank,
            "deleted": list(self.deleted),
        }


@dataclass(frozen=True)
class MutationReport:
    vertex: Optional[int] = None
    arrows_added: Tuple[Arrow, ...] = ()
    arrows_reversed: Tuple[Tuple[Arrow, Arrow], ...] = ()
    trivial_blocks: Tuple[TrivialBlock, ...] = ()
    substitution_rounds: int = 0
    arrows_deleted: Tuple[int, ...] = ()
    exact: bool = True

    def to_json(self) -> dict:
        def arr(a: Arrow) -> dict:
            return {
                "id": a.id,
                "name": a.name,
                "source": a.source,
                "target": a.target,
                "degree": list(a.degree),
            }

        return {
            "vertex": self.vertex,
            "arrows_added": [arr(a) for a in self.arrows_added],
            "arrows_reversed": [
                {"old": arr(old), "new": arr(new)} for old, new in self.arrows_reversed
            ],
            "trivial_blocks": [b.to_json() for b in self.trivial_blocks],
            "substitution_rounds": self.substitution_rounds,
            "arrows_deleted": list(self.arrows_deleted),
            "exact": self.exact,
        }


@dataclass(frozen=True)
class ObstructionCertificate:
    """Witness that reduction cannot remove every two-cycle between a vertex
    pair: the surviving arrows' degree sum differs from the potential degree,
    no matter which maximal pairing is deleted."""

    vertices: Tuple[int, int]
    surviving: Tuple[int, int]
    degrees: Tuple[Degree, Degree]
    degree_sum: Degree
    potential_degree: Degree
    matching: Tuple[Tuple[int, int], ...]

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "surviving": list(self.surviving),
            "degrees": [list(d) for d in self.degrees],
            "degree_sum": list(self.degree_sum),
            "potential_degree": list(self.potential_degree),
            "matching": [list(p) for p in self.matching],
        }


def _check_mutable(quiver: Quiver, i: int) -> None:
    if i not in quiver.vertex_by_id:
        raise QPError(f"vertex absent: {i}")
    for a in quiver.arrows:
        if a.source == i and a.target == i:
            raise QPError(f"mutation undefined at vertex {i}: incident loop")
    ins = {a.source for a in quiver.arrows if a.target == i and a.source != i}
    outs = {a.target for a in quiver.arrows if a.source == i and a.target != i}
    if ins & outs:
        raise QPError(f"mutation undefined at vertex {i}: incident two-cycle")


def _shrunk_horizon(h: Optional[int]) -> Optional[int]:
    # a premutated word of length m draws on input words of length up to 2m
    return None if h is None else h // 2


def premutate(qp: QPState, i: int) -> Tuple[QPState, MutationReport]:
    """DWZ premutation at a vertex without reduction."""
    Q = qp.quiver
    _check_mutable(Q, i)
    r = Q.grading.potential_degree
    ins = sorted((a for a in Q.arrows if a.target == i), key=lambda a: a.id)
    outs = sorted((a for a in Q.arrows if a.source == i), key=lambda a: a.id)

    next_id = max((a.id for a in Q.arrows), default=-1) + 1
    composite: Dict[Tuple[int, int], Arrow] = {}
    added: List[Arrow] = []
    for a in ins:
        for b in outs:
            c = Arrow(
                next_id,
                f"[{a.name},{b.name}]",
                a.source,
                b.target,
                add_degrees(a.degree, b.degree),
            )
            composite[(a.id, b.id)] = c
            added.append(c)
            next_id += 1

    reversed_pairs: List[Tuple[Arrow, Arrow]] = []
    new_arrows: List[Arrow] = []
    for a in Q.arrows:
        if a.target == i:
            star = Arrow(a.id, _star_name(a.name), i, a.source, sub_degrees(r, a.degree))
            reversed_pairs.append((a, star))
            new_arrows.append(star)
        elif a.source == i:
            star = Arrow(
                a.id, _star_name(a.name), a.target, i, tuple(-x for x in a.degree)
            )
            reversed_pairs.append((a, star))
            new_arrows.append(star)
        else:
            new_arrows.append(a)
    new_arrows.extend(added)
    quiver1 = Quiver(Q.vertices, tuple(new_arrows), Q.grading)

    items: List[Tuple[CyclicWord, Fraction]] = []
    for w, c in qp.potential.terms.items():
        items.append((_contract_through(Q, composite, w, i), c))
    for a in ins:
        for b in outs:
            # the triangle composite -> reversed-out -> reversed-in
            items.append(((composite[(a.id, b.id)].id, b.id, a.id), Fraction(1)))

    cap = qp.potential.length_cap
    pot1 = make_potential(quiver1, items, cap, qp.potential.exact)
    h1 = _shrunk_horizon(qp.faithful_horizon)
    if not pot1.exact:
        h1 = cap if h1 is None else min(h1, cap)
    report = MutationReport(
        vertex=i,
        arrows_added=tuple(added),
        arrows_reversed=tuple(reversed_pairs),
        exact=pot1.exact,
    )
    return QPState(quiver1, pot1, h1), report


def _star_name(name: str) -> str:
    return name[:-1] if name.endswith("*") else name + "*"


def _contract_through(
    quiver: Quiver, composite: Mapping[Tuple[int, int], Arrow], w: CyclicWord, i: int
) -> Tuple[int, ...]:
    """Replace every consecutive pass (a into i, b out of i) by the composite.

    Passes are disjoint because i carries no loop; a single right rotation
    makes the wrap-around pass contiguous.
    """
    if quiver.arrow(w[0]).source == i:
        w = (w[-1],) + w[:-1]
    out: List[int] = []
    j = 0
    n = len(w)
    while j < n:
        aid = w[j]
        if quiver.arrow(aid).target == i:
            bid = w[j + 1]
            out.append(composite[(aid, bid)].id)
            j += 2
        else:
            out.append(aid)
            j += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# reduction


def _identity(n: int) -> List[List[Fraction]]:
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def _rank_normal_form(
    C: Sequence[Sequence[Fraction]],
) -> Tuple[List[List[Fraction]], List[List[Fraction]], int]:
    """Invertible E, F with E*C*F = [[I, 0], [0, 0]]; returns (E, F, rank)."""
    m = len(C)
    n = len(C[0]) if m else 0
    A = [list(row) for row in C]
    E = _identity(m)
    F = _identity(n)
    r = 0
    while r < min(m, n):
        piv = None
        for ii in range(r, m):
            for jj in range(r, n):
                if A[ii][jj] != 0:
                    piv = (ii, jj)
                    break
            if piv:
                break
        if piv is None:
            break
        ii, jj = piv
        if ii != r:
            A[r], A[ii] = A[ii], A[r]
            E[r], E[ii] = E[ii], E[r]
        if jj != r:
            for row in A:
                row[r], row[jj] = row[jj], row[r]
            for row in F:
                row[r], row[jj] = row[jj], row[r]
        p = A[r][r]
        A[r] = [x / p for x in A[r]]
        E[r] = [x / p for x in E[r]]
        for i2 in range(m):
            if i2 != r and A[i2][r] != 0:
                f = A[i2][r]
                A[i2] = [x - f * y for x, y in zip(A[i2], A[r])]
                E[i2] = [x - f * y for x, y in zip(E[i2], E[r])]
        for j2 in range(n):
            if j2 != r and A[r][j2] != 0:
                f = A[r][j2]
                for i2 in range(m):
                    A[i2][j2] -= f * A[i2][r]
                for i2 in range(n):
                    F[i2][j2] -= f * F[i2][r]
        r += 1
    return E, F, r


def _congruence_diagonal(
    S: Sequence[Sequence[Fraction]],
) -> Tuple[List[List[Fraction]], List[Fraction]]:
    """Invertible M with M^T*S*M diagonal; needs 1/2, hence characteristic 0."""
    m = len(S)
    A = [list(row) for row in S]
    M = _identity(m)

    def col_add(dst: int, src: int, f: Fraction) -> None:
        for t in range(m):
            A[t][dst] += f * A[t][src]
        for t in range(m):
            A[dst][t] += f * A[src][t]
        for t in range(m):
            M[t][dst] += f * M[t][src]

    def swap(i: int, j: int) -> None:
        for row in A:
            row[i], row[j] = row[j], row[i]
        A[i], A[j] = A[j], A[i]
        for row in M:
            row[i], row[j] = row[j], row[i]

    for r in range(m):
        if A[r][r] == 0:
            k = next((t for t in range(r + 1, m) if A[t][t] != 0), None)
            if k is not None:
                swap(r, k)
            else:
                od = next(
                    (
                        (t, s)
                        for t in range(r, m)
                        for s in range(t + 1, m)
                        if A[t][s] != 0
                    ),
                    None,
                )
                if od is None:
                    break
                t, s = od
                col_add(t, s, Fraction(1))
                if t != r:
                    swap(r, t)
        p = A[r][r]
        for t in range(r + 1, m):
            if A[r][t] != 0:
                col_add(t, r, -A[r][t] / p)
    return M, [A[t][t] for t in range(m)]


def _transpose_mix(
    arrows: Sequence[Arrow], M: Sequence[Sequence[Fraction]], by_row: bool
) -> Dict[int, PathSum]:
    """Substitution arrow_i -> sum_k M'[i][k] arrow_k with M' = M^T when the
    reduction matrix acted by rows (E) and M' = M when it acted by columns."""
    sigma: Dict[int, PathSum] = {}
    n = len(arrows)
    for i in range(n):
        val: PathSum = {}
        for k in range(n):
            c = M[k][i] if by_row else M[i][k]
            if c != 0:
                val[(arrows[k].id,)] = c
        if list(val) != [(arrows[i].id,)] or val[(arrows[i].id,)] != 1:
            sigma[arrows[i].id] = val
    return sigma


def _degree_class_pairs(
    side_a: Sequence[Arrow], side_b: Sequence[Arrow], coeff, where: str
):
    """Split two opposite arrow families into coupled equal-degree classes.

    Returns (list of (A_class, B_class) with some nonzero coupling,
    leftover classes untouched).  Raises when a class couples to two
    different opposite classes, which cannot happen for homogeneous
    potentials.
    """
    classes_a: Dict[Degree, List[Arrow]] = {}
    for a in side_a:
        classes_a.setdefault(a.degree, []).append(a)
    classes_b: Dict[Degree, List[Arrow]] = {}
    for b in side_b:
        classes_b.setdefault(b.degree, []).append(b)
    link_a: Dict[Degree, set] = {d: set() for d in classes_a}
    link_b: Dict[Degree, set] = {d: set() for d in classes_b}
    for da, As in classes_a.items():
        for db, Bs in classes_b.items():
            if any(coeff(a, b) != 0 for a in As for b in Bs):
                link_a[da].add(db)
                link_b[db].add(da)
    for d, lk in list(link_a.items()) + list(link_b.items()):
        if len(lk) > 1:
            raise QPError(
                f"quadratic part at {where} couples arrows of mixed degrees; "
                "graded reduction is undefined"
            )
    pairs = []
    for da in sorted(classes_a):
        if link_a[da]:
            db = next(iter(link_a[da]))
            pairs.append((classes_a[da], classes_b[db]))
    return pairs


def reduce(qp: QPState, *, round_cap: int = REDUCE_ROUND_CAP) -> Tuple[QPState, MutationReport]:
    """Split off the trivial quadratic part, returning the reduced state.

    Phase 1 applies invertible degree-homogeneous changes of parallel arrows
    to bring the length-2 terms to normal form; phase 2 pushes any remaining
    coupling of the trivial arrows into ever longer words until it clears the
    length cap.  Hitting the round cap yields a truncated (inexact) result,
    not a failure.
    """
    Q = qp.quiver
    W = qp.potential
    cap = W.length_cap

    def quad_coeff(a: Arrow, b: Arrow) -> Fraction:
        return W.terms.get(canonical_cycle((a.id, b.id)), Fraction(0))

    sigma: Dict[int, PathSum] = {}
    pairs: List[Tuple[int, int]] = []
    squares: List[Tuple[int, Fraction]] = []
    blocks: List[TrivialBlock] = []

    opposite: Dict[Tuple[int, int], None] = {}
    loop_vertices: Dict[int, None] = {}
    for a in Q.arrows:
        if a.source == a.target:
            loop_vertices.setdefault(a.source)
        elif any(
            b.source == a.target and b.target == a.source for b in Q.arrows
        ):
            opposite.setdefault((min(a.source, a.target), max(a.source, a.target)))

    for (u, v) in sorted(opposite):
        side_a = sorted(
            (a for a in Q.arrows if (a.source, a.target) == (u, v)), key=lambda a: a.id
        )
        side_b = sorted(
            (a for a in Q.arrows if (a.source, a.target) == (v, u)), key=lambda a: a.id
        )
        rank = 0
        deleted: List[int] = []
        for As, Bs in _degree_class_pairs(side_a, side_b, quad_coeff, f"({u},{v})"):
            C = [[quad_coeff(a, b) for b in Bs] for a in As]
            E, F, rho = _rank_normal_form(C)
            sigma.update(_transpose_mix(As, E, by_row=True))
            sigma.update(_transpose_mix(Bs, F, by_row=False))
            for k in range(rho):
                pairs.append((As[k].id, Bs[k].id))
                deleted.extend((As[k].id, Bs[k].id))
            rank += rho
        blocks.append(
            TrivialBlock(
                (u, v),
                "opposite",
                tuple(a.id for a in side_a),
                tuple(b.id for b in side_b),
                tuple(tuple(quad_coeff(a, b) for b in side_b) for a in side_a),
                rank,
                tuple(deleted),
            )
        )

    for u in sorted(loop_vertices):
        ls = sorted(
            (a for a in Q.arrows if a.source == u and a.target == u), key=lambda a: a.id
        )
        classes: Dict[Degree, List[Arrow]] = {}
        for l in ls:
            classes.setdefault(l.degree, []).append(l)
        self_coupled = set()
        cross: Dict[Degree, set] = {d: set() for d in classes}
        for d, Ls in classes.items():
            if any(
                quad_coeff(x, y) != 0
                for ii, x in enumerate(Ls)
                for y in Ls[ii:]
            ):
                self_coupled.add(d)
        for da in classes:
            for db in classes:
                if da < db and any(
                    quad_coeff(x, y) != 0 for x in classes[da] for y in classes[db]
                ):
                    cross[da].add(db)
                    cross[db].add(da)
        for d in classes:
            if len(cross[d]) > 1 or (cross[d] and d in self_coupled):
                raise QPError(
                    f"quadratic loop part at vertex {u} couples mixed degrees; "
                    "graded reduction is undefined"
                )
        rank = 0
        deleted = []
        for d in sorted(self_coupled):
            Ls = classes[d]
            S = [
                [
                    quad_coeff(x, y) if x.id == y.id else quad_coeff(x, y) / 2
                    for y in Ls
                ]
                for x in Ls
            ]
            M, diag = _congruence_diagonal(S)
            sigma.update(_transpose_mix(Ls, M, by_row=False))
            for k, mu in enumerate(diag):
                if mu != 0:
                    squares.append((Ls[k].id, mu))
                    deleted.append(Ls[k].id)
                    rank += 1
        done_cross = set()
        for da in sorted(cross):
            if cross[da] and da not in done_cross:
                db = next(iter(cross[da]))
                done_cross.update({da, db})
                As, Bs = classes[da], classes[db]
                C = [[quad_coeff(a, b) for b in Bs] for a in As]
                E, F, rho = _rank_normal_form(C)
                sigma.update(_transpose_mix(As, E, by_row=True))
                sigma.update(_transpose_mix(Bs, F, by_row=False))
                for k in range(rho):
                    pairs.append((As[k].id, Bs[k].id))
                    deleted.extend((As[k].id, Bs[k].id))
                rank += rho
        blocks.append(
            TrivialBlock(
                (u, u),
                "loops",
                tuple(a.id for a in ls),
                tuple(a.id for a in ls),
                tuple(tuple(quad_coeff(x, y) for y in ls) for x in ls),
                rank,
                tuple(deleted),
            )
        )

    W1 = substitute(Q, W, sigma, cap) if sigma else W

    expected_quad = {canonical_cycle((a, b)): Fraction(1) for a, b in pairs}
    expected_quad.update({(l, l): mu for l, mu in squares})
    assert W1.words_of_length(2) == expected_quad, "phase-1 normal form failed"

    # phase 2: chase couplings of the trivial arrows into longer words
    def higher(pot: Potential) -> Potential:
        return Potential(
            {w: c for w, c in pot.terms.items() if len(w) >= 3}, cap, pot.exact
        )

    rounds = 0
    converged = not (pairs or squares)
    while not converged and rounds < round_cap:
        changed = False
        w3 = higher(W1)
        for a_id, b_id in pairs:
            pa = cyclic_derivative(w3, b_id)
            pb = cyclic_derivative(w3, a_id)
            sig: Dict[int, PathSum] = {}
            if pa:
                val: PathSum = {(a_id,): Fraction(1)}
                for p, c in pa.items():
                    val[p] = val.get(p, Fraction(0)) - c
                sig[a_id] = val
            if pb:
                val = {(b_id,): Fraction(1)}
                for p, c in pb.items():
                    val[p] = val.get(p, Fraction(0)) - c
                sig[b_id] = val
            if sig:
                W1 = substitute(Q, W1, sig, cap)
                w3 = higher(W1)
                changed = True
        for l_id, mu in squares:
            pl = cyclic_derivative(w3, l_id)
            if pl:
                val = {(l_id,): Fraction(1)}
                for p, c in pl.items():
                    val[p] = val.get(p, Fraction(0)) - c / (2 * mu)
                W1 = substitute(Q, W1, {l_id: val}, cap)
                w3 = higher(W1)
                changed = True
        if not changed:
            converged = True
        else:
            rounds += 1

    deleted_ids = {a for a, _ in pairs} | {b for _, b in pairs} | {l for l, _ in squares}
    new_arrows = tuple(a for a in Q.arrows if a.id not in deleted_ids)
    quiver1 = Quiver(Q.vertices, new_arrows, Q.grading)

    kept: Dict[CyclicWord, Fraction] = {}
    residual_lengths: List[int] = []
    for w, c in W1.terms.items():
        touched = any(aid in deleted_ids for aid in w)
        if not touched:
            kept[w] = c
        elif len(w) > 2:
            residual_lengths.append(len(w))

    exact = W1.exact and not residual_lengths
    h = qp.faithful_horizon
    if not W1.exact and qp.potential.exact:
        h = cap if h is None else min(h, cap)
    if residual_lengths:
        bound = min(residual_lengths) - 1
        h = bound if h is None else min(h, bound)
    pot1 = Potential(kept, cap, exact and qp.potential.exact)
    if h is not None and cap is not None:
        h = min(h, cap)
    report = MutationReport(
        trivial_blocks=tuple(blocks),
        substitution_rounds=rounds,
        arrows_deleted=tuple(sorted(deleted_ids)),
        exact=pot1.exact,
    )
    return QPState(quiver1, pot1, h), report


def mutate(qp: QPState, i: int, *, round_cap: int = REDUCE_ROUND_CAP) -> Tuple[QPState, MutationReport]:
    """Mutation proper: premutation followed by reduction, reports merged."""
    mid, rep_pre = premutate(qp, i)
    out, rep_red = reduce(mid, round_cap=round_cap)
    report = MutationReport(
        vertex=i,
        arrows_added=rep_pre.arrows_added,
        arrows_reversed=rep_pre.arrows_reversed,
        trivial_blocks=rep_red.trivial_blocks,
        substitution_rounds=rep_red.substitution_rounds,
        arrows_deleted=rep_red.arrows_deleted,
        exact=rep_red.exact,
    )
    return out, report


# ---------------------------------------------------------------------------
# degree obstruction


def _max_matching(
    side_a: Sequence[Arrow], side_b: Sequence[Arrow], r: Degree
) -> List[Tuple[int, int]]:
    """Maximum matching of opposite arrows with degree sum r (augmenting
    paths; the blocks are tiny)."""
    match_b: Dict[int, int] = {}

    def ok(a: Arrow, b: Arrow) -> bool:
        return add_degrees(a.degree, b.degree) == r

    def augment(ai: int, seen: set) -> bool:
        for bi, b in enumerate(side_b):
            if bi not in seen and ok(side_a[ai], b):
                seen.add(bi)
                if bi not in match_b or augment(match_b[bi], seen):
                    match_b[bi] = ai
                    return True
        return False

    for ai in range(len(side_a)):
        augment(ai, set())
    return sorted((ai, bi) for bi, ai in match_b.items())


def degree_obstruction(qp: QPState) -> Optional[ObstructionCertificate]:
    """Certificate that the reduced quiver keeps a two-cycle, or None.

    Absence of a certificate carries no information; the test is
    one-directional.
    """
    r = qp.quiver.grading.potential_degree
    if qp.potential.terms:
        hom = is_homogeneous(qp)
        if hom is None:
            raise QPError("degree obstruction needs a homogeneous potential")
        if hom != r:
            raise QPError(
                f"potential degree {hom} differs from the grading's {r}"
            )
    Q = qp.quiver
    seen_pairs = sorted(
        {
            (min(a.source, a.target), max(a.source, a.target))
            for a in Q.arrows
            if a.source != a.target
            and any(
                b.source == a.target and b.target == a.source for b in Q.arrows
            )
        }
    )
    for (u, v) in seen_pairs:
        side_a = sorted(
            (a for a in Q.arrows if (a.source, a.target) == (u, v)), key=lambda a: a.id
        )
        side_b = sorted(
            (a for a in Q.arrows if (a.source, a.target) == (v, u)), key=lambda a: a.id
        )
        matching = _max_matching(side_a, side_b, r)
        rest_a = [a for k, a in enumerate(side_a) if k not in {m[0] for m in matching}]
        rest_b = [b for k, b in enumerate(side_b) if k not in {m[1] for m in matching}]
        if rest_a and rest_b:
            a, b = rest_a[0], rest_b[0]
            s = add_degrees(a.degree, b.degree)
            assert s != r, "matchable pair left unmatched"
            return ObstructionCertificate(
                (u, v),
                (a.id, b.id),
                (a.degree, b.degree),
                s,
                r,
                tuple(
                    (side_a[ai].id, side_b[bi].id) for ai, bi in matching
                ),
            )
    return None


def gauge_shift(quiver: Quiver, i: int) -> Quiver:
    """Regrade by adding the potential degree to arrows leaving i and
    subtracting it from arrows entering i (loops at i unchanged)."""
    r = quiver.grading.potential_degree
    arrows = []
    for a in quiver.arrows:
        d = a.degree
        if a.source == i and a.target != i:
            d = add_degrees(d, r)
        elif a.target == i and a.source != i:
            d = sub_degrees(d, r)
        arrows.append(Arrow(a.id, a.name, a.source, a.target, d))
    return Quiver(quiver.vertices, tuple(arrows), quiver.grading)
