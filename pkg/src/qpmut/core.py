"""Exact symbolic core: graded quivers, paths, cyclic words and potentials.

Everything is immutable after construction and coefficients are exact
rationals, so values can be shared freely between threads.  Paths are plain
tuples of arrow ids in traversal order (the first arrow is traversed first);
cyclic words are closed paths stored in their lexicographically minimal
rotation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

Degree = Tuple[int, ...]
Path = Tuple[int, ...]
CyclicWord = Tuple[int, ...]
PathSum = Dict[Path, Fraction]

DEFAULT_LENGTH_CAP = 16


class QPError(ValueError):
    """Structurally invalid quiver/potential data or operation."""


@dataclass(frozen=True)
class Vertex:
    id: int
    label: str = ""

    def __post_init__(self):
        if self.id < 0:
            raise QPError(f"vertex id must be nonnegative, got {self.id}")


@dataclass(frozen=True)
class Arrow:
    id: int
    name: str
    source: int
    target: int
    degree: Degree = ()


@dataclass(frozen=True)
class Grading:
    """Free abelian grading group Z^rank with the distinguished degree of
    homogeneous potentials.  rank == 0 models ungraded quivers."""

    rank: int = 0
    potential_degree: Degree = ()

    def __post_init__(self):
        if self.rank < 0:
            raise QPError("grading rank must be >= 0")
        if len(self.potential_degree) != self.rank:
            raise QPError("potential_degree length must equal grading rank")

    @property
    def zero(self) -> Degree:
        return (0,) * self.rank


def add_degrees(a: Degree, b: Degree) -> Degree:
    return tuple(x + y for x, y in zip(a, b))


def sub_degrees(a: Degree, b: Degree) -> Degree:
    return tuple(x - y for x, y in zip(a, b))


@dataclass(frozen=True)
class Quiver:
    vertices: Tuple[Vertex, ...]
    arrows: Tuple[Arrow, ...]
    grading: Grading = Grading()

    def __post_init__(self):
        vids = [v.id for v in self.vertices]
        if len(set(vids)) != len(vids):
            raise QPError("duplicate vertex ids")
        aids = [a.id for a in self.arrows]
        if len(set(aids)) != len(aids):
            raise QPError("duplicate arrow ids")
        vset = set(vids)
        for a in self.arrows:
            if a.source not in vset or a.target not in vset:
                raise QPError(f"arrow {a.name!r} has a dangling endpoint")
            if len(a.degree) != self.grading.rank:
                raise QPError(
                    f"arrow {a.name!r} degree length {len(a.degree)} "
                    f"!= grading rank {self.grading.rank}"
                )

    @cached_property
    def arrow_by_id(self) -> Mapping[int, Arrow]:
        return {a.id: a for a in self.arrows}

    @cached_property
    def vertex_by_id(self) -> Mapping[int, Vertex]:
        return {v.id: v for v in self.vertices}

    def arrow(self, aid: int) -> Arrow:
        try:
            return self.arrow_by_id[aid]
        except KeyError:
            raise QPError(f"unknown arrow id {aid}") from None

    def out_arrows(self, v: int) -> Tuple[Arrow, ...]:
        return tuple(a for a in self.arrows if a.source == v)

    def in_arrows(self, v: int) -> Tuple[Arrow, ...]:
        return tuple(a for a in self.arrows if a.target == v)

    def loops(self) -> Tuple[Arrow, ...]:
        return tuple(a for a in self.arrows if a.source == a.target)

    def two_cycles(self) -> Tuple[Tuple[Arrow, Arrow], ...]:
        """All unordered pairs (a: u->v, b: v->u) with u != v."""
        pairs = []
        for a, b in itertools.combinations(self.arrows, 2):
            if a.source != a.target and a.source == b.target and a.target == b.source:
                pairs.append((a, b))
        return tuple(pairs)

    def path_endpoints(self, p: Path) -> Tuple[int, int]:
        """(source, target) of a nonempty composable path; raises otherwise."""
        if not p:
            raise QPError("empty path has no endpoints")
        arrows = [self.arrow(aid) for aid in p]
        for x, y in zip(arrows, arrows[1:]):
            if x.target != y.source:
                raise QPError(f"path not composable at {x.name!r} -> {y.name!r}")
        return arrows[0].source, arrows[-1].target


def canonical_cycle(p: Path) -> CyclicWord:
    """Minimal rotation of a closed path; all rotations map to the same word.

    Closedness is the caller's responsibility when no quiver is at hand;
    use :func:`validate_cycle` to check it against a quiver.
    """
    if not p:
        raise QPError("not a cycle: empty path")
    return min(p[j:] + p[:j] for j in range(len(p)))


def validate_cycle(quiver: Quiver, p: Path) -> None:
    src, tgt = quiver.path_endpoints(p)
    if src != tgt:
        raise QPError(f"not a cycle: runs {src} -> {tgt}")


def path_degree(quiver: Quiver, p: Path) -> Degree:
    """Componentwise sum of arrow degrees; the empty sum is the zero vector."""
    d = quiver.grading.zero
    for aid in p:
        d = add_degrees(d, quiver.arrow(aid).degree)
    return d


@dataclass(frozen=True)
class Potential:
    """Finite rational combination of cyclic words of length >= 2.

    ``length_cap`` bounds the stored word length (None = unbounded); ``exact``
    is cleared as soon as any truncation discards terms.  The terms mapping is
    never mutated after construction.
    """

    terms: Mapping[CyclicWord, Fraction] = field(default_factory=dict)
    length_cap: Optional[int] = DEFAULT_LENGTH_CAP
    exact: bool = True

    def __post_init__(self):
        for w, c in self.terms.items():
            if len(w) < 2:
                raise QPError(f"potential word {w} shorter than two arrows")
            if canonical_cycle(w) != w:
                raise QPError(f"potential word {w} not in canonical rotation")
            if c == 0:
                raise QPError("zero coefficient stored in potential")
            if self.length_cap is not None and len(w) > self.length_cap:
                raise QPError(f"potential word {w} exceeds length cap")
        if self.length_cap is not None and self.length_cap < 2:
            raise QPError("length cap must allow words of length two")

    def is_zero(self) -> bool:
        return not self.terms

    def words_of_length(self, n: int) -> Dict[CyclicWord, Fraction]:
        return {w: c for w, c in self.terms.items() if len(w) == n}

    def words_longer_than(self, n: int) -> Dict[CyclicWord, Fraction]:
        return {w: c for w, c in self.terms.items() if len(w) > n}


def make_potential(
    quiver: Quiver,
    items: Iterable[Tuple[Path, Fraction]],
    length_cap: Optional[int] = DEFAULT_LENGTH_CAP,
    exact: bool = True,
) -> Potential:
    """Canonicalize, validate against the quiver, and combine coefficients.

    Words beyond the cap are discarded and the exact flag cleared.
    """
    acc: Dict[CyclicWord, Fraction] = {}
    truncated = False
    for p, c in items:
        validate_cycle(quiver, p)
        if len(p) < 2:
            raise QPError("potential words must have length >= 2")
        if length_cap is not None and len(p) > length_cap:
            truncated = True
            continue
        w = canonical_cycle(p)
        acc[w] = acc.get(w, Fraction(0)) + Fraction(c)
    acc = {w: c for w, c in acc.items() if c != 0}
    return Potential(acc, length_cap, exact and not truncated)


@dataclass(frozen=True)
class QPState:
    """A quiver together with its potential and exactness metadata.

    ``faithful_horizon`` is the word length up to which the stored potential
    is guaranteed complete and exact (None = all lengths).
    """

    quiver: Quiver
    potential: Potential
    faithful_horizon: Optional[int] = None

    def __post_init__(self):
        for w in self.potential.terms:
            for aid in w:
                if aid not in self.quiver.arrow_by_id:
                    raise QPError(f"potential references unknown arrow {aid}")
        cap = self.potential.length_cap
        h = self.faithful_horizon
        if h is not None and cap is not None and h > cap:
            raise QPError("faithful horizon exceeds the length cap")

    @property
    def exact(self) -> bool:
        return self.potential.exact and self.faithful_horizon is None


def is_homogeneous(qp_or_quiver, potential: Optional[Potential] = None) -> Optional[Degree]:
    """Common degree of all potential terms, or None if they differ or W = 0.

    A zero potential is vacuously homogeneous with undetermined degree and
    also reports None.  Accepts a QPState or a (quiver, potential) pair.
    """
    if potential is None:
        quiver, potential = qp_or_quiver.quiver, qp_or_quiver.potential
    else:
        quiver = qp_or_quiver
    common: Optional[Degree] = None
    for w in potential.terms:
        d = path_degree(quiver, w)
        if common is None:
            common = d
        elif common != d:
            return None
    return common


def cyclic_derivative(potential: Potential, arrow_id: int) -> PathSum:
    """Sum over occurrences of the arrow of the word read cyclically from the
    deleted occurrence; linear in the potential."""
    out: PathSum = {}
    for w, c in potential.terms.items():
        for j, aid in enumerate(w):
            if aid == arrow_id:
                p = w[j + 1 :] + w[:j]
                out[p] = out.get(p, Fraction(0)) + c
    return {p: c for p, c in out.items() if c != 0}


def substitute(
    quiver: Quiver,
    potential: Potential,
    sigma: Mapping[int, PathSum],
    length_cap: Optional[int] = None,
) -> Potential:
    """Expand each cyclic word multilinearly under arrow -> path-sum rules.

    Every path substituted for an arrow must share that arrow's endpoints.
    Words exceeding the cap are discarded and the exact flag cleared.
    """
    for aid, ps in sigma.items():
        a = quiver.arrow(aid)
        for p in ps:
            src, tgt = quiver.path_endpoints(p)
            if (src, tgt) != (a.source, a.target):
                raise QPError(
                    f"substitution for {a.name!r} contains a path "
                    f"{src} -> {tgt}, expected {a.source} -> {a.target}"
                )
    cap = potential.length_cap if length_cap is None else length_cap
    acc: Dict[CyclicWord, Fraction] = {}
    truncated = False
    for w, c in potential.terms.items():
        factors = [sigma.get(aid, {(aid,): Fraction(1)}) for aid in w]
        for combo in itertools.product(*(f.items() for f in factors)):
            path: Path = ()
            coeff = c
            for p, k in combo:
                path = path + p
                coeff = coeff * k
            if cap is not None and len(path) > cap:
                truncated = True
                continue
            cw = canonical_cycle(path)
            acc[cw] = acc.get(cw, Fraction(0)) + coeff
    acc = {w: k for w, k in acc.items() if k != 0}
    return Potential(acc, cap, potential.exact and not truncated)


def with_length_cap(qp: QPState, cap: Optional[int]) -> QPState:
    """Re-cap a state.  Raising the cap keeps exactness; lowering it discards
    long words and clears the exact flag."""
    pot = qp.potential
    if cap == pot.length_cap:
        return qp
    terms = dict(pot.terms)
    exact = pot.exact
    h = qp.faithful_horizon
    if cap is not None:
        dropped = [w for w in terms if len(w) > cap]
        if dropped:
            for w in dropped:
                del terms[w]
            exact = False
            h = cap if h is None else min(h, cap)
        elif pot.length_cap is None or cap < pot.length_cap:
            # nothing stored beyond the new cap, but completeness above it
            # is no longer tracked
            h = cap if h is None else min(h, cap)
    return QPState(qp.quiver, Potential(terms, cap, exact), h)


def length_graded(qp: QPState) -> QPState:
    """Replace the grading by the path-length grading (every arrow degree 1).

    The potential degree is the common term length; requires a length-
    homogeneous potential.
    """
    lengths = {len(w) for w in qp.potential.terms}
    if len(lengths) > 1:
        raise QPError("potential terms have mixed lengths; no length grading")
    r = lengths.pop() if lengths else 0
    grading = Grading(1, (r,))
    arrows = tuple(
        Arrow(a.id, a.name, a.source, a.target, (1,)) for a in qp.quiver.arrows
    )
    quiver = Quiver(qp.quiver.vertices, arrows, grading)
    return QPState(quiver, qp.potential, qp.faithful_horizon)


def arrow_multiset(quiver: Quiver) -> Tuple[Tuple[int, int, Degree], ...]:
    """Sorted multiset of (source, target, degree); the quiver-shape
    fingerprint used by isomorphism-over-identity checks."""
    return tuple(sorted((a.source, a.target, a.degree) for a in quiver.arrows))
