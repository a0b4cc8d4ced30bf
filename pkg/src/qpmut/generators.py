"""Constructors for the built-in example families.

Cyclic McKay quivers carry the rank-3 monomial grading (each generator
contributes one unit in its own coordinate, potential degree (1,1,1)).
Deformed preprojective states live on the double of an extended Dynkin
diagram plus one loop per vertex, graded with arrows in degree 1 and loops in
degree 2, potential degree 4.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (
    Arrow,
    DEFAULT_LENGTH_CAP,
    Grading,
    Potential,
    QPError,
    QPState,
    Quiver,
    Vertex,
    canonical_cycle,
    make_potential,
)
from . import mutation


@dataclass(frozen=True)
class McKaySpec:
    n: int
    weights: Tuple[int, int, int]

    def __post_init__(self):
        if self.n < 2:
            raise QPError("modulus must be >= 2")
        w = tuple(x % self.n for x in self.weights)
        object.__setattr__(self, "weights", w)
        if sum(w) % self.n != 0:
            raise QPError(f"weights {w} do not sum to 0 mod {self.n}")


def mckay_cyclic(spec: McKaySpec, length_cap: Optional[int] = DEFAULT_LENGTH_CAP) -> QPState:
    """McKay quiver of a cyclic group acting with three weights, with the
    signed sum of index-distinct three-cycles as potential."""
    n, w = spec.n, spec.weights
    grading = Grading(3, (1, 1, 1))
    vertices = tuple(Vertex(l, str(l)) for l in range(n))
    unit = {1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1)}
    arrows: List[Arrow] = []
    ids: Dict[Tuple[int, int], int] = {}
    aid = 0
    for l in range(n):
        for k in (1, 2, 3):
            arrows.append(Arrow(aid, f"x{k}@{l}", l, (l + w[k - 1]) % n, unit[k]))
            ids[(k, l)] = aid
            aid += 1
    quiver = Quiver(vertices, tuple(arrows), grading)

    positive = {(1, 2, 3), (2, 3, 1), (3, 1, 2)}
    terms: Dict[Tuple[int, ...], Fraction] = {}
    for l in range(n):
        for perm in itertools.permutations((1, 2, 3)):
            k1, k2, k3 = perm
            v1 = (l + w[k1 - 1]) % n
            v2 = (v1 + w[k2 - 1]) % n
            word = canonical_cycle((ids[(k1, l)], ids[(k2, v1)], ids[(k3, v2)]))
            sign = Fraction(1 if perm in positive else -1)
            if word in terms:
                assert terms[word] == sign
            else:
                terms[word] = sign
    pot = make_potential(quiver, terms.items(), length_cap)
    return QPState(quiver, pot)


def gcd_condition(spec: McKaySpec) -> bool:
    """True iff every weight is coprime to the modulus."""
    return all(math.gcd(a, spec.n) == 1 for a in spec.weights)


# ---------------------------------------------------------------------------
# extended Dynkin data (standard tables; vertex 0 is the extending vertex)


def _dynkin_data(label: str) -> Tuple[int, Tuple[Tuple[int, int], ...], Tuple[int, ...]]:
    """(vertex count, edges, delta) for an extended Dynkin label like A~2."""
    fam = label[:1].upper()
    if len(label) < 3 or label[1] != "~" or not label[2:].isdigit():
        raise QPError(f"unknown extended Dynkin label {label!r}")
    n = int(label[2:])
    if fam == "A":
        # cycle 0-1-...-n-0
        if n < 1:
            raise QPError("A~n needs n >= 1")
        m = n + 1
        edges = tuple((i, (i + 1) % m) for i in range(m))
        delta = (1,) * m
        return m, edges, delta
    if fam == "D":
        # forks 0,1 at one end of the chain 2-...-(n-2), forks n-1,n at the other
        if n < 4:
            raise QPError("D~n needs n >= 4")
        edges = [(0, 2), (1, 2)]
        edges += [(j, j + 1) for j in range(2, n - 2)]
        edges += [(n - 2, n - 1), (n - 2, n)]
        delta = (1, 1) + (2,) * (n - 3) + (1, 1)
        return n + 1, tuple(edges), delta
    if fam == "E":
        if n == 6:
            edges = ((1, 2), (2, 3), (3, 4), (4, 5), (3, 6), (6, 0))
            delta = (1, 1, 2, 3, 2, 1, 2)
            return 7, edges, delta
        if n == 7:
            edges = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (3, 7))
            delta = (1, 2, 3, 4, 3, 2, 1, 2)
            return 8, edges, delta
        if n == 8:
            edges = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (5, 8))
            delta = (1, 2, 3, 4, 5, 6, 4, 2, 3)
            return 9, edges, delta
    raise QPError(f"unknown extended Dynkin label {label!r}")


@dataclass(frozen=True)
class PreprojectiveSpec:
    type_label: str
    lam: Tuple[Fraction, ...]

    def __post_init__(self):
        m, _, _ = _dynkin_data(self.type_label)
        lam = tuple(Fraction(x) for x in self.lam)
        if len(lam) != m:
            raise QPError(
                f"{self.type_label} has {m} vertices but lambda has {len(lam)} entries"
            )
        object.__setattr__(self, "lam", lam)

    @property
    def delta(self) -> Tuple[int, ...]:
        return _dynkin_data(self.type_label)[2]


def deformed_preprojective(
    spec: PreprojectiveSpec, length_cap: Optional[int] = DEFAULT_LENGTH_CAP
) -> QPState:
    """Double quiver plus one loop per vertex, with the central-extension
    potential (sum of loops) * (sum of doubled-arrow commutators) minus half
    the weighted loop squares."""
    m, edges, _ = _dynkin_data(spec.type_label)
    grading = Grading(1, (4,))
    vertices = tuple(Vertex(i, str(i)) for i in range(m))
    arrows: List[Arrow] = []
    for e, (u, v) in enumerate(edges):
        arrows.append(Arrow(2 * e, f"a{e}", u, v, (1,)))
        arrows.append(Arrow(2 * e + 1, f"a{e}*", v, u, (1,)))
    loop_of: Dict[int, int] = {}
    aid = 2 * len(edges)
    for i in range(m):
        arrows.append(Arrow(aid, f"t{i}", i, i, (2,)))
        loop_of[i] = aid
        aid += 1
    quiver = Quiver(vertices, tuple(arrows), grading)

    items: List[Tuple[Tuple[int, ...], Fraction]] = []
    for e, (u, v) in enumerate(edges):
        a, astar = 2 * e, 2 * e + 1
        items.append(((loop_of[u], a, astar), Fraction(1)))
        items.append(((loop_of[v], astar, a), Fraction(-1)))
    for i in range(m):
        if spec.lam[i] != 0:
            items.append(((loop_of[i], loop_of[i]), -spec.lam[i] / 2))
    pot = make_potential(quiver, items, length_cap)
    return QPState(quiver, pot)


def eliminate_loops(qp: QPState) -> QPState:
    """Remove the loops of a deformed preprojective state by reduction.

    Requires every loop to carry a nonzero square term (all weights nonzero);
    checks that the result is loop-free with all words of length four.
    """
    loops = qp.quiver.loops()
    if not loops:
        raise QPError("no loops to eliminate")
    for l in loops:
        if (l.id, l.id) not in qp.potential.terms:
            raise QPError(f"loops not removable: {l.name} has no square term")
    out, _ = mutation.reduce(qp)
    if out.quiver.loops():
        raise QPError("reduction left a loop behind")
    bad = [w for w in out.potential.terms if len(w) != 4]
    if bad:
        raise QPError(f"loop elimination left words of length != 4: {bad[:3]}")
    return out


# ---------------------------------------------------------------------------
# lambda validation via the finite root system of the Dynkin part


def _dynkin_adjacency(label: str) -> Tuple[Tuple[int, ...], Dict[int, List[int]]]:
    m, edges, _ = _dynkin_data(label)
    verts = tuple(i for i in range(m) if i != 0)
    adj: Dict[int, List[int]] = {i: [] for i in verts}
    for (u, v) in edges:
        if u != 0 and v != 0:
            adj[u].append(v)
            adj[v].append(u)
    return verts, adj


def positive_roots(label: str) -> List[Dict[int, int]]:
    """Positive roots of the Dynkin part (extending vertex removed), found by
    closing the simple roots under simple reflections."""
    verts, adj = _dynkin_adjacency(label)
    simple = [{i: 1} for i in verts]

    def reflect(alpha: Dict[int, int], i: int) -> Dict[int, int]:
        out = dict(alpha)
        out[i] = -alpha.get(i, 0) + sum(alpha.get(j, 0) for j in adj[i])
        return {k: v for k, v in out.items() if v != 0}

    seen = {tuple(sorted(a.items())) for a in simple}
    queue = list(simple)
    roots = list(simple)
    while queue:
        alpha = queue.pop()
        for i in verts:
            beta = reflect(alpha, i)
            key = tuple(sorted(beta.items()))
            if beta and key not in seen:
                seen.add(key)
                roots.append(beta)
                queue.append(beta)
    pos = [a for a in roots if all(v > 0 for v in a.values())]
    pos.sort(key=lambda a: (sum(a.values()), sorted(a.items())))
    return pos


@dataclass(frozen=True)
class LambdaReport:
    type_label: str
    delta_dot_lambda: Fraction
    delta_orthogonal: bool
    zero_weights: Tuple[int, ...]
    failing_roots: Tuple[Tuple[Tuple[Tuple[int, int], ...], Fraction], ...]
    roots_checked: int

    @property
    def ok(self) -> bool:
        return self.delta_orthogonal and not self.failing_roots and not self.zero_weights

    def to_json(self) -> dict:
        return {
            "type": self.type_label,
            "delta_dot_lambda": str(self.delta_dot_lambda),
            "delta_orthogonal": self.delta_orthogonal,
            "zero_weights": list(self.zero_weights),
            "failing_roots": [
                {"root": {str(k): v for k, v in root}, "value": str(val)}
                for root, val in self.failing_roots
            ],
            "roots_checked": self.roots_checked,
            "ok": self.ok,
        }


def validate_lambda(spec: PreprojectiveSpec) -> LambdaReport:
    """Check the two arithmetic conditions on the weights: orthogonality to
    the imaginary root, and nonvanishing against every Dynkin root."""
    delta = spec.delta
    dot = sum(Fraction(d) * l for d, l in zip(delta, spec.lam))
    zeros = tuple(i for i, l in enumerate(spec.lam) if l == 0)
    failing = []
    roots = positive_roots(spec.type_label)
    for alpha in roots:
        val = sum(Fraction(c) * spec.lam[i] for i, c in alpha.items())
        if val == 0:
            failing.append((tuple(sorted(alpha.items())), val))
    return LambdaReport(
        spec.type_label, dot, dot == 0, zeros, tuple(failing), len(roots)
    )


# ---------------------------------------------------------------------------
# generator spec strings (CLI-facing)


def parse_spec_object(text: str):
    """Parse a spec string into its McKaySpec or PreprojectiveSpec."""
    kind, _, rest = text.partition(":")
    fields: Dict[str, List[str]] = {}
    current = None
    for tok in rest.split(","):
        if "=" in tok:
            key, _, val = tok.partition("=")
            current = key.strip()
            fields[current] = [val.strip()]
        elif current is not None:
            fields[current].append(tok.strip())
        else:
            raise QPError(f"cannot parse spec string {text!r}")
    if kind == "mckay":
        try:
            n = int(fields["n"][0])
            weights = tuple(int(x) for x in fields["w"])
        except (KeyError, ValueError, IndexError):
            raise QPError(f"mckay spec needs n=<int>,w=<a1>,<a2>,<a3>: {text!r}") from None
        if len(weights) != 3:
            raise QPError("mckay spec needs exactly three weights")
        return McKaySpec(n, weights)
    if kind == "preproj":
        try:
            label = fields["type"][0]
            lam = tuple(Fraction(x) for x in fields["lambda"])
        except (KeyError, ValueError, ZeroDivisionError, IndexError):
            raise QPError(
                f"preproj spec needs type=<label>,lambda=<l0>,...: {text!r}"
            ) from None
        return PreprojectiveSpec(label, lam)
    raise QPError(f"unknown generator kind {kind!r}")


def parse_spec(text: str, length_cap: Optional[int] = DEFAULT_LENGTH_CAP) -> QPState:
    """Build a state from a spec string like ``mckay:n=5,w=1,2,2`` or
    ``preproj:type=A~2,lambda=1,1,-2``."""
    spec = parse_spec_object(text)
    if isinstance(spec, McKaySpec):
        return mckay_cyclic(spec, length_cap)
    return deformed_preprojective(spec, length_cap)


def is_spec_string(text: str) -> bool:
    return text.startswith("mckay:") or text.startswith("preproj:")
