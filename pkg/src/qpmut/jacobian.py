"""Degree-wise dimensions of the graded Jacobian algebra and its trace space.

All computations are exact: under a positive grading every degree component
of the path algebra is finite dimensional, and the degree-d part of the
relation ideal is spanned by the finitely many products path * derivative *
path landing in that degree.  Rank extraction is exact sparse Gaussian
elimination over the rationals; degrees are independent of one another.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .core import (
    Degree,
    Path,
    QPError,
    QPState,
    Quiver,
    add_degrees,
    canonical_cycle,
    cyclic_derivative,
    is_homogeneous,
    path_degree,
)


@dataclass(frozen=True)
class DimensionTable:
    """Map degree vector -> dimension, with the enumeration bound and the
    bound up to which entries are guaranteed exact."""

    dims: Mapping[Degree, int]
    max_total: int
    exact_up_to: int

    def total(self, t: int) -> int:
        return sum(v for d, v in self.dims.items() if sum(d) == t)

    def to_json(self) -> dict:
        return {
            "dims": [
                {"degree": list(d), "dim": v} for d, v in sorted(self.dims.items())
            ],
            "max_total": self.max_total,
            "exact_up_to": self.exact_up_to,
        }

    def to_text(self) -> str:
        rows = [("degree", "dim")] + [
            (",".join(map(str, d)), str(v)) for d, v in sorted(self.dims.items())
        ]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{a.ljust(width)}  {b}" for a, b in rows)


def _check_positive(quiver: Quiver) -> None:
    for a in quiver.arrows:
        if sum(a.degree) <= 0:
            raise QPError(
                "degree-wise finiteness not guaranteed: arrow "
                f"{a.name!r} has non-positive total degree {sum(a.degree)}"
            )


def _homogeneous_degree(qp: QPState) -> Optional[Degree]:
    if qp.potential.is_zero():
        return None
    d = is_homogeneous(qp)
    if d is None:
        raise QPError("graded dimensions need a homogeneous potential")
    return d


class _PathIndex:
    """All paths of total degree <= bound with endpoint/degree lookups.
    Length-zero paths (vertex idempotents) are included with degree zero."""

    def __init__(self, quiver: Quiver, bound: int):
        zero = quiver.grading.zero
        self.by_deg: Dict[Degree, List[Tuple[Path, int, int]]] = {}
        # (vertex, degree) -> paths ending there / starting there
        self.ending: Dict[Tuple[int, Degree], List[Tuple[Path, int]]] = {}
        self.starting: Dict[Tuple[int, Degree], List[Tuple[Path, int]]] = {}
        self.ending_degs: Dict[int, List[Degree]] = {}
        frontier = [((), v.id, v.id, zero) for v in quiver.vertices]
        out_by_src: Dict[int, List] = {}
        for a in quiver.arrows:
            out_by_src.setdefault(a.source, []).append(a)
        while frontier:
            nxt = []
            for (p, src, tgt, deg) in frontier:
                self._add(p, src, tgt, deg)
                for a in out_by_src.get(tgt, ()):
                    d = add_degrees(deg, a.degree)
                    if sum(d) <= bound:
                        nxt.append((p + (a.id,), src, a.target, d))
            frontier = nxt

    def _add(self, p: Path, src: int, tgt: int, deg: Degree) -> None:
        self.by_deg.setdefault(deg, []).append((p, src, tgt))
        self.ending.setdefault((tgt, deg), []).append((p, src))
        self.starting.setdefault((src, deg), []).append((p, tgt))
        degs = self.ending_degs.setdefault(tgt, [])
        if deg not in degs:
            degs.append(deg)


def _sparse_rank(rows: Sequence[Dict[int, Fraction]]) -> int:
    """Rank of sparse rational rows by elimination against stored pivots."""
    pivots: Dict[int, Dict[int, Fraction]] = {}
    rank = 0
    for row in rows:
        row = dict(row)
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                c = row[lead]
                row = {k: v / c for k, v in row.items()}
                pivots[lead] = row
                rank += 1
                break
            f = row[lead]
            for k, v in piv.items():
                nv = row.get(k, Fraction(0)) - f * v
                if nv == 0:
                    row.pop(k, None)
                else:
                    row[k] = nv
    return rank


def _derivatives(qp: QPState) -> List[Tuple[int, int, Degree, Dict[Path, Fraction]]]:
    out = []
    for a in qp.quiver.arrows:
        rho = cyclic_derivative(qp.potential, a.id)
        if rho:
            deg = path_degree(qp.quiver, next(iter(rho)))
            out.append((a.target, a.source, deg, rho))
    return out


def _relation_products(
    index: _PathIndex,
    derivs: Sequence[Tuple[int, int, Degree, Dict[Path, Fraction]]],
    d: Degree,
    closed_only: bool,
) -> List[Dict[Path, Fraction]]:
    """Expansions of all degree-d products u * derivative * v."""
    rows: List[Dict[Path, Fraction]] = []
    for (tgt_a, src_a, rho_deg, rho) in derivs:
        rest = tuple(x - y for x, y in zip(d, rho_deg))
        if any(x < 0 for x in rest):
            continue
        for du in index.ending_degs.get(tgt_a, ()):
            if any(x > y for x, y in zip(du, rest)):
                continue
            dv = tuple(y - x for x, y in zip(du, rest))
            rights = index.starting.get((src_a, dv))
            if not rights:
                continue
            for (u, s_u) in index.ending[(tgt_a, du)]:
                for (v, t_v) in rights:
                    if closed_only and s_u != t_v:
                        continue
                    expansion: Dict[Path, Fraction] = {}
                    for p, c in rho.items():
                        full = u + p + v
                        expansion[full] = expansion.get(full, Fraction(0)) + c
                    rows.append(expansion)
    return rows


def _exact_bound(qp: QPState, bound: int) -> int:
    if qp.potential.exact:
        return bound
    # under a positive grading, a homogeneous potential's words are no longer
    # than its total degree; a horizon past that leaves nothing unknown
    h = qp.faithful_horizon
    max_len = sum(qp.quiver.grading.potential_degree)
    if h is not None and max_len >= 2 and h >= max_len:
        return bound
    return 0


def graded_dims(qp: QPState, bound: int) -> DimensionTable:
    """Per-degree dimension of the graded Jacobian algebra up to total degree
    ``bound``: path count minus the rank of the relation span."""
    _check_positive(qp.quiver)
    _homogeneous_degree(qp)  # raises for inhomogeneous nonzero potentials
    index = _PathIndex(qp.quiver, bound)
    derivs = _derivatives(qp)
    dims: Dict[Degree, int] = {}
    for d, basis in sorted(index.by_deg.items()):
        pos: Dict[Path, int] = {}
        block_of: Dict[Path, Tuple[int, int]] = {}
        counts: Dict[Tuple[int, int], int] = {}
        for p, s, t in basis:
            pos[p] = counts.get((s, t), 0)
            counts[(s, t)] = pos[p] + 1
            block_of[p] = (s, t)
        # products never mix (source, target) blocks; eliminate per block
        blocks: Dict[Tuple[int, int], List[Dict[int, Fraction]]] = {}
        for expansion in _relation_products(index, derivs, d, closed_only=False):
            expansion = {p: c for p, c in expansion.items() if c != 0}
            if not expansion:
                continue
            key = block_of[next(iter(expansion))]
            blocks.setdefault(key, []).append({pos[p]: c for p, c in expansion.items()})
        dim = len(basis)
        for blk in blocks.values():
            dim -= _sparse_rank(blk)
        dims[d] = dim
    return DimensionTable(dims, bound, _exact_bound(qp, bound))


def hh0_dims(qp: QPState, bound: int) -> DimensionTable:
    """Per-degree dimension of the trace space: closed paths modulo rotation
    differences modulo closed relation products."""
    _check_positive(qp.quiver)
    _homogeneous_degree(qp)  # raises for inhomogeneous nonzero potentials
    index = _PathIndex(qp.quiver, bound)
    derivs = _derivatives(qp)
    dims: Dict[Degree, int] = {}
    for d, basis in sorted(index.by_deg.items()):
        classes: Dict[object, int] = {}
        for p, s, t in basis:
            if s != t:
                continue
            key: object = canonical_cycle(p) if p else ("e", s)
            if key not in classes:
                classes[key] = len(classes)
        reduced_rows: List[Dict[int, Fraction]] = []
        for expansion in _relation_products(index, derivs, d, closed_only=True):
            row: Dict[int, Fraction] = {}
            for p, c in expansion.items():
                idx = classes[canonical_cycle(p)]
                nv = row.get(idx, Fraction(0)) + c
                if nv == 0:
                    row.pop(idx, None)
                else:
                    row[idx] = nv
            if row:
                reduced_rows.append(row)
        dims[d] = len(classes) - _sparse_rank(reduced_rows)
    return DimensionTable(dims, bound, _exact_bound(qp, bound))
