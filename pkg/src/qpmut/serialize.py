"""QP interchange format: exact-fraction JSON with canonical cycle rotations.

The emitted key order is fixed so every serialization is byte-stable.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, Optional

from .core import (
    Arrow,
    Grading,
    Potential,
    QPError,
    QPState,
    Quiver,
    Vertex,
    canonical_cycle,
    validate_cycle,
)


def frac_to_str(c: Fraction) -> str:
    return str(c)


def frac_from_str(s: str) -> Fraction:
    try:
        c = Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise QPError(f"bad coefficient {s!r}: {e}") from None
    return c


def qp_to_json(qp: QPState) -> Dict[str, Any]:
    g = qp.quiver.grading
    doc: Dict[str, Any] = {
        "grading": {"rank": g.rank, "potential_degree": list(g.potential_degree)},
        "vertices": [{"id": v.id, "label": v.label} for v in qp.quiver.vertices],
        "arrows": [
            {
                "id": a.id,
                "name": a.name,
                "source": a.source,
                "target": a.target,
                "degree": list(a.degree),
            }
            for a in qp.quiver.arrows
        ],
        "potential": [
            {"coeff": frac_to_str(c), "cycle": list(w)}
            for w, c in sorted(qp.potential.terms.items())
        ],
        "length_cap": qp.potential.length_cap,
        "exact": qp.potential.exact,
    }
    if qp.faithful_horizon is not None:
        doc["faithful_horizon"] = qp.faithful_horizon
    return doc


def qp_from_json(doc: Dict[str, Any]) -> QPState:
    try:
        g = doc["grading"]
        grading = Grading(int(g["rank"]), tuple(int(x) for x in g["potential_degree"]))
        vertices = tuple(Vertex(int(v["id"]), str(v.get("label", ""))) for v in doc["vertices"])
        arrows = tuple(
            Arrow(
                int(a["id"]),
                str(a["name"]),
                int(a["source"]),
                int(a["target"]),
                tuple(int(x) for x in a["degree"]),
            )
            for a in doc["arrows"]
        )
    except (KeyError, TypeError) as e:
        raise QPError(f"malformed QP document: {e}") from None
    quiver = Quiver(vertices, arrows, grading)
    cap = doc.get("length_cap")
    cap = None if cap is None else int(cap)
    terms = {}
    for entry in doc.get("potential", []):
        cycle = tuple(int(x) for x in entry["cycle"])
        validate_cycle(quiver, cycle)
        w = canonical_cycle(cycle)
        c = frac_from_str(str(entry["coeff"]))
        if c == 0:
            raise QPError("zero coefficient in potential entry")
        if w in terms:
            raise QPError(f"duplicate potential cycle {list(w)}")
        terms[w] = c
    exact = bool(doc.get("exact", True))
    h = doc.get("faithful_horizon")
    if h is None and not exact:
        h = cap
    potential = Potential(terms, cap, exact)
    return QPState(quiver, potential, None if h is None else int(h))


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def loads_qp(text: str) -> QPState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise QPError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise QPError("QP document must be a JSON object")
    return qp_from_json(doc)
