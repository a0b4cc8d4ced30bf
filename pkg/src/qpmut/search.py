"""Mutation-class search: canonical keys for isomorphism pruning and a
deterministic breadth-first exploration for loops and two-cycles.

Merging nodes only on exact equality up to relabeling is conservative: it can
reduce the amount of work but never hide a witness, since isomorphic states
mutate to isomorphic states.  Reports are assembled level by level in a fixed
order, so they are byte-identical for any worker count.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core import QPError, QPState, canonical_cycle
from .mutation import ObstructionCertificate, degree_obstruction, premutate, reduce
from .serialize import qp_to_json

# quadratic terms after premutation come from words of length <= 4, so a
# faithful horizon below 4 cannot certify the children's two-cycle status
MIN_EXPAND_HORIZON = 4


MAX_PARALLEL_CANDIDATES = 20000


def canonical_key(qp: QPState) -> str:
    """Label-independent key: equal for states related by any vertex-and-arrow
    relabeling preserving sources, targets, degrees and coefficients.

    Vertex orderings come from partition refinement plus individualization;
    parallel arrows that invariants cannot split are permuted exhaustively.
    The key is the lexicographically least serialization over all candidates.
    """
    Q = qp.quiver
    vids = sorted(v.id for v in Q.vertices)
    arrows = sorted(Q.arrows, key=lambda a: a.id)
    terms = qp.potential.terms

    # relabeling-invariant fingerprint of how an arrow meets the potential
    occ: Dict[int, Tuple] = {}
    for a in arrows:
        inc = sorted(
            (str(c), len(w), w.count(a.id)) for w, c in terms.items() if a.id in w
        )
        occ[a.id] = tuple(inc)

    def refine(cols: Dict[int, int]) -> Dict[int, int]:
        while True:
            sig = {}
            for v in vids:
                outs = sorted((a.degree, cols[a.target]) for a in arrows if a.source == v)
                ins = sorted((a.degree, cols[a.source]) for a in arrows if a.target == v)
                sig[v] = (cols[v], tuple(outs), tuple(ins))
            order = sorted(set(sig.values()))
            new = {v: order.index(sig[v]) for v in vids}
            if new == cols:
                return cols
            cols = new

    header = "|".join(
        [
            f"g:{Q.grading.rank}:{','.join(map(str, Q.grading.potential_degree))}",
            f"x:{int(qp.potential.exact)}:{qp.faithful_horizon}",
            f"V:{len(vids)}",
        ]
    )
    best: Optional[str] = None

    def serialize(vorder: Sequence[int]) -> None:
        nonlocal best
        vmap = {v: k for k, v in enumerate(vorder)}

        def arrow_key(a):
            return (vmap[a.source], vmap[a.target], a.degree, occ[a.id])

        keyed = sorted(arrows, key=arrow_key)
        groups: List[List[int]] = []
        start = 0
        for k in range(1, len(keyed) + 1):
            if k == len(keyed) or arrow_key(keyed[k]) != arrow_key(keyed[start]):
                groups.append(list(range(start, k)))
                start = k
        size = 1
        for g in groups:
            size *= math.factorial(len(g))
        if size > MAX_PARALLEL_CANDIDATES:
            raise QPError("canonical key: too many interchangeable parallel arrows")
        base = "A:" + ";".join(
            f"{vmap[a.source]},{vmap[a.target]},{','.join(map(str, a.degree))}"
            for a in keyed
        )
        for combo in itertools.product(*(itertools.permutations(g) for g in groups)):
            flat = [idx for perm in combo for idx in perm]
            amap = {keyed[flat[slot]].id: slot for slot in range(len(keyed))}
            pot = sorted(
                (canonical_cycle(tuple(amap[x] for x in w)), str(c))
                for w, c in terms.items()
            )
            ser = "|".join(
                [
                    header,
                    base,
                    "P:" + ";".join(f"{c}:{','.join(map(str, w))}" for w, c in pot),
                ]
            )
            if best is None or ser < best:
                best = ser

    def descend(cols: Dict[int, int]) -> None:
        cells: Dict[int, List[int]] = {}
        for v in vids:
            cells.setdefault(cols[v], []).append(v)
        ordered = [sorted(cells[c]) for c in sorted(cells)]
        target = next((cell for cell in ordered if len(cell) > 1), None)
        if target is None:
            serialize([cell[0] for cell in ordered])
            return
        for v in target:
            nxt = dict(cols)
            nxt[v] = max(cols.values()) + 1
            descend(refine(nxt))

    descend(refine({v: 0 for v in vids}))
    assert best is not None
    return best


@dataclass(frozen=True)
class SearchNode:
    qp: QPState
    sequence: Tuple[int, ...]


@dataclass
class SearchReport:
    root_spec: Optional[str]
    root_qp: dict
    depth_requested: int
    depth_reached: int
    explored: int
    pruned: int
    status: str  # clean-to-depth | witness | inconclusive
    witness: Optional[dict] = None
    inconclusive_reason: Optional[str] = None
    all_exact: bool = True
    tree: Tuple[Tuple[str, int, str], ...] = ()
    wall_ms: float = 0.0

    def to_json(self, include_timing: bool = False) -> dict:
        doc = {
            "root_spec": self.root_spec,
            "root_qp": self.root_qp,
            "depth_requested": self.depth_requested,
            "depth_reached": self.depth_reached,
            "explored": self.explored,
            "pruned": self.pruned,
            "status": self.status,
            "witness": self.witness,
            "inconclusive_reason": self.inconclusive_reason,
            "all_exact": self.all_exact,
        }
        if include_timing:
            doc["wall_ms"] = self.wall_ms
        return doc

    def to_dot(self) -> str:
        lines = ["digraph mutation_tree {"]
        seen = {""}
        lines.append('  "" [label="root"];')
        for parent, vertex, child in self.tree:
            if child not in seen:
                seen.add(child)
                lines.append(f'  "{child}" [label="{child}"];')
            lines.append(f'  "{parent}" -> "{child}" [label="{vertex}"];')
        lines.append("}")
        return "\n".join(lines)


def _expand(node: SearchNode, vertex: int):
    """One child: premutate (for the certificate), then reduce."""
    mid, _ = premutate(node.qp, vertex)
    child, _ = reduce(mid)
    loops = child.quiver.loops()
    twos = child.quiver.two_cycles()
    cert: Optional[ObstructionCertificate] = None
    if loops or twos:
        try:
            cert = degree_obstruction(mid)
        except QPError:
            cert = None
    return vertex, child, loops, twos, cert


def explore(
    qp: QPState,
    depth: int,
    *,
    node_cap: Optional[int] = None,
    time_cap: Optional[float] = None,
    threads: int = 1,
    prune: bool = True,
    root_spec: Optional[str] = None,
    progress=None,
) -> SearchReport:
    """Breadth-first search of the mutation class up to ``depth``.

    Stops with a witness as soon as some child carries a loop or two-cycle
    (attaching a degree certificate when one fires), merges children with
    equal canonical keys, and downgrades the answer to inconclusive when a
    cap is hit or truncation makes a node's quadratic part untrustworthy.
    """
    t0 = time.perf_counter()
    if qp.quiver.loops() or qp.quiver.two_cycles():
        raise QPError("search root must be loop-free and two-cycle free")

    root = SearchNode(qp, ())
    visited = {canonical_key(qp)}
    frontier = [("", root)]
    explored = 1
    pruned = 0
    tree: List[Tuple[str, int, str]] = []
    all_exact = qp.exact
    saw_shallow_horizon = False
    status: Optional[str] = None
    witness: Optional[dict] = None
    reason: Optional[str] = None
    depth_reached = 0

    def finish() -> SearchReport:
        return SearchReport(
            root_spec=root_spec,
            root_qp=qp_to_json(qp),
            depth_requested=depth,
            depth_reached=depth_reached,
            explored=explored,
            pruned=pruned,
            status=status or "clean-to-depth",
            witness=witness,
            inconclusive_reason=reason,
            all_exact=all_exact,
            tree=tuple(tree),
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )

    for level in range(1, depth + 1):
        if not frontier:
            break
        tasks = []
        for path_key, node in frontier:
            h = node.qp.faithful_horizon
            if h is not None and h < MIN_EXPAND_HORIZON:
                saw_shallow_horizon = True
                continue
            for v in sorted(vv.id for vv in node.qp.quiver.vertices):
                tasks.append((path_key, node, v))
        if not tasks:
            break
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(
                    pool.map(lambda t: _expand(t[1], t[2]), tasks)
                )
        else:
            results = [_expand(node, v) for (_, node, v) in tasks]

        depth_reached = level
        explored += len(results)
        next_frontier: List[Tuple[str, SearchNode]] = []
        for (path_key, node, _), (v, child, loops, twos, cert) in zip(tasks, results):
            seq = node.sequence + (v,)
            child_key_str = ",".join(map(str, seq))
            tree.append((path_key, v, child_key_str))
            all_exact = all_exact and child.exact
            if status is None and (loops or twos):
                status = "witness"
                witness = {
                    "sequence": list(seq),
                    "loops": [a.id for a in loops],
                    "two_cycle": (
                        [twos[0][0].id, twos[0][1].id] if twos else None
                    ),
                    "two_cycle_vertices": (
                        sorted((twos[0][0].source, twos[0][0].target)) if twos else None
                    ),
                    "certificate": cert.to_json() if cert else None,
                    "qp": qp_to_json(child),
                }
        if witness:
            return finish()
        for (path_key, node, _), (v, child, loops, twos, cert) in zip(tasks, results):
            seq = node.sequence + (v,)
            key = canonical_key(child)
            if prune and key in visited:
                pruned += 1
                continue
            visited.add(key)
            next_frontier.append((",".join(map(str, seq)), SearchNode(child, seq)))
        frontier = next_frontier
        if progress is not None:
            progress(level, explored)
        if node_cap is not None and explored > node_cap:
            status = "inconclusive"
            reason = f"node cap {node_cap} exceeded"
            return finish()
        if time_cap is not None and (time.perf_counter() - t0) > time_cap:
            status = "inconclusive"
            reason = f"time cap {time_cap}s exceeded"
            return finish()

    if saw_shallow_horizon:
        status = "inconclusive"
        reason = "truncation: a node's faithful horizon dropped below 4"
    return finish()


def replay(qp: QPState, sequence: Sequence[int]) -> QPState:
    """Re-run a mutation sequence from the root; witnesses are replayable."""
    state = qp
    for v in sequence:
        mid, _ = premutate(state, v)
        state, _ = reduce(mid)
    return state
