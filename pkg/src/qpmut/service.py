"""HTTP facade for the interactive explorer: session-scoped mutation trees,
structured errors, and asynchronous search jobs with polling.

Sessions live in memory with optional JSON snapshots on a timer and at
shutdown; history is append-only, so undo is navigation rather than deletion.
Each session serializes its mutations behind a lock while search jobs run on
a small worker pool and publish progress through atomic snapshot dicts.
"""

from __future__ import annotations

import argparse
import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import QPError, QPState, is_homogeneous
from .generators import (
    PreprojectiveSpec,
    is_spec_string,
    parse_spec,
    parse_spec_object,
    validate_lambda,
)
from . import jacobian
from .mutation import degree_obstruction, premutate, reduce
from .search import explore
from .serialize import qp_from_json, qp_to_json

PAYLOAD_VERSION = 1


class CreateSessionBody(BaseModel):
    spec: Optional[str] = None
    qp: Optional[dict] = None


class MutateBody(BaseModel):
    vertex: int


class SearchBody(BaseModel):
    depth: int
    node_cap: Optional[int] = None
    time_cap: Optional[float] = None
    threads: int = 1


@dataclass
class NodeRecord:
    qp: QPState
    parent: Optional[int]
    vertex: Optional[int]
    report: Optional[dict] = None
    certificate: Optional[dict] = None


@dataclass
class Session:
    id: str
    nodes: List[NodeRecord]
    lock: threading.Lock = field(default_factory=threading.Lock)
    created: float = field(default_factory=time.time)
    accessed: float = field(default_factory=time.time)
    lambda_report: Optional[dict] = None
    spec: Optional[str] = None

    def touch(self) -> None:
        self.accessed = time.time()


@dataclass
class Job:
    id: str
    session: str
    node: int
    status: str = "running"
    progress: dict = field(default_factory=dict)
    report: Optional[dict] = None
    error: Optional[str] = None


def _mutable_vertices(qp: QPState) -> List[int]:
    loops_at = {a.source for a in qp.quiver.loops()}
    on_two_cycle = set()
    for a, b in qp.quiver.two_cycles():
        on_two_cycle.update((a.source, a.target))
    return sorted(
        v.id
        for v in qp.quiver.vertices
        if v.id not in loops_at and v.id not in on_two_cycle
    )


def node_payload(session: Session, index: int) -> dict:
    rec = session.nodes[index]
    qp = rec.qp
    hom = is_homogeneous(qp)
    doc = qp_to_json(qp)
    # per-term degrees ride along so the UI never does arithmetic itself
    term_degrees = [
        list(path_degree(qp.quiver, tuple(entry["cycle"]))) for entry in doc["potential"]
    ]
    return {
        "v": PAYLOAD_VERSION,
        "session": session.id,
        "node": index,
        "parent": rec.parent,
        "vertex": rec.vertex,
        "sequence": _sequence_of(session, index),
        "qp": doc,
        "term_degrees": term_degrees,
        "loops": [a.id for a in qp.quiver.loops()],
        "two_cycles": [[a.id, b.id] for a, b in qp.quiver.two_cycles()],
        "mutable": _mutable_vertices(qp),
        "homogeneous_degree": list(hom) if hom is not None else None,
        "exact": qp.exact,
        "report": rec.report,
        "certificate": rec.certificate,
    }


def _sequence_of(session: Session, index: int) -> List[int]:
    seq: List[int] = []
    k: Optional[int] = index
    while k is not None:
        rec = session.nodes[k]
        if rec.vertex is not None:
            seq.append(rec.vertex)
        k = rec.parent
    return list(reversed(seq))


def create_app(
    *,
    snapshot_dir: Optional[str] = None,
    snapshot_interval: float = 300.0,
    session_ttl: float = 3600.0,
    workers: int = 4,
) -> FastAPI:
    sessions: Dict[str, Session] = {}
    jobs: Dict[str, Job] = {}
    registry_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=workers)
    stop_event = threading.Event()

    def sweep_sessions() -> None:
        cutoff = time.time() - session_ttl
        with registry_lock:
            for sid in [s for s, sess in sessions.items() if sess.accessed < cutoff]:
                del sessions[sid]

    def write_snapshot() -> None:
        if not snapshot_dir:
            return
        os.makedirs(snapshot_dir, exist_ok=True)
        with registry_lock:
            items = list(sessions.items())
        for sid, sess in items:
            doc = {
                "id": sid,
                "spec": sess.spec,
                "nodes": [
                    {
                        "qp": qp_to_json(rec.qp),
                        "parent": rec.parent,
                        "vertex": rec.vertex,
                        "report": rec.report,
                        "certificate": rec.certificate,
                    }
                    for rec in sess.nodes
                ],
            }
            path = os.path.join(snapshot_dir, f"{sid}.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(doc, f)

    def load_snapshots() -> None:
        if not snapshot_dir or not os.path.isdir(snapshot_dir):
            return
        for name in sorted(os.listdir(snapshot_dir)):
            if not name.endswith(".json"):
                continue
            try:
                with open(os.path.join(snapshot_dir, name), encoding="utf-8") as f:
                    doc = json.load(f)
                nodes = [
                    NodeRecord(
                        qp_from_json(rec["qp"]),
                        rec["parent"],
                        rec["vertex"],
                        rec.get("report"),
                        rec.get("certificate"),
                    )
                    for rec in doc["nodes"]
                ]
                sessions[doc["id"]] = Session(doc["id"], nodes, spec=doc.get("spec"))
            except (QPError, KeyError, json.JSONDecodeError):
                continue

    def snapshot_loop() -> None:
        while not stop_event.wait(snapshot_interval):
            sweep_sessions()
            write_snapshot()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        load_snapshots()
        ticker = None
        if snapshot_dir:
            ticker = threading.Thread(target=snapshot_loop, daemon=True)
            ticker.start()
        yield
        stop_event.set()
        write_snapshot()
        pool.shutdown(wait=False)

    app = FastAPI(title="qpmut service", lifespan=lifespan)

    @app.exception_handler(QPError)
    async def qp_error_handler(_: Request, exc: QPError):
        return JSONResponse(
            status_code=400,
            content={"code": "qp_error", "message": str(exc), "detail": None},
        )

    def not_found(what: str, key: str) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"unknown {what}", "detail": key},
        )

    def get_session(sid: str) -> Optional[Session]:
        with registry_lock:
            sess = sessions.get(sid)
        if sess:
            sess.touch()
        return sess

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        if (body.spec is None) == (body.qp is None):
            raise QPError("provide exactly one of 'spec' or 'qp'")
        lam_report = None
        spec_str = None
        if body.spec is not None:
            if not is_spec_string(body.spec):
                raise QPError(f"unknown generator spec {body.spec!r}")
            qp = parse_spec(body.spec)
            spec_str = body.spec
            obj = parse_spec_object(body.spec)
            if isinstance(obj, PreprojectiveSpec):
                lam_report = validate_lambda(obj).to_json()
        else:
            qp = qp_from_json(body.qp)
        sid = uuid.uuid4().hex[:12]
        sess = Session(sid, [NodeRecord(qp, None, None)], lambda_report=lam_report, spec=spec_str)
        with registry_lock:
            sessions[sid] = sess
        out = {"session": sid, "root": node_payload(sess, 0)}
        if lam_report is not None:
            out["lambda_report"] = lam_report
        return out

    @app.get("/sessions/{sid}/tree")
    def get_tree(sid: str):
        sess = get_session(sid)
        if not sess:
            return not_found("session", sid)
        with sess.lock:
            return {
                "v": PAYLOAD_VERSION,
                "session": sid,
                "nodes": [
                    {"node": k, "parent": rec.parent, "vertex": rec.vertex}
                    for k, rec in enumerate(sess.nodes)
                ],
            }

    @app.get("/sessions/{sid}/nodes/{n}")
    def get_node(sid: str, n: int):
        sess = get_session(sid)
        if not sess:
            return not_found("session", sid)
        with sess.lock:
            if not 0 <= n < len(sess.nodes):
                return not_found("node", str(n))
            return node_payload(sess, n)

    @app.post("/sessions/{sid}/nodes/{n}/mutate")
    def mutate_node(sid: str, n: int, body: MutateBody):
        sess = get_session(sid)
        if not sess:
            return not_found("session", sid)
        with sess.lock:
            if not 0 <= n < len(sess.nodes):
                return not_found("node", str(n))
            qp = sess.nodes[n].qp
            mid, rep_pre = premutate(qp, body.vertex)
            cert = None
            try:
                c = degree_obstruction(mid)
                cert = c.to_json() if c else None
            except QPError:
                cert = None
            child, rep_red = reduce(mid)
            report = {
                "vertex": body.vertex,
                "arrows_added": rep_pre.to_json()["arrows_added"],
                "arrows_reversed": rep_pre.to_json()["arrows_reversed"],
                "trivial_blocks": rep_red.to_json()["trivial_blocks"],
                "substitution_rounds": rep_red.substitution_rounds,
                "arrows_deleted": list(rep_red.arrows_deleted),
                "exact": rep_red.exact,
            }
            sess.nodes.append(NodeRecord(child, n, body.vertex, report, cert))
            child_index = len(sess.nodes) - 1
            return {"node": node_payload(sess, child_index)}

    @app.post("/sessions/{sid}/nodes/{n}/search")
    def start_search(sid: str, n: int, body: SearchBody):
        sess = get_session(sid)
        if not sess:
            return not_found("session", sid)
        with sess.lock:
            if not 0 <= n < len(sess.nodes):
                return not_found("node", str(n))
            qp = sess.nodes[n].qp
        jid = uuid.uuid4().hex[:12]
        job = Job(jid, sid, n)
        with registry_lock:
            jobs[jid] = job

        def run() -> None:
            def on_progress(level: int, explored: int) -> None:
                job.progress = {"level": level, "explored": explored}

            try:
                report = explore(
                    qp,
                    body.depth,
                    node_cap=body.node_cap,
                    time_cap=body.time_cap,
                    threads=body.threads,
                    progress=on_progress,
                )
                job.report = report.to_json()
                job.status = "done"
            except QPError as e:
                job.error = str(e)
                job.status = "failed"

        pool.submit(run)
        return {"job": jid}

    @app.get("/jobs/{jid}")
    def poll_job(jid: str):
        with registry_lock:
            job = jobs.get(jid)
        if not job:
            return not_found("job", jid)
        out = {"v": PAYLOAD_VERSION, "job": jid, "status": job.status, "progress": job.progress}
        if job.status == "done":
            out["report"] = job.report
        if job.status == "failed":
            out["error"] = job.error
        return out

    @app.get("/sessions/{sid}/nodes/{n}/dims")
    def node_dims(sid: str, n: int, max: int = 4):
        return _table(sid, n, max, jacobian.graded_dims)

    @app.get("/sessions/{sid}/nodes/{n}/hh0")
    def node_hh0(sid: str, n: int, max: int = 4):
        return _table(sid, n, max, jacobian.hh0_dims)

    def _table(sid: str, n: int, bound: int, fn):
        sess = get_session(sid)
        if not sess:
            return not_found("session", sid)
        with sess.lock:
            if not 0 <= n < len(sess.nodes):
                return not_found("node", str(n))
            qp = sess.nodes[n].qp
        table = fn(qp, bound)
        return {"v": PAYLOAD_VERSION, "node": n, **table.to_json()}

    return app


app = create_app()


def main() -> None:
    parser = argparse.ArgumentParser(prog="qpmut-serve")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8642)
    parser.add_argument("--snapshot-dir", default=None)
    parser.add_argument("--snapshot-interval", type=float, default=300.0)
    parser.add_argument("--session-ttl", type=float, default=3600.0)
    args = parser.parse_args()

    import uvicorn

    uvicorn.run(
        create_app(
            snapshot_dir=args.snapshot_dir,
            snapshot_interval=args.snapshot_interval,
            session_ttl=args.session_ttl,
        ),
        host=args.host,
        port=args.port,
    )


if __name__ == "__main__":
    main()
