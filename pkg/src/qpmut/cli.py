"""Batch command line: generate, mutate, reduce, obstruct, search, dims, hh0
and validate over the QP JSON format.

One QP per file, composable through standard streams; every subcommand is
randomness-free so outputs are byte-stable across runs and thread counts.
Exit codes: 0 success, 2 witness found, 3 inconclusive, 1 usage/input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .core import DEFAULT_LENGTH_CAP, QPError, QPState, with_length_cap
from .generators import (
    McKaySpec,
    gcd_condition,
    is_spec_string,
    parse_spec,
    parse_spec_object,
    validate_lambda,
)
from . import jacobian, mutation, search
from .serialize import dumps, loads_qp, qp_to_json


def _default_cap() -> int:
    env = os.environ.get("QPMUT_LENGTH_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise QPError(f"QPMUT_LENGTH_CAP must be an integer, got {env!r}") from None
    return DEFAULT_LENGTH_CAP


def _read_qp(source: Optional[str], cap: Optional[int]) -> QPState:
    if source and is_spec_string(source):
        return parse_spec(source, cap if cap is not None else _default_cap())
    if source is None or source == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(source, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise QPError(f"cannot read {source}: {e}") from None
    qp = loads_qp(text)
    if cap is not None:
        qp = with_length_cap(qp, cap)
    return qp


def _write(text: str, output: Optional[str]) -> None:
    if output and output != "-":
        with open(output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpmut", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, needs_input=True):
        if needs_input:
            sp.add_argument(
                "input",
                nargs="?",
                default=None,
                help="QP JSON path, '-' for stdin, or a generator spec string",
            )
        sp.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--length-cap", type=int, default=None)
        sp.add_argument("--format", choices=("json", "text", "dot"), default="json")

    sp = sub.add_parser("generate", help="build a QP from a generator spec string")
    sp.add_argument("spec", help="e.g. mckay:n=5,w=1,2,2 or preproj:type=A~2,lambda=1,1,-2")
    add_common(sp, needs_input=False)

    for name in ("mutate", "reduce"):
        sp = sub.add_parser(name)
        add_common(sp)
        if name == "mutate":
            sp.add_argument("--vertex", type=int, required=True)
        sp.add_argument("--report", default=None, help="write the mutation report here")

    sp = sub.add_parser("obstruct", help="degree obstruction certificate, if any")
    add_common(sp)

    sp = sub.add_parser("search", help="breadth-first loop/two-cycle search")
    add_common(sp)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--node-cap", type=int, default=None)
    sp.add_argument("--time-cap", type=float, default=None)
    sp.add_argument("--no-prune", action="store_true")
    sp.add_argument("--tree", action="store_true", help="emit the mutation tree as DOT")

    for name in ("dims", "hh0"):
        sp = sub.add_parser(name)
        add_common(sp)
        sp.add_argument("--max-degree", type=int, required=True)

    sp = sub.add_parser("validate", help="arithmetic checks on a generator spec")
    sp.add_argument("spec")
    add_common(sp, needs_input=False)

    return p


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return _dispatch(args)
    except QPError as e:
        sys.stderr.write(f"qpmut: error: {e}\n")
        return 1


def _dispatch(args) -> int:
    cap = getattr(args, "length_cap", None)

    if args.command == "generate":
        qp = parse_spec(args.spec, cap if cap is not None else _default_cap())
        _write(dumps(qp_to_json(qp)), args.output)
        return 0

    if args.command == "mutate":
        qp = _read_qp(args.input, cap)
        out, report = mutation.mutate(qp, args.vertex)
        _write(dumps(qp_to_json(out)), args.output)
        if args.report:
            _write(dumps(report.to_json()), args.report)
        return 0

    if args.command == "reduce":
        qp = _read_qp(args.input, cap)
        out, report = mutation.reduce(qp)
        _write(dumps(qp_to_json(out)), args.output)
        if args.report:
            _write(dumps(report.to_json()), args.report)
        return 0

    if args.command == "obstruct":
        qp = _read_qp(args.input, cap)
        cert = mutation.degree_obstruction(qp)
        _write(dumps({"certificate": cert.to_json() if cert else None}), args.output)
        return 0

    if args.command == "search":
        qp = _read_qp(args.input, cap)
        spec = args.input if args.input and is_spec_string(args.input) else None
        report = search.explore(
            qp,
            args.depth,
            node_cap=args.node_cap,
            time_cap=args.time_cap,
            threads=args.threads,
            prune=not args.no_prune,
            root_spec=spec,
        )
        if args.tree or args.format == "dot":
            _write(report.to_dot() + "\n", args.output)
        elif args.format == "text":
            w = report.witness
            lines = [
                f"status    {report.status}",
                f"depth     {report.depth_reached}/{report.depth_requested}",
                f"explored  {report.explored}",
                f"pruned    {report.pruned}",
            ]
            if w:
                lines.append(f"sequence  {w['sequence']}")
                if w.get("two_cycle_vertices"):
                    lines.append(f"two-cycle between {w['two_cycle_vertices']}")
            _write("\n".join(lines) + "\n", args.output)
        else:
            _write(dumps(report.to_json()), args.output)
        if report.status == "witness":
            return 2
        if report.status == "inconclusive":
            return 3
        return 0

    if args.command in ("dims", "hh0"):
        qp = _read_qp(args.input, cap)
        fn = jacobian.graded_dims if args.command == "dims" else jacobian.hh0_dims
        table = fn(qp, args.max_degree)
        if args.format == "text":
            _write(table.to_text() + "\n", args.output)
        else:
            _write(dumps(table.to_json()), args.output)
        return 0

    if args.command == "validate":
        spec = parse_spec_object(args.spec)
        if isinstance(spec, McKaySpec):
            doc = {
                "kind": "mckay",
                "n": spec.n,
                "weights": list(spec.weights),
                "weight_sum_zero": True,
                "gcd_condition": gcd_condition(spec),
            }
        else:
            doc = {"kind": "preproj", **validate_lambda(spec).to_json()}
        _write(dumps(doc), args.output)
        return 0

    raise QPError(f"unknown command {args.command!r}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
