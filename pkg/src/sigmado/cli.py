"""Command-line front end.

Exit codes: 0 = the command's positive outcome (separated / identified /
certificate found / success), 1 = negative outcome, 2 = unknown,
3 = usage or input error. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import fixtures, graphio
from .docalc import identify, rule_applies
from .graphs import ClusterGraph, GraphError, underlying
from .hedges import find_hedge, find_sc_hedge, sc_projection, verify_certificate
from .probexpr import ExprError, Term, parse_formula, render_formula, to_ast
from .separation import SeparationQuery, find_active_walk, sigma_separated
from .simulate import SimulationError, random_linear_ioscm, sample

EXIT_POSITIVE = 0
EXIT_NEGATIVE = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we need 3
        self.print_usage(sys.stderr)
        raise SystemExit3(message)


class SystemExit3(Exception):
    def __init__(self, message):
        super().__init__(message)


def _styled(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _names(values) -> list[str]:
    out: list[str] = []
    for chunk in values or []:
        out.extend(part.strip() for part in chunk.split(",") if part.strip())
    return out


def _load_graph(value: str):
    if os.path.exists(value):
        return graphio.parse_graph(value)
    if value.lstrip().startswith("{"):
        return graphio.parse_graph(value)
    if value in fixtures.available():
        return fixtures.load(value)
    raise CliError(
        f"graph {value!r}: no such file, fixture, or JSON document "
        f"(fixtures: {', '.join(fixtures.available())})")


def _require_cluster_graph(g, command: str) -> ClusterGraph:
    if not isinstance(g, ClusterGraph):
        raise CliError(f"{command} needs a cluster graph (a document with \"clusters\")")
    return g


def _micro_name_hint(g, names) -> None:
    if not isinstance(g, ClusterGraph):
        return
    owners = g.partition.cluster_of_map()
    for name in names:
        if name in owners:
            raise CliError(
                f"{name!r} is a micro variable inside cluster {owners[name]!r}; "
                "only macro (cluster-level) queries are supported — "
                f"use {owners[name]!r} instead")


def _render_walk(walk) -> str:
    arrows = {"forward": "->", "reverse": "<-"}
    parts = [walk.vertices[0]]
    for step, nxt in zip(walk.steps, walk.vertices[1:]):
        if step.kind == "bidirected":
            arrow = "<->"
        else:
            arrow = arrows["forward" if step.forward else "reverse"]
        parts.append(f"{arrow} {nxt}")
    return " ".join(parts)


def _cmd_check_sep(args) -> int:
    g = _load_graph(args.graph)
    x, y = _names(args.x), _names(args.y)
    cond, z_do = _names(args.cond), _names(args.do)
    _micro_name_hint(g, x + y + cond + z_do)
    query = SeparationQuery.of(x, y, cond, z_do)
    walk = find_active_walk(g, query)
    separated = walk is None
    if args.format == "json":
        print(json.dumps({"separated": separated,
                          "witness": None if walk is None else walk.to_json_dict()},
                         indent=2))
    else:
        print(_styled("separated", "32") if separated else _styled("connected", "31"))
        if walk is not None:
            print(f"witness: {_render_walk(walk)}")
    return EXIT_POSITIVE if separated else EXIT_NEGATIVE


def _parse_effect(g: ClusterGraph, text: str) -> tuple[list[str], list[str]]:
    try:
        expr = parse_formula(text, g.vertices)
    except ExprError as exc:
        raise CliError(f"bad effect string: {exc}") from exc
    if not isinstance(expr, Term) or not expr.do or expr.given:
        raise CliError(
            'the effect must be a macro interventional term like "P(C_Y|do(C_X))"')
    return sorted(s.cluster for s in expr.y), sorted(s.cluster for s in expr.do)


def _cmd_identify(args) -> int:
    g = _require_cluster_graph(_load_graph(args.graph), "identify")
    y, x = _parse_effect(g, args.effect)
    result = identify(g, y, x, budget=args.budget)
    payload = {
        "status": result.status,
        "formula": None if result.formula is None else render_formula(result.formula),
        "ast": None if result.formula is None else to_ast(result.formula),
        "trace": list(result.trace),
        "certificate": None if result.certificate is None
        else result.certificate.to_json_dict(),
    }
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(f"status: {_styled(result.status, '32' if result.status == 'identified' else '31')}")
        if result.formula is not None:
            print(f"formula: {render_formula(result.formula)}")
            print(f"ast: {json.dumps(to_ast(result.formula))}")
            print("trace:")
            for i, step in enumerate(result.trace, start=1):
                print(f"  {i}. {step}")
        if result.certificate is not None:
            print(f"certificate: {json.dumps(result.certificate.to_json_dict())}")
            if result.certificate.size_condition_met is None:
                print("note: cluster sizes unknown — the verdict is conditional on "
                      "every cluster in a cycle having size >= 2")
        if result.status == "unknown":
            print(f"note: rewrite budget exhausted ({args.budget} expressions)")
    return {"identified": EXIT_POSITIVE,
            "non-identifiable": EXIT_NEGATIVE,
            "unknown": EXIT_UNKNOWN}[result.status]


def _cmd_hedge(args) -> int:
    g = _load_graph(args.graph)
    x, y = _names(args.x), _names(args.y)
    _micro_name_hint(g, x + y)
    if isinstance(g, ClusterGraph):
        cert = find_sc_hedge(g, x, y, bound=args.bound)
    else:
        cert = find_hedge(g, x, y, bound=args.bound)
    if cert is None:
        if args.format == "json":
            print(json.dumps({"certificate": None, "bound": args.bound}, indent=2))
        else:
            print(f"none found (bound {args.bound})")
        return EXIT_NEGATIVE
    problems = verify_certificate(g, x, y, cert)
    if problems:  # the verifier re-checks every returned certificate
        raise CliError("internal error: certificate failed verification: "
                       + "; ".join(problems))
    if args.format == "json":
        print(json.dumps({"certificate": cert.to_json_dict(), "bound": args.bound},
                         indent=2))
    else:
        print(_styled("certificate found", "32"))
        print(json.dumps(cert.to_json_dict(), indent=2))
    return EXIT_POSITIVE


def _print_graph(g, fmt: str, added=()) -> None:
    if fmt == "json":
        sys.stdout.write(graphio.serialize_graph(g))
        return
    if fmt == "dot":
        highlight = {e: "color=red" for e in added}
        sys.stdout.write(graphio.to_dot(g, bidirected_attrs=highlight))
        return
    mg = underlying(g)
    print("vertices: " + ", ".join(mg.vertices))
    print("directed: " + (", ".join(f"{t} -> {h}" for t, h in mg.directed_edges) or "-"))
    print("bidirected: " + (", ".join(f"{a} <-> {b}" for a, b in mg.bidirected_edges) or "-"))
    if added:
        print("added by projection: " + ", ".join(f"{a} <-> {b}" for a, b in added))


def _cmd_project(args) -> int:
    g = _require_cluster_graph(_load_graph(args.graph), "project")
    projected = sc_projection(g)
    added = tuple(sorted(set(projected.bidirected_edges) - set(g.bidirected_edges)))
    _print_graph(projected, args.format, added)
    return EXIT_POSITIVE


def _parse_assignments(values, what: str, cast):
    out = {}
    for chunk in values or []:
        for part in chunk.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise CliError(f"bad {what} entry {part!r}: expected NAME=VALUE")
            name, value = part.split("=", 1)
            try:
                out[name.strip()] = cast(value)
            except ValueError:
                raise CliError(f"bad {what} value in {part!r}") from None
    return out


def _cmd_expand(args) -> int:
    g = _require_cluster_graph(_load_graph(args.graph), "expand")
    sizes = _parse_assignments(args.sizes, "--sizes", int)
    graph, partition = g.maximal_compatible(sizes or None)
    _print_graph(graph, args.format)
    if args.format == "text":
        members = ", ".join(
            f"{c}={{{', '.join(partition.members(c) or ())}}}" for c in partition.cluster_names)
        print("partition: " + members)
    return EXIT_POSITIVE


def _cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    do = _parse_assignments(args.do, "--do", float)
    model = random_linear_ioscm(g, seed=args.seed)
    data = sample(model, args.n, do=do)
    sys.stdout.write(data.to_csv())
    return EXIT_POSITIVE


def _cmd_rules(args) -> int:
    g = _require_cluster_graph(_load_graph(args.graph), "rules")
    y, x = _names(args.y), _names(args.x)
    z, w = _names(args.do), _names(args.cond)
    _micro_name_hint(g, y + x + z + w)
    verdicts = {rule: rule_applies(g, rule, y, x, z, w) for rule in (1, 2, 3)}
    if args.format == "json":
        print(json.dumps({f"rule {r}": v for r, v in verdicts.items()}, indent=2))
    else:
        for rule, verdict in verdicts.items():
            word = "applicable" if verdict else "not applicable"
            print(f"rule {rule}: {_styled(word, '32' if verdict else '31')}")
    return EXIT_POSITIVE if any(verdicts.values()) else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigmado",
                     description="sigma-separation, do-calculus identification and "
                                 "SC-hedge certificates for cluster causal graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--graph", required=True,
                       help="graph document: a path, a fixture name (e.g. fig2a), "
                            "or literal JSON")
        p.add_argument("--format", choices=("text", "json", "dot"), default="text")
        return p

    p = add("check-sep", _cmd_check_sep, "decide sigma-separation")
    p.add_argument("--x", action="append", required=True, help="source vertices")
    p.add_argument("--y", action="append", required=True, help="target vertices")
    p.add_argument("--cond", action="append", help="conditioned vertices")
    p.add_argument("--do", action="append", help="intervened-and-conditioned vertices")

    p = add("identify", _cmd_identify, "identify a macro causal effect")
    p.add_argument("--effect", required=True, help='e.g. "P(C_Y|do(C_X))"')
    p.add_argument("--budget", type=int, default=20000,
                   help="rewrite search budget (expressions)")

    p = add("hedge", _cmd_hedge, "search for a (SC-)hedge certificate")
    p.add_argument("--x", action="append", required=True)
    p.add_argument("--y", action="append", required=True)
    p.add_argument("--bound", type=int, default=12, help="vertex bound for the search")

    add("project", _cmd_project, "print the SC-projection")

    p = add("expand", _cmd_expand, "print the maximal compatible DMG")
    p.add_argument("--sizes", action="append",
                   help="cluster sizes, e.g. C_X=2,C_Y=2 (defaults to declared sizes)")

    p = add("simulate", _cmd_simulate, "sample a random linear ioSCM as CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=1000, help="number of samples")
    p.add_argument("--do", action="append", help="interventions, e.g. X=1.5,Y=0")

    p = add("rules", _cmd_rules, "per-rule do-calculus applicability table")
    p.add_argument("--y", action="append", required=True)
    p.add_argument("--x", action="append", required=True)
    p.add_argument("--do", action="append", help="already-intervened clusters (z)")
    p.add_argument("--cond", action="append", help="conditioned clusters (w)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit3 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (CliError, GraphError, graphio.ParseError, ExprError,
            SimulationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
