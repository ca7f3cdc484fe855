"""Top Trading Cycles under stochastic dominance: checkers, exhaustive runs, certificates.

Exit codes: 0 when every check passed, 1 when a violation was found, 2 on
usage or input errors. Machine-readable output goes to stdout; one-line
human summaries go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .checkers import ExhaustionBoundError, check_sd_efficient, check_sd_ir
from .core import AssignmentMatrix
from .harness import ProfileSpace, certify_all, default_jobs, verify_axioms, verify_uniqueness_deterministic
from .rules import identity_rule, serial_dictatorship_rule, ttc_rule, uniform_rule
from .ttc import ttc_trace

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

BUILTIN_RULES = {
    "ttc": ttc_rule,
    "identity": identity_rule,
    "serial-dictatorship": serial_dictatorship_rule,
    "uniform": uniform_rule,
}


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_rule(args, n: int):
    if getattr(args, "rule", None):
        rule = io.parse_table_rule(_read(args.rule))
        if rule.n != n:
            raise UsageError(f"table rule is for n={rule.n}, not {n}")
        return rule
    return BUILTIN_RULES[getattr(args, "builtin", "ttc")]


def _emit_batch(result, fmt: str) -> int:
    if fmt == "csv":
        sys.stdout.write(io.counterexamples_csv(result.counterexamples))
    else:
        sys.stdout.write(io.dumps(result.to_doc()))
    print(result.summary(), file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_VIOLATION


def cmd_ttc(args) -> int:
    doc = io.parse_profile_document(_read(args.profile))
    trace = ttc_trace(doc.profile)
    got = trace.assignment()
    matrix = doc.endowment.decanonicalize(AssignmentMatrix.from_permutation([got[i] for i in range(1, doc.profile.n + 1)]))
    if not args.trace:
        sys.stdout.write(io.format_matrix(matrix))
        return EXIT_OK
    relabel = doc.endowment.from_canonical
    rounds = [
        {
            "round": r.number,
            "active": sorted(r.active),
            "cycles": [list(c) for c in r.cycles],
            "assigned": [{"agent": i, "object": relabel(x)} for i, x in sorted(r.assigned.items())],
        }
        for r in trace.rounds
    ]
    sys.stdout.write(io.dumps({"matrix": io.matrix_to_doc(matrix), "trace": rounds}))
    return EXIT_OK


def cmd_check(args) -> int:
    doc = io.parse_profile_document(_read(args.profile))
    matrix = io.parse_matrix(_read(args.matrix))
    if matrix.n != doc.profile.n:
        raise UsageError(f"matrix is {matrix.n}x{matrix.n} but the profile has n={doc.profile.n}")
    # matrices are given in the document's own object labels
    canon = doc.endowment
    if not canon.is_canonical():
        n = matrix.n
        matrix = AssignmentMatrix(
            tuple(tuple(matrix[i, canon.from_canonical(j)] for j in range(1, n + 1)) for i in range(1, n + 1))
        )
    if args.axiom == "ir":
        report = check_sd_ir(doc.profile, matrix)
    else:
        report = check_sd_efficient(doc.profile, matrix, args.method)
    if args.format == "csv":
        rows = []
        if report.counterexample is not None:
            cx = report.counterexample
            rows.append(
                {
                    "axiom": report.axiom.value,
                    "profile_code": cx.profile.encode(),
                    "profile": [list(p.ranking) for p in cx.profile],
                    "agent": cx.agent,
                    "misreport": None,
                    "witness": cx.witness,
                }
            )
        sys.stdout.write(io.counterexamples_csv(rows))
    else:
        sys.stdout.write(io.format_report(report))
    print(f"{report.axiom.value}: {'holds' if report.holds else 'violated'}", file=sys.stderr)
    return EXIT_OK if report.holds else EXIT_VIOLATION


def cmd_verify_axioms(args) -> int:
    rule = _load_rule(args, args.n)
    result = verify_axioms(args.n, rule, jobs=args.jobs, method=args.method)
    return _emit_batch(result, args.format)


def cmd_verify_uniqueness(args) -> int:
    force = {}
    for item in args.force or []:
        try:
            code, perm = item.split(":")
            force[int(code)] = tuple(int(x) for x in perm.split(","))
        except ValueError as exc:
            raise UsageError(f"--force expects CODE:obj,obj,... got {item!r}") from exc
    result = verify_uniqueness_deterministic(args.n, force=force)
    return _emit_batch(result, args.format)


def cmd_certify(args) -> int:
    rule = _load_rule(args, args.n)
    result, docs = certify_all(args.n, rule, jobs=args.jobs, keep=bool(args.certificates))
    if args.certificates:
        with open(args.certificates, "w", encoding="utf-8") as fh:
            for doc in docs:
                fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return _emit_batch(result, args.format)


def cmd_enumerate(args) -> int:
    space = ProfileSpace(args.n)
    out = sys.stdout
    if args.format == "csv":
        out.write("profile_code,preferences\n")
        for code, profile in enumerate(space):
            out.write(f'{code},"{json.dumps([list(p.ranking) for p in profile], separators=(",", ":"))}"\n')
    else:
        for code, profile in enumerate(space):
            doc = io.profile_to_doc(profile)
            doc["profile_code"] = code
            out.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"{len(space)} profiles", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttcsd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=True):
        p.add_argument("--format", choices=["json", "csv"], default="json")
        if jobs:
            p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes (env TTCSD_JOBS)")

    p = sub.add_parser("ttc", help="run Top Trading Cycles on a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--trace", action="store_true", help="also print the rounds and cycles")
    p.set_defaults(func=cmd_ttc)

    p = sub.add_parser("check", help="check one axiom for a matrix at a profile")
    p.add_argument("--axiom", choices=["ir", "eff"], required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", choices=["acyclic", "lp"], default="acyclic")
    common(p, jobs=False)
    p.set_defaults(func=cmd_check)

    for name, func, help_ in [
        ("verify-axioms", cmd_verify_axioms, "exhaustively check a rule against all four axioms"),
        ("certify", cmd_certify, "derive and replay a uniqueness certificate at every profile"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--n", type=int, required=True)
        group = p.add_mutually_exclusive_group()
        group.add_argument("--rule", help="table rule JSON (profile code -> matrix document)")
        group.add_argument("--builtin", choices=sorted(BUILTIN_RULES), default="ttc")
        if name == "verify-axioms":
            p.add_argument("--method", choices=["acyclic", "lp"], default="acyclic")
        else:
            p.add_argument("--certificates", help="write certificates here as JSON lines")
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("verify-uniqueness", help="search all deterministic rules satisfying the axioms")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--force", action="append", metavar="CODE:OBJS", help="pin the assignment at a profile code")
    common(p)
    p.set_defaults(func=cmd_verify_uniqueness)

    p = sub.add_parser("enumerate", help="stream every profile of size n")
    p.add_argument("--n", type=int, required=True)
    common(p, jobs=False)
    p.set_defaults(func=cmd_enumerate)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "n", 2) < 2:
        print("error: --n must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, io.DocumentError, ExhaustionBoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
