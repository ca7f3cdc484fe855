"""JSON documents for profiles, matrices, reports, certificates and table rules.

Rationals are always written as strings (``"1/3"``, ``"0"``, ``"1"``) and
agents/objects are 1-based. Output is canonical: sorted keys, two-space
indent, trailing newline.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from importlib import resources
from typing import Any, Iterable

from .checkers import Axiom, AxiomReport, Counterexample
from .core import AssignmentMatrix, Endowment, Preference, Profile, format_rational, parse_rational
from .derivation import Certificate, DerivationStep
from .rules import TableRule

CERTIFICATE_FORMAT = "ttcsd-certificate/1"


class DocumentError(ValueError):
    """Any problem reading a document; ``path`` locates it (e.g. ``preferences[1][0]``)."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class MalformedJsonError(DocumentError):
    pass


class SchemaError(DocumentError):
    pass


class NotAPermutationError(DocumentError):
    pass


class SizeMismatchError(DocumentError):
    pass


class NotBistochasticError(DocumentError):
    pass


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _loads(text: str | bytes) -> Any:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"{exc.msg} at line {exc.lineno} column {exc.colno}") from exc


def _field(doc: Any, key: str, path: str = "$") -> Any:
    if not isinstance(doc, dict):
        raise SchemaError("expected an object", path)
    if key not in doc:
        raise SchemaError(f"missing field {key!r}", path)
    return doc[key]


def _int(value: Any, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaError(f"expected an integer, got {value!r}", path)
    return value


def schema(name: str) -> dict:
    """Bundled JSON Schema for ``profile``, ``matrix``, ``report``, ``certificate``, ``batch`` or ``table-rule``."""
    text = resources.files("ttcsd").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


# -- profiles ---------------------------------------------------------------


@dataclass(frozen=True)
class ProfileDocument:
    profile: Profile
    # original labels; identity unless the document carried an endowment
    endowment: Endowment


def profile_from_doc(doc: Any, path: str = "$") -> ProfileDocument:
    n = _int(_field(doc, "n", path), f"{path}.n")
    if n < 2:
        raise SizeMismatchError(f"n must be at least 2, got {n}", f"{path}.n")
    prefs = _field(doc, "preferences", path)
    if not isinstance(prefs, list):
        raise SchemaError("expected a list", f"{path}.preferences")
    if len(prefs) != n:
        raise SizeMismatchError(f"{len(prefs)} preference lists for n={n}", f"{path}.preferences")
    rankings = []
    for i, r in enumerate(prefs):
        p = f"{path}.preferences[{i}]"
        if not isinstance(r, list):
            raise SchemaError("expected a list", p)
        if len(r) != n:
            raise SizeMismatchError(f"ranking has {len(r)} entries for n={n}", p)
        for k, x in enumerate(r):
            _int(x, f"{p}[{k}]")
        if sorted(r) != list(range(1, n + 1)):
            raise NotAPermutationError(f"{r} is not a permutation of 1..{n}", p)
        rankings.append(tuple(r))
    endowment = Endowment.canonical(n)
    if "endowment" in doc:
        held = doc["endowment"]
        p = f"{path}.endowment"
        if not isinstance(held, list) or len(held) != n:
            raise SizeMismatchError(f"endowment must list one object per agent (n={n})", p)
        for k, x in enumerate(held):
            _int(x, f"{p}[{k}]")
        if sorted(held) != list(range(1, n + 1)):
            raise NotAPermutationError(f"{held} is not a permutation of 1..{n}", p)
        endowment = Endowment.from_holdings(held)
    profile = endowment.canonicalize(Profile.of(*rankings))
    return ProfileDocument(profile, endowment)


def parse_profile(text: str | bytes) -> Profile:
    """Profile over canonical labels (agent i owns object i)."""
    return profile_from_doc(_loads(text)).profile


def parse_profile_document(text: str | bytes) -> ProfileDocument:
    return profile_from_doc(_loads(text))


def profile_to_doc(profile: Profile, endowment: Endowment | None = None) -> dict:
    doc: dict[str, Any] = {"n": profile.n}
    if endowment is None or endowment.is_canonical():
        doc["preferences"] = [list(p.ranking) for p in profile]
    else:
        doc["preferences"] = [[endowment.from_canonical(x) for x in p.ranking] for p in profile]
        doc["endowment"] = [endowment.holding_of(i) for i in range(1, profile.n + 1)]
    return doc


def format_profile(profile: Profile, endowment: Endowment | None = None) -> str:
    return dumps(profile_to_doc(profile, endowment))


# -- matrices ---------------------------------------------------------------


def matrix_to_doc(matrix: AssignmentMatrix) -> dict:
    return {"n": matrix.n, "rows": [[format_rational(v) for v in row] for row in matrix.entries]}


def matrix_from_doc(doc: Any, path: str = "$") -> AssignmentMatrix:
    n = _int(_field(doc, "n", path), f"{path}.n")
    rows = _field(doc, "rows", path)
    if not isinstance(rows, list):
        raise SchemaError("expected a list", f"{path}.rows")
    if len(rows) != n:
        raise SizeMismatchError(f"{len(rows)} rows for n={n}", f"{path}.rows")
    parsed = []
    for i, row in enumerate(rows):
        p = f"{path}.rows[{i}]"
        if not isinstance(row, list):
            raise SchemaError("expected a list", p)
        if len(row) != n:
            raise SizeMismatchError(f"row has {len(row)} entries for n={n}", p)
        out = []
        for j, v in enumerate(row):
            try:
                out.append(parse_rational(v))
            except ValueError as exc:
                raise SchemaError(str(exc), f"{p}[{j}]") from exc
        parsed.append(tuple(out))
    try:
        return AssignmentMatrix(tuple(parsed))
    except ValueError as exc:
        raise NotBistochasticError(str(exc), f"{path}.rows") from exc


def parse_matrix(text: str | bytes) -> AssignmentMatrix:
    return matrix_from_doc(_loads(text))


def format_matrix(matrix: AssignmentMatrix) -> str:
    return dumps(matrix_to_doc(matrix))


# -- axiom reports ----------------------------------------------------------


def report_to_doc(report: AxiomReport) -> dict:
    doc: dict[str, Any] = {"axiom": report.axiom.value, "holds": report.holds, "checked": report.checked}
    cx = report.counterexample
    if cx is None:
        doc["counterexample"] = None
    else:
        doc["counterexample"] = {
            "profile": profile_to_doc(cx.profile),
            "profile_code": cx.profile.encode(),
            "agent": cx.agent,
            "misreport": list(cx.misreport.ranking) if cx.misreport else None,
            "witness": cx.witness,
            "dominating": matrix_to_doc(cx.dominating) if cx.dominating else None,
            "observed": matrix_to_doc(cx.observed) if cx.observed else None,
        }
    return doc


def report_from_doc(doc: Any) -> AxiomReport:
    cx = doc.get("counterexample")
    counterexample = None
    if cx is not None:
        counterexample = Counterexample(
            profile=profile_from_doc(cx["profile"], "$.counterexample.profile").profile,
            agent=cx["agent"],
            misreport=Preference(tuple(cx["misreport"])) if cx.get("misreport") else None,
            witness=cx.get("witness"),
            dominating=matrix_from_doc(cx["dominating"]) if cx.get("dominating") else None,
            observed=matrix_from_doc(cx["observed"]) if cx.get("observed") else None,
        )
    return AxiomReport(Axiom(doc["axiom"]), doc["holds"], counterexample, doc.get("checked", 0))


def format_report(report: AxiomReport) -> str:
    return dumps(report_to_doc(report))


def parse_report(text: str | bytes) -> AxiomReport:
    return report_from_doc(_loads(text))


# -- certificates -----------------------------------------------------------


def certificate_to_doc(cert: Certificate) -> dict:
    return {
        "format": CERTIFICATE_FORMAT,
        "n": cert.profile.n,
        "rule": cert.rule,
        "profile": [list(p.ranking) for p in cert.profile],
        "profile_code": cert.profile.encode(),
        "branch": cert.branch,
        "notes": list(cert.notes),
        "steps": [{"kind": s.kind, **s.payload} for s in cert.steps],
        "conclusion": [[format_rational(v) for v in row] for row in cert.conclusion.entries],
    }


def certificate_from_doc(doc: Any) -> Certificate:
    if _field(doc, "format") != CERTIFICATE_FORMAT:
        raise SchemaError(f"unsupported certificate format {doc['format']!r}", "$.format")
    profile = Profile.of(*_field(doc, "profile"))
    steps = []
    for k, s in enumerate(_field(doc, "steps")):
        payload = dict(s)
        kind = payload.pop("kind", None)
        try:
            steps.append(DerivationStep(kind, payload))
        except ValueError as exc:
            raise SchemaError(str(exc), f"$.steps[{k}]") from exc
    conclusion = matrix_from_doc({"n": doc["n"], "rows": doc["conclusion"]}, "$.conclusion")
    return Certificate(profile, tuple(steps), conclusion, doc.get("rule", "rule"), doc.get("branch"), tuple(doc.get("notes", ())))


def format_certificate(cert: Certificate) -> str:
    return dumps(certificate_to_doc(cert))


def parse_certificate(text: str | bytes) -> Certificate:
    return certificate_from_doc(_loads(text))


# -- table rules ------------------------------------------------------------


def table_rule_from_doc(doc: Any, name: str = "table") -> TableRule:
    """``{"n": n, "table": {"<profile code>": MatrixDocument, ...}}``; every profile must appear."""
    n = _int(_field(doc, "n"), "$.n")
    table = _field(doc, "table")
    if not isinstance(table, dict):
        raise SchemaError("expected an object keyed by profile code", "$.table")
    parsed = {}
    for key, m in table.items():
        try:
            code = int(key)
        except ValueError as exc:
            raise SchemaError(f"profile code {key!r} is not an integer", "$.table") from exc
        parsed[code] = matrix_from_doc(m, f"$.table[{key!r}]")
    try:
        return TableRule(n, parsed, doc.get("name", name))
    except ValueError as exc:
        raise SizeMismatchError(str(exc), "$.table") from exc


def table_rule_to_doc(rule: TableRule) -> dict:
    return {"n": rule.n, "name": rule.name, "table": {str(c): matrix_to_doc(m) for c, m in rule.items()}}


def parse_table_rule(text: str | bytes) -> TableRule:
    return table_rule_from_doc(_loads(text))


# -- counterexample CSV -----------------------------------------------------

CSV_FIELDS = ["axiom", "profile_code", "profile", "agent", "misreport", "witness"]


def counterexamples_csv(rows: Iterable[dict]) -> str:
    """CSV with one line per counterexample dict (as in a batch result)."""
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["profile"] = json.dumps(row.get("profile"), separators=(",", ":"))
        out["misreport"] = json.dumps(row.get("misreport"), separators=(",", ":"))
        writer.writerow(out)
    return buf.getvalue()
