"""Passability and relevance accounting over session records.

Passability is automatic (did the example execute without error);
relevance stays a manual judgment imported from a labels file.  Rates are
kept as exact rationals and rounded half-up to one decimal only when
rendered, so 29/40 is always exactly "72.5%".
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .sandbox import STATUS_PASS
from .session import FINAL_PASS, SessionRecord


class LabelError(ValueError):
    """Malformed or inconsistent relevance labels."""


class SummaryError(ValueError):
    """Records cannot be summarized (e.g. empty input)."""


@dataclass(frozen=True)
class RelevanceLabel:
    unit_name: str
    relevant: bool
    annotator: str = ""
    note: str = ""


@dataclass(frozen=True)
class EvaluationSummary:
    n_units: int
    n_pass_initial: int
    n_failed_initial: int
    n_fixed_by_repair: int
    n_pass_final: int
    n_relevant: int | None
    passability_initial: Fraction
    passability_final: Fraction
    relevance: Fraction | None


def percent(value: Fraction) -> str:
    """Render a rate as a percentage with one decimal, rounding half-up."""
    tenths_num = value.numerator * 1000
    tenths = (2 * tenths_num + value.denominator) // (2 * value.denominator)
    return f"{tenths // 10}.{tenths % 10}%"


def _initial_pass(record: SessionRecord) -> bool:
    return bool(record.attempts) and record.attempts[0].result.status == STATUS_PASS


def missing_label_units(
    records: list[SessionRecord], labels: list[RelevanceLabel]
) -> list[str]:
    labelled = {label.unit_name for label in labels}
    return [r.unit.qualified_name for r in records if r.unit.qualified_name not in labelled]


def summarize(
    records: list[SessionRecord], labels: list[RelevanceLabel] | None = None
) -> EvaluationSummary:
    """Aggregate counts and exact rates; pure in its inputs.

    Relevance is included only when the labels cover every unit; labels for
    unknown units are an error.
    """
    if not records:
        raise SummaryError("cannot summarize an empty record list")

    names = {r.unit.qualified_name for r in records}
    if labels:
        seen: set[str] = set()
        for label in labels:
            if label.unit_name not in names:
                raise LabelError(f"label for unknown unit {label.unit_name!r}")
            if label.unit_name in seen:
                raise LabelError(f"duplicate label for unit {label.unit_name!r}")
            seen.add(label.unit_name)

    n_units = len(records)
    n_pass_initial = sum(1 for r in records if _initial_pass(r))
    n_pass_final = sum(1 for r in records if r.final_status == FINAL_PASS)
    n_fixed_by_repair = sum(
        1 for r in records if r.final_status == FINAL_PASS and not _initial_pass(r)
    )

    n_relevant = None
    relevance = None
    if labels is not None and not missing_label_units(records, labels):
        n_relevant = sum(1 for label in labels if label.relevant)
        relevance = Fraction(n_relevant, n_units)

    return EvaluationSummary(
        n_units=n_units,
        n_pass_initial=n_pass_initial,
        n_failed_initial=n_units - n_pass_initial,
        n_fixed_by_repair=n_fixed_by_repair,
        n_pass_final=n_pass_final,
        n_relevant=n_relevant,
        passability_initial=Fraction(n_pass_initial, n_units),
        passability_final=Fraction(n_pass_final, n_units),
        relevance=relevance,
    )


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

def _rate_json(value: Fraction | None) -> dict | None:
    if value is None:
        return None
    return {"fraction": f"{value.numerator}/{value.denominator}", "percent": percent(value)}


def summary_to_json(summary: EvaluationSummary) -> dict:
    return {
        "n_units": summary.n_units,
        "n_pass_initial": summary.n_pass_initial,
        "n_failed_initial": summary.n_failed_initial,
        "n_fixed_by_repair": summary.n_fixed_by_repair,
        "n_pass_final": summary.n_pass_final,
        "n_relevant": summary.n_relevant,
        "passability_initial": _rate_json(summary.passability_initial),
        "passability_final": _rate_json(summary.passability_final),
        "relevance": _rate_json(summary.relevance),
    }


def summary_from_json(data: dict) -> EvaluationSummary:
    def _rate(entry: dict | None) -> Fraction | None:
        return None if entry is None else Fraction(entry["fraction"])

    return EvaluationSummary(
        n_units=data["n_units"],
        n_pass_initial=data["n_pass_initial"],
        n_failed_initial=data["n_failed_initial"],
        n_fixed_by_repair=data["n_fixed_by_repair"],
        n_pass_final=data["n_pass_final"],
        n_relevant=data["n_relevant"],
        passability_initial=_rate(data["passability_initial"]),
        passability_final=_rate(data["passability_final"]),
        relevance=_rate(data["relevance"]),
    )


def render_report(
    summary: EvaluationSummary,
    records: list[SessionRecord],
    labels: list[RelevanceLabel] | None = None,
) -> tuple[dict, str]:
    """Build the machine JSON report and the human-readable table."""
    by_name = {label.unit_name: label.relevant for label in labels or []}

    rows = []
    for record in records:
        relevant = by_name.get(record.unit.qualified_name)
        rows.append(
            {
                "unit": record.unit.qualified_name,
                "attempts": len(record.attempts),
                "final_status": record.final_status,
                "relevant": relevant,
                # labels judge the final example; record which attempt that was
                "labeled_attempt": (
                    len(record.attempts) - 1
                    if relevant is not None and record.attempts
                    else None
                ),
            }
        )

    report = {"summary": summary_to_json(summary), "units": rows}

    name_width = max([len(r["unit"]) for r in rows] + [len("unit")])
    lines = [
        f"{'unit':<{name_width}}  attempts  final    relevant",
        "-" * (name_width + 30),
    ]
    for row in rows:
        relevant = "-" if row["relevant"] is None else ("yes" if row["relevant"] else "no")
        lines.append(
            f"{row['unit']:<{name_width}}  {row['attempts']:>8}  {row['final_status']:<7}  {relevant}"
        )
    lines.append("")
    lines.append(
        f"Passability (initial): {summary.n_pass_initial}/{summary.n_units}"
        f" ({percent(summary.passability_initial)})"
    )
    lines.append(
        f"Passability (final):   {summary.n_pass_final}/{summary.n_units}"
        f" ({percent(summary.passability_final)})"
    )
    if summary.relevance is not None:
        lines.append(
            f"Relevance:             {summary.n_relevant}/{summary.n_units}"
            f" ({percent(summary.relevance)})"
        )
    return report, "\n".join(lines) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


# --------------------------------------------------------------------------
# Labels I/O
# --------------------------------------------------------------------------

_LABEL_FIELDS = ("unit_name", "relevant", "annotator", "note")


def _parse_bool(raw: object, where: str) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, str) and raw.strip().lower() in ("true", "false"):
        return raw.strip().lower() == "true"
    raise LabelError(f"{where}: 'relevant' must be true or false, got {raw!r}")


def import_labels(path: str | Path) -> list[RelevanceLabel]:
    """Load and validate a labels file (CSV with header, or a JSON array)."""
    path = Path(path)
    rows: list[tuple[str, dict]] = []
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise LabelError("labels JSON must be a top-level array")
        rows = [(f"entry {i}", entry) for i, entry in enumerate(data)]
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return []
            unknown = set(reader.fieldnames) - set(_LABEL_FIELDS)
            if "unit_name" not in reader.fieldnames or "relevant" not in reader.fieldnames:
                raise LabelError("labels CSV must carry unit_name and relevant columns")
            if unknown:
                raise LabelError(f"labels CSV has unknown columns: {sorted(unknown)}")
            rows = [(f"row {i}", rec) for i, rec in enumerate(reader, start=2)]

    labels = []
    seen: set[str] = set()
    for where, rec in rows:
        if not isinstance(rec, dict):
            raise LabelError(f"{where}: expected an object")
        if None in rec:
            raise LabelError(f"{where}: too many fields")
        name = (rec.get("unit_name") or "").strip()
        if not name:
            raise LabelError(f"{where}: missing unit_name")
        if name in seen:
            raise LabelError(f"{where}: duplicate label for unit {name!r}")
        seen.add(name)
        labels.append(
            RelevanceLabel(
                unit_name=name,
                relevant=_parse_bool(rec.get("relevant"), where),
                annotator=(rec.get("annotator") or "").strip(),
                note=(rec.get("note") or "").strip(),
            )
        )
    return labels


def normalize_labels(path: str | Path) -> list[RelevanceLabel]:
    """Validate a labels file and rewrite it as canonical CSV in place."""
    labels = import_labels(path)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_LABEL_FIELDS)
        for label in labels:
            writer.writerow(
                [label.unit_name, "true" if label.relevant else "false", label.annotator, label.note]
            )
    return labels
