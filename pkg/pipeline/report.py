"""
Report writers: the matrix report (CSV / markdown), per-class metrics,
the gate audit and the persisted splits.
"""

import json
import logging
from pathlib import Path
from typing import Sequence

import pandas as pd

from pipeline.errors import DataLoadError
from pipeline.gate import AUDIT_COLUMNS
from pipeline.harness import MatrixReport, ReportRow

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "name", "exp_type", "train_spec", "target_test",
    "precision", "recall", "f1", "auc",
    "train_size", "test_size", "test_set_digest", "domain", "status", "error",
]
PER_CLASS_COLUMNS = ["experiment", "class", "support", "precision", "recall", "f1", "auc", "flags"]
METRIC_COLUMNS = ("precision", "recall", "f1", "auc")
INT_COLUMNS = ("train_size", "test_size")

REPORT_CSV = "report.csv"
REPORT_MD = "report.md"
PER_CLASS_CSV = "per_class.csv"
GATE_AUDIT_CSV = "gate_audit.csv"
SPLITS_JSON = "splits.json"


def _write_csv(records: list, columns: list, path) -> None:
    # object dtype keeps ints as ints and writes None as an empty cell
    df = pd.DataFrame(records, columns=columns, dtype=object)
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Wrote {path} ({len(records)} rows)")


def _row_dict(row: ReportRow) -> dict:
    return {c: getattr(row, c) for c in REPORT_COLUMNS}


def emit_report(report, fmt: str, path) -> Path:
    """Write report rows as "csv" (full precision) or "markdown" (2 decimals)."""
    rows = report.rows if isinstance(report, MatrixReport) else tuple(report)
    path = Path(path)
    if fmt == "csv":
        _write_csv([_row_dict(r) for r in rows], REPORT_COLUMNS, path)
    elif fmt == "markdown":
        path.write_text(render_markdown(rows), encoding="utf-8")
        logger.info(f"Wrote {path}")
    else:
        raise ValueError(f"unknown report format '{fmt}' (expected csv or markdown)")
    return path


def _cell(value) -> str:
    return "" if value is None else f"{value:.2f}"


def render_markdown(rows: Sequence[ReportRow]) -> str:
    """One table per target, in order of first appearance."""
    if not rows:
        return "_No experiments._\n"
    by_target = {}
    for row in rows:
        by_target.setdefault(row.target, []).append(row)

    out = []
    for group in by_target.values():
        out.append(f"### Target: {group[0].target_test}")
        out.append("")
        out.append("| Type | Experiment | Training data | Precision | Recall | F-measure | AUC |")
        out.append("|------|------------|---------------|-----------|--------|-----------|-----|")
        for r in group:
            if r.status != "ok":
                metrics = f"error: {r.error.replace('|', '/')} | | | "
            else:
                metrics = " | ".join(_cell(getattr(r, c)) for c in METRIC_COLUMNS)
            out.append(f"| {r.exp_type} | {r.name} | {r.train_spec} | {metrics} |")
        out.append("")
    return "\n".join(out)


def write_per_class(report: MatrixReport, label_names: Sequence[str], path) -> None:
    records = []
    for result in report.results:
        if result.evaluation is None:
            continue
        for rec in result.evaluation.per_class_rows(label_names):
            records.append({"experiment": result.row.name, **rec})
    _write_csv(records, PER_CLASS_COLUMNS, path)


def write_gate_audit(audit_rows: list, path) -> None:
    _write_csv(audit_rows, AUDIT_COLUMNS, path)


def write_splits(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info(f"Wrote {path}")


def read_report_csv(path) -> list:
    """Parse a report.csv written by emit_report back into ReportRows."""
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataLoadError(f"report not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataLoadError(f"cannot parse report {path}: {e}")

    missing = [c for c in REPORT_COLUMNS if c not in df.columns]
    if missing:
        raise DataLoadError(f"{path} lacks report column(s) {', '.join(missing)}")

    rows = []
    for i, rec in enumerate(df.to_dict("records")):
        try:
            values = {c: rec[c] for c in REPORT_COLUMNS}
            for c in METRIC_COLUMNS:
                values[c] = float(rec[c]) if rec[c] != "" else None
            for c in INT_COLUMNS:
                values[c] = int(rec[c]) if rec[c] != "" else None
        except ValueError as e:
            raise DataLoadError(f"{path}: {e}", row=i + 2)
        rows.append(ReportRow(**values))
    return rows
