"""
Crisis Domain Adaptation Harness: command line
Trains and evaluates crisis-message classifiers across events:
  run            execute an experiment matrix and write its reports
  classify       label a CSV of messages with a saved model
  split          write the fixed train/test splits only
  report         re-render report.md from a report.csv
  tag-languages  add a lang column to a dataset CSV

Usage: python main.py run --config configs/earthquakes.json --out results/
Exit codes: 0 success, 1 config/validation error, 2 runtime/data error.
"""

import argparse
import logging
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from pipeline.config import load_config
from pipeline.errors import ConfigError, CrisdaError, DataLoadError
from pipeline.gate import run_gate_checks
from pipeline.harness import ExperimentRunner
from pipeline.langid import identify_language, load_profiles
from pipeline.model_io import load_model, save_model
from pipeline.report import (
    GATE_AUDIT_CSV,
    PER_CLASS_CSV,
    REPORT_CSV,
    REPORT_MD,
    SPLITS_JSON,
    emit_report,
    read_report_csv,
    write_gate_audit,
    write_per_class,
    write_splits,
)

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "CRISDA_LOG_LEVEL"

# ── Colors (stderr summary only, and only on a terminal) ────────────
GREEN = "\033[92m"
YELLOW = "\033[93m"
BOLD = "\033[1m"
DIM = "\033[2m"
RESET = "\033[0m"


def _slug(s: str, max_len: int = 60) -> str:
    """Short sanitized string for use in filenames."""
    s = re.sub(r"[^\w\s.-]", "", s)[:max_len].strip()
    return re.sub(r"[\s]+", "_", s) or "experiment"


def _paint(text: str, *codes: str) -> str:
    if not sys.stderr.isatty():
        return text
    return "".join(codes) + text + RESET


def _read_input_csv(path, required: tuple) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataLoadError(f"input not found: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataLoadError(f"malformed input {path}: {e}")
    df.columns = [str(c).strip().lower() for c in df.columns]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DataLoadError(f"{path} lacks column(s) {', '.join(missing)}")
    return df


# ── Commands ────────────────────────────────────────────────────────

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    jobs = args.jobs or cfg.jobs

    runner = ExperimentRunner.from_config(cfg)
    report = runner.run_matrix(jobs)
    audit = run_gate_checks(runner, cfg.gate)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, "csv", out / REPORT_CSV)
    emit_report(report, "markdown", out / REPORT_MD)
    write_per_class(report, runner.taxonomy.names, out / PER_CLASS_CSV)
    write_gate_audit(audit, out / GATE_AUDIT_CSV)
    write_splits(runner.splits_payload(), out / SPLITS_JSON)

    for result in report.results:
        if result.classifier is None:
            continue
        name = _slug(result.row.name)
        if args.save_models:
            save_model(result.classifier, out / "models" / f"{name}.json")
        if args.dump_features:
            (out / "features").mkdir(exist_ok=True)
            result.classifier.selected.dump(out / "features" / f"{name}.csv", result.classifier.vocab)

    display(report)
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    df = _read_input_csv(args.input, ("id", "text"))
    has_lang = "lang" in df.columns

    texts, langs = [], []
    for i, rec in enumerate(df.to_dict("records")):
        rownum = i + 2
        mid, text = rec["id"], rec["text"]
        if not isinstance(mid, str) or not mid.strip():
            raise DataLoadError("empty or missing id", row=rownum)
        if not isinstance(text, str):
            raise DataLoadError(f"missing text for '{mid}'", row=rownum)
        texts.append(text)
        lang = rec["lang"] if has_lang and isinstance(rec["lang"], str) else ""
        langs.append(lang.strip().lower() or None)

    probas = model.predict_proba(texts, langs)
    best = np.argmax(probas, axis=1) if len(texts) else np.zeros(0, dtype=int)
    out = pd.DataFrame({
        "id": df["id"].tolist(),
        "predicted_label": [model.taxonomy.by_id(int(b)).name for b in best],
        "confidence": [float(probas[i, b]) for i, b in enumerate(best)],
    }, columns=["id", "predicted_label", "confidence"])
    out.to_csv(args.out, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Classified {len(out)} messages into {args.out}")
    return 0


def cmd_split(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    runner = ExperimentRunner.from_config(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_splits(runner.splits_payload(), out / SPLITS_JSON)
    return 0


def cmd_report(args) -> int:
    rows = read_report_csv(args.input)
    emit_report(rows, "markdown", args.out)
    return 0


def cmd_tag_languages(args) -> int:
    profiles = load_profiles(args.profiles)
    df = _read_input_csv(args.input, ("text",))
    if "lang" not in df.columns:
        df["lang"] = ""

    tagged = 0
    tags = []
    for existing, text in zip(df["lang"].tolist(), df["text"].tolist()):
        existing = existing.strip().lower() if isinstance(existing, str) else ""
        if existing and not args.overwrite:
            tags.append(existing)
            continue
        tags.append(identify_language(text if isinstance(text, str) else "", profiles).tag)
        tagged += 1
    df["lang"] = tags
    df.to_csv(args.out, index=False, encoding="utf-8", lineterminator="\n")

    counts = pd.Series(tags).value_counts().sort_index()
    summary = ", ".join(f"{tag}={n}" for tag, n in counts.items())
    print(_paint(f"  Tagged {tagged} of {len(df)} messages ({summary})", DIM), file=sys.stderr)
    return 0


def display(report):
    """Print a short per-experiment summary to stderr."""
    for row in report.rows:
        if row.status == "ok":
            line = (f"  {row.exp_type:<5} {row.name:<24} {row.target_test:<12} "
                    f"F1 {row.f1:.2f}  AUC {row.auc:.2f}")
            print(_paint(line, GREEN), file=sys.stderr)
        else:
            print(_paint(f"  {row.exp_type:<5} {row.name:<24} error: {row.error}", YELLOW), file=sys.stderr)


# ── Entry point ─────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crisda", description="Crisis short-text domain adaptation harness")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment matrix")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--jobs", type=int, help="worker threads (outputs do not depend on it)")
    run.add_argument("--save-models", action="store_true", help="write models/<experiment>.json")
    run.add_argument("--dump-features", action="store_true", help="write features/<experiment>.csv")
    run.set_defaults(handler=cmd_run)

    classify = sub.add_parser("classify", help="label messages with a saved model")
    classify.add_argument("--model", required=True)
    classify.add_argument("--input", required=True, help="CSV with id,text[,lang]")
    classify.add_argument("--out", required=True)
    classify.set_defaults(handler=cmd_classify)

    split = sub.add_parser("split", help="write splits.json only")
    split.add_argument("--config", required=True)
    split.add_argument("--out", required=True)
    split.add_argument("--seed", type=int)
    split.set_defaults(handler=cmd_split)

    report = sub.add_parser("report", help="re-render markdown from report.csv")
    report.add_argument("--input", required=True)
    report.add_argument("--out", required=True)
    report.set_defaults(handler=cmd_report)

    tag = sub.add_parser("tag-languages", help="add a lang column to a dataset CSV")
    tag.add_argument("--input", required=True)
    tag.add_argument("--out", required=True)
    tag.add_argument("--profiles", help="profile directory (default: built-in or $CRISDA_LANGID_DIR)")
    tag.add_argument("--overwrite", action="store_true", help="re-tag rows that already have a lang")
    tag.set_defaults(handler=cmd_tag_languages)
    return parser


def main(argv=None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    level = "INFO" if args.verbose else os.getenv(LOG_LEVEL_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")

    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")

    try:
        return args.handler(args)
    except ConfigError as e:
        print(_paint(f"config error: {e}", BOLD, YELLOW), file=sys.stderr)
        return 1
    except (CrisdaError, OSError) as e:
        print(_paint(f"error: {e}", BOLD, YELLOW), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
