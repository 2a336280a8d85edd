"""Builders shared across the test modules."""

import json
from datetime import date

from pipeline.config import parse_config
from pipeline.harness import ExperimentRunner
from pipeline.synthetic import generate_event, signal_vocabulary
from sources.corpus import Dataset, Message

BASIC_EXPERIMENTS = [
    {"name": "C-SS", "exp_type": "SS", "target": "EVC", "sources": ["EVA"]},
    {"name": "C-MS", "exp_type": "MS", "target": "EVC", "sources": ["EVA", "EVB"]},
    {"name": "C-MSWT", "exp_type": "MSWT", "target": "EVC",
     "sources": ["EVA", "EVB", {"dataset": "EVC", "portion": "train_split"}]},
]


def make_dataset(name, rows, taxonomy, event_type="earthquake", when=date(2013, 1, 1), order=0):
    """rows: (id, text, label name[, lang]) tuples."""
    messages = []
    for row in rows:
        mid, text, label = row[:3]
        lang = row[3] if len(row) > 3 else None
        messages.append(Message(id=mid, text=text, label=taxonomy.lookup(label), lang=lang))
    return Dataset(short_name=name, event_type=event_type, date=when, messages=tuple(messages), order=order)


def write_rows(path, header, rows):
    lines = [",".join(header)] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def synthetic_events(taxonomy, seed=0, sizes=(120, 120, 120), specific_rate=0.5):
    """Three same-type synthetic events A, B, C (dated in that order)."""
    shared = signal_vocabulary(len(taxonomy), per_class=15)
    events = []
    for i, (name, n) in enumerate(zip(("EVA", "EVB", "EVC"), sizes)):
        specific = signal_vocabulary(len(taxonomy), per_class=15, prefix=f"{name.lower()}s")
        events.append(generate_event(
            name, n, taxonomy, seed=seed * 100 + i, shared=shared, specific=specific,
            specific_rate=specific_rate, when=date(2013, 1 + i, 1), order=i,
        ))
    return events


def build_runner(events, experiments, taxonomy, table, splits=None, **overrides):
    """ExperimentRunner over in-memory datasets; overrides go into the run config."""
    raw = {"manifest_path": "unused.json", "master_seed": 7, "feature_k": 200,
           "forest": {"n_trees": 10}, "experiments": experiments}
    raw.update(overrides)
    cfg = parse_config(json.dumps(raw))
    return ExperimentRunner(cfg, {ds.short_name: ds for ds in events}, taxonomy, table, splits=splits)
