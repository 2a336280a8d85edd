import json

import pytest

from pipeline.synthetic import manifest_entry, write_csv
from pipeline.text import StopwordTable
from sources.taxonomy import Taxonomy
from tests.helpers import synthetic_events

THREE_LABELS = ("affected_individuals", "infrastructure_utilities", "caution_advice")


@pytest.fixture
def taxonomy():
    return Taxonomy(THREE_LABELS)


@pytest.fixture(scope="session")
def table():
    return StopwordTable.load()


@pytest.fixture
def crisis_env(tmp_path, taxonomy):
    """
    Factory writing synthetic event CSVs, a manifest and a run config.
    Returns the config path.
    """
    def build(experiments, events=None, forest=None, gate=None, name="config.json", **extra):
        events = events if events is not None else synthetic_events(taxonomy)
        data_dir = tmp_path / "data"
        data_dir.mkdir(exist_ok=True)
        entries = []
        for ds in events:
            csv_path = write_csv(ds, data_dir / f"{ds.short_name}.csv")
            entries.append(manifest_entry(ds, csv_path.name))
        manifest = {"labels": list(taxonomy.names), "datasets": entries}
        (data_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")

        cfg = {
            "master_seed": 7,
            "feature_k": 200,
            "forest": forest or {"n_trees": 10},
            "manifest_path": "data/manifest.json",
            "experiments": experiments,
        }
        if gate is not None:
            cfg["gate"] = gate
        cfg.update(extra)
        path = tmp_path / name
        path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
        return path

    return build
