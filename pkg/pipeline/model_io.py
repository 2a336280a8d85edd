"""
Self-describing JSON model files.

A file carries everything classify needs: taxonomy, vocabulary, selected
features, forest config, the stopword lists used in preprocessing, and the
trees. Each tree is a flat node table (root at index 0) so deep trees do not
hit JSON nesting limits.
"""

import json
import logging
from pathlib import Path

from pipeline.classifier import TextClassifier
from pipeline.errors import ModelFormatError
from pipeline.features import SelectedFeatures, Vocabulary
from pipeline.forest import ForestConfig, RandomForest, TreeNode
from pipeline.text import StopwordTable
from sources.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def tree_to_table(root: TreeNode) -> list:
    """Pre-order node table; internal nodes reference children by index."""
    table = []
    stack = [(root, None, None)]
    while stack:
        node, parent, side = stack.pop()
        index = len(table)
        if parent is not None:
            table[parent][side] = index
        if node.is_leaf:
            table.append({"counts": list(node.class_counts)})
            continue
        table.append({"feature": node.feature, "absent": None, "present": None})
        stack.append((node.present, index, "present"))
        stack.append((node.absent, index, "absent"))
    return table


def tree_from_table(table: list) -> TreeNode:
    if not table:
        raise ModelFormatError("tree has no nodes")
    nodes = [TreeNode() for _ in table]
    for node, raw in zip(nodes, table):
        if "counts" in raw:
            counts = tuple(int(c) for c in raw["counts"])
            if sum(counts) < 1:
                raise ModelFormatError("leaf with no samples")
            node.class_counts = counts
            continue
        try:
            node.feature = int(raw["feature"])
            node.absent = nodes[raw["absent"]]
            node.present = nodes[raw["present"]]
        except (KeyError, IndexError, TypeError) as e:
            raise ModelFormatError(f"malformed tree node {raw!r}: {e}")
    return nodes[0]


def model_to_dict(model: TextClassifier) -> dict:
    langs = sorted(set(model.table.languages))
    return {
        "format_version": FORMAT_VERSION,
        "taxonomy": list(model.taxonomy.names),
        "vocabulary": list(model.vocab.ngrams),
        "selected_features": {
            "k_requested": model.selected.k_requested,
            "entries": [[fid, score] for fid, score in model.selected.entries],
        },
        "config": model.forest.config.to_dict(),
        "preprocessing": {
            "fallback_languages": list(model.fallback_langs),
            "stopwords": {lang: sorted(model.table.words(lang)) for lang in langs},
        },
        "forest": {
            "label_count": model.forest.label_count,
            "feature_space": list(model.forest.feature_space),
            "trees": [tree_to_table(t) for t in model.forest.trees],
        },
    }


def model_from_dict(raw: dict) -> TextClassifier:
    if not isinstance(raw, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    try:
        taxonomy = Taxonomy(raw["taxonomy"])
        vocab = Vocabulary(raw["vocabulary"])
        sel = raw["selected_features"]
        selected = SelectedFeatures(
            entries=tuple((int(fid), float(score)) for fid, score in sel["entries"]),
            k_requested=int(sel["k_requested"]),
        )
        pre = raw["preprocessing"]
        table = StopwordTable(pre["stopwords"])
        forest_raw = raw["forest"]
        forest = RandomForest(
            trees=tuple(tree_from_table(t) for t in forest_raw["trees"]),
            config=ForestConfig(**raw["config"]),
            label_count=int(forest_raw["label_count"]),
            feature_space=tuple(int(f) for f in forest_raw["feature_space"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"model file is missing or has invalid content: {e}")

    if forest.label_count != len(taxonomy):
        raise ModelFormatError(f"forest predicts {forest.label_count} labels, taxonomy has {len(taxonomy)}")
    if len(vocab) != len(raw["vocabulary"]):
        raise ModelFormatError("vocabulary repeats an n-gram")
    if any(fid >= len(vocab) for fid in selected.id_set):
        raise ModelFormatError("selected feature id outside the vocabulary")
    return TextClassifier(
        taxonomy=taxonomy,
        table=table,
        fallback_langs=tuple(pre["fallback_languages"]),
        vocab=vocab,
        selected=selected,
        forest=forest,
    )


def save_model(model: TextClassifier, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, ensure_ascii=False)
    logger.info(f"Saved model to {path}")
    return path


def load_model(path) -> TextClassifier:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ModelFormatError(f"cannot read model {path}: {e}")
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"model {path} is not valid JSON: {e}")
    return model_from_dict(raw)
