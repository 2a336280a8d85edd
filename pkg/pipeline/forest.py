"""
Random Forest over sparse binary feature vectors.

Each tree is grown on a bootstrap sample; every split tests the presence of
one feature, chosen by Gini impurity among a random subset of candidates.
Trees store class counts at their leaves and the forest averages the leaf
distributions, so predictions are graded scores usable for ROC/AUC.

A node stops growing only when it is pure, too small, at max_depth, or when
no candidate separates it into two non-empty parts. A split whose Gini
decrease is zero is still taken: on XOR-shaped data every first split has
zero decrease, and the tree must still fit consistent labels exactly.

Randomness comes only from numpy Generators seeded with mix_seed(seed, i),
so a forest is identical whatever order or thread its trees are trained on.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from pipeline.errors import PipelineError

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix_seed(seed: int, index: int) -> int:
    """splitmix64 finalizer over (seed, index): a fixed 64-bit mixing function."""
    z = (seed + (index + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features_per_split: Union[str, int] = "sqrt"
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if not isinstance(self.n_trees, int) or self.n_trees < 1:
            raise ValueError(f"n_trees must be an integer >= 1, got {self.n_trees!r}")
        if not isinstance(self.min_samples_split, int) or self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be an integer >= 2, got {self.min_samples_split!r}")
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 0):
            raise ValueError(f"max_depth must be a non-negative integer or null, got {self.max_depth!r}")
        mf = self.max_features_per_split
        if mf != "sqrt" and (isinstance(mf, bool) or not isinstance(mf, int) or mf < 1):
            raise ValueError(f"max_features_per_split must be 'sqrt' or an integer >= 1, got {mf!r}")

    def candidates_per_split(self, n_features: int) -> int:
        if self.max_features_per_split == "sqrt":
            return max(1, math.isqrt(n_features))
        return min(self.max_features_per_split, n_features)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_features_per_split": self.max_features_per_split,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }


@dataclass
class TreeNode:
    """Internal node (feature, absent, present) or leaf (class_counts)."""
    feature: Optional[int] = None
    absent: Optional["TreeNode"] = None
    present: Optional["TreeNode"] = None
    class_counts: Optional[tuple] = None

    @property
    def is_leaf(self) -> bool:
        return self.class_counts is not None

    def leaf_for(self, active: frozenset) -> "TreeNode":
        node = self
        while not node.is_leaf:
            node = node.present if node.feature in active else node.absent
        return node

    def distribution(self, active: frozenset) -> np.ndarray:
        counts = np.asarray(self.leaf_for(active).class_counts, dtype=np.float64)
        return counts / counts.sum()


@dataclass(frozen=True)
class RandomForest:
    trees: tuple
    config: ForestConfig
    label_count: int
    feature_space: tuple

    def predict_proba(self, x) -> np.ndarray:
        return predict_proba(self, x)

    def predict_label(self, x) -> int:
        return predict_label(self, x)


class TrainingMatrix:
    """Dense 0/1 view of the training samples over a fixed feature space."""

    def __init__(self, samples: Sequence, feature_space: Sequence[int], label_count: int):
        self.feature_space = tuple(feature_space)
        column = {fid: j for j, fid in enumerate(self.feature_space)}
        self.X = np.zeros((len(samples), len(self.feature_space)), dtype=np.int8)
        labels = []
        for i, (vec, label) in enumerate(samples):
            cols = [column[f] for f in vec if f in column]
            self.X[i, cols] = 1
            labels.append(getattr(label, "id", label))
        self.y = np.asarray(labels, dtype=np.int64)
        self.label_count = label_count
        self.onehot = np.eye(label_count, dtype=np.int64)[self.y]


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of each row of class counts (rows of zeros score 0)."""
    counts = np.atleast_2d(counts).astype(np.float64)
    n = counts.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.where(n > 0, (counts ** 2).sum(axis=1) / np.maximum(n, 1) ** 2, 1.0)
    return 1.0 - sq


def best_split(X_cand: np.ndarray, onehot_node: np.ndarray, candidates: np.ndarray):
    """
    X_cand holds the node rows restricted to the candidate columns, in
    candidate order. Among the candidates, the one whose presence/absence partition gives the
    largest Gini decrease. Returns (column, decrease), or (None, 0.0) when no
    candidate splits the node into two non-empty parts. Ties go to the earlier candidate.
    """
    m = X_cand.shape[0]
    parent = onehot_node.sum(axis=0)
    present = X_cand.T.astype(np.int64) @ onehot_node
    absent = parent[np.newaxis, :] - present
    n_present = present.sum(axis=1)
    n_absent = m - n_present
    weighted = (n_present * gini(present) + n_absent * gini(absent)) / m
    decrease = gini(parent)[0] - weighted
    valid = (n_present > 0) & (n_absent > 0)
    if not valid.any():
        return None, 0.0
    decrease = np.where(valid, decrease, -np.inf)
    best = int(np.argmax(decrease))
    return int(candidates[best]), float(decrease[best])


def _grow(data: TrainingMatrix, rng_seed: int, cfg: ForestConfig) -> TreeNode:
    rng = np.random.default_rng(rng_seed)
    n, n_features = data.X.shape
    if cfg.bootstrap:
        rows = rng.integers(0, n, size=n)
    else:
        rows = np.arange(n)
    n_candidates = cfg.candidates_per_split(n_features) if n_features else 0

    root = TreeNode()
    stack = [(root, rows, 0)]
    # Depth-first, present branch first; the rng is consumed in this fixed order.
    while stack:
        node, idx, depth = stack.pop()
        onehot = data.onehot[idx]
        counts = onehot.sum(axis=0)
        stop = (
            np.count_nonzero(counts) <= 1
            or len(idx) < cfg.min_samples_split
            or (cfg.max_depth is not None and depth >= cfg.max_depth)
            or n_candidates == 0
        )
        column = None
        if not stop:
            candidates = rng.choice(n_features, size=n_candidates, replace=False)
            column, _ = best_split(data.X[np.ix_(idx, candidates)], onehot, candidates)
        if column is None:
            node.class_counts = tuple(int(c) for c in counts)
            continue

        mask = data.X[idx, column].astype(bool)
        node.feature = data.feature_space[column]
        node.absent, node.present = TreeNode(), TreeNode()
        stack.append((node.absent, idx[~mask], depth + 1))
        stack.append((node.present, idx[mask], depth + 1))
    return root


def train_tree(samples: Sequence, rng_seed: int, cfg: ForestConfig,
               feature_space: Optional[Sequence[int]] = None,
               label_count: Optional[int] = None) -> TreeNode:
    """
    Grow one tree on (FeatureVector, label) samples.

    feature_space defaults to every feature active in the samples;
    label_count defaults to the largest label id + 1.
    """
    if not samples:
        raise PipelineError("cannot train a tree on zero samples")
    space, n_labels = _resolve_space(samples, feature_space, label_count)
    return _grow(TrainingMatrix(samples, space, n_labels), rng_seed, cfg)


def _resolve_space(samples, feature_space, label_count):
    if feature_space is None:
        feature_space = sorted({f for vec, _ in samples for f in vec})
    if label_count is None:
        label_count = 1 + max(getattr(label, "id", label) for _, label in samples)
    return tuple(feature_space), label_count


def train_forest(train: Sequence, cfg: ForestConfig,
                 feature_space: Optional[Sequence[int]] = None,
                 label_count: Optional[int] = None,
                 n_jobs: int = 1) -> RandomForest:
    """Train cfg.n_trees trees; tree i uses seed mix_seed(cfg.seed, i)."""
    if not train:
        raise PipelineError("training set is empty")
    space, n_labels = _resolve_space(train, feature_space, label_count)
    if not space:
        raise PipelineError("feature space is empty")

    data = TrainingMatrix(train, space, n_labels)
    seeds = [mix_seed(cfg.seed, i) for i in range(cfg.n_trees)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            trees = list(executor.map(lambda s: _grow(data, s, cfg), seeds))
    else:
        trees = [_grow(data, s, cfg) for s in seeds]

    logger.info(f"Trained {len(trees)} trees on {len(train)} samples, {len(space)} features")
    return RandomForest(trees=tuple(trees), config=cfg, label_count=n_labels, feature_space=space)


def predict_proba(model: RandomForest, x) -> np.ndarray:
    """Mean of the trees' normalized leaf class counts."""
    active = frozenset(x)
    total = np.zeros(model.label_count, dtype=np.float64)
    for tree in model.trees:
        total += tree.distribution(active)
    return total / len(model.trees)


def predict_label(model: RandomForest, x) -> int:
    """argmax of predict_proba; exact ties go to the smallest label id."""
    return int(np.argmax(predict_proba(model, x)))


def predict_proba_many(model: RandomForest, vectors: Sequence) -> np.ndarray:
    if not vectors:
        return np.zeros((0, model.label_count))
    return np.vstack([predict_proba(model, x) for x in vectors])
