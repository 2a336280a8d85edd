"""
Experiment Runner
Loads the datasets a config refers to, fixes one split per dataset, and runs
the SS / MS / MSWT / SC experiment matrix against each target's held-out test set.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from pipeline.classifier import TextClassifier, fit_classifier
from pipeline.config import ExperimentSpec, RunConfig, SourcePortion
from pipeline.errors import ConfigError, CrisdaError, DataLoadError
from pipeline.forest import mix_seed
from pipeline.metrics import EvalReport, evaluate
from pipeline.text import StopwordTable
from sources.corpus import filter_language, load_dataset, make_split
from sources.manifest import Manifest, load_manifest

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_ERROR = "error"


def stable_hash(text: str) -> int:
    """First 8 bytes of sha256(text), big-endian. Unlike hash(), stable across processes."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def split_seed(master_seed: int, short_name: str) -> int:
    return mix_seed(master_seed, stable_hash(short_name))


def experiment_seed(master_seed: int, name: str) -> int:
    return mix_seed(master_seed, stable_hash(f"experiment:{name}"))


def percent(frac: Fraction) -> str:
    value = frac * 100
    if value.denominator == 1:
        return f"{value.numerator}%"
    return f"{float(value):g}%"


@dataclass(frozen=True)
class ReportRow:
    name: str
    exp_type: str
    train_spec: str
    target_test: str
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    auc: Optional[float]
    train_size: Optional[int]
    test_size: Optional[int]
    test_set_digest: str
    domain: str
    status: str = STATUS_OK
    error: str = ""

    @property
    def target(self) -> str:
        return self.target_test.split(" ", 1)[0]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    row: ReportRow
    evaluation: Optional[EvalReport] = None
    classifier: Optional[TextClassifier] = None


@dataclass(frozen=True)
class MatrixReport:
    rows: tuple
    results: tuple = ()

    def __len__(self) -> int:
        return len(self.rows)


def assemble_training_set(spec: ExperimentSpec, datasets: dict, splits: dict) -> list:
    """
    Concatenate the experiment's SourcePortions into (Message, origin tag) pairs.

    "full" takes every message; "train_split" takes the target's train ids.
    A language_filter is applied before the portion is taken.
    """
    names = [s.dataset for s in spec.sources]
    if len(set(names)) != len(names):
        raise ConfigError(f"experiment '{spec.name}': duplicate dataset in sources")

    target_split = splits[spec.target]
    held_out = set(target_split.test_ids)
    training = []
    for portion in spec.sources:
        for message in portion_messages(portion, datasets, splits):
            if portion.dataset == spec.target and message.id in held_out:
                raise ConfigError(f"experiment '{spec.name}': target test message '{message.id}' reached training")
            training.append((message, portion.display_name()))

    if not training:
        raise ConfigError(f"experiment '{spec.name}': assembled training set is empty")
    return training


def portion_messages(portion: SourcePortion, datasets: dict, splits: dict,
                     train_ids: Optional[frozenset] = None) -> list:
    ds = datasets[portion.dataset]
    if portion.language_filter:
        ds = filter_language(ds, portion.language_filter)
    if portion.portion == "full":
        return list(ds.messages)
    allowed = train_ids if train_ids is not None else frozenset(splits[portion.dataset].train_ids)
    return [m for m in ds.messages if m.id in allowed]


def domain_relation(spec: ExperimentSpec, datasets: dict) -> str:
    target_type = datasets[spec.target].event_type
    same = [datasets[s.dataset].event_type == target_type for s in spec.sources]
    if all(same):
        return "in-domain"
    if not any(same):
        return "cross-domain"
    return "mixed"


class ExperimentRunner:
    """Runs experiments from one RunConfig against frozen datasets and splits."""

    def __init__(self, cfg: RunConfig, datasets: dict, taxonomy, table: StopwordTable,
                 splits: Optional[dict] = None):
        self.cfg = cfg
        self.datasets = datasets
        self.taxonomy = taxonomy
        self.table = table
        self.fallback_langs = tuple(cfg.stopword_languages or table.languages)
        self.splits = splits if splits is not None else {
            name: make_split(ds, cfg.test_fraction, split_seed(cfg.master_seed, name))
            for name, ds in datasets.items()
        }

    @classmethod
    def from_config(cls, cfg: RunConfig, table: Optional[StopwordTable] = None,
                    manifest: Optional[Manifest] = None) -> "ExperimentRunner":
        """
        Load every dataset the experiments and gate checks refer to.

        Raises ConfigError for names missing from the manifest and
        DataLoadError when a CSV cannot be ingested.
        """
        manifest = manifest or load_manifest(cfg.manifest_path)
        referenced = referenced_datasets(cfg)
        known = set(manifest.names())
        unknown = [n for n in referenced if n not in known]
        if unknown:
            raise ConfigError(f"dataset(s) not in manifest {cfg.manifest_path}: {', '.join(unknown)}")

        datasets = {}
        for name in referenced:
            entry = manifest.entry(name)
            datasets[name] = load_dataset(entry.path, entry, manifest.taxonomy)
            if not datasets[name].messages:
                raise DataLoadError(f"{name}: dataset has no messages")

        warn_chronology(cfg, datasets)
        return cls(cfg, datasets, manifest.taxonomy, table or StopwordTable.load())

    def fit(self, messages: list, seed: int, n_jobs: int = 1) -> TextClassifier:
        forest_cfg = replace(self.cfg.forest, seed=seed)
        return fit_classifier(messages, self.taxonomy, self.table, self.fallback_langs,
                              self.cfg.feature_k, forest_cfg, n_jobs=n_jobs)

    def test_messages(self, target: str) -> list:
        return self.datasets[target].select(self.splits[target].test_ids)

    def run_experiment(self, spec: ExperimentSpec, n_jobs: int = 1) -> ExperimentResult:
        """
        preprocess → vocabulary → IG top-K → forest, all on the assembled
        training set, then evaluate on the target's fixed test split.
        """
        logger.info(f"Running {spec.name} ({spec.exp_type}) → {spec.target}")
        training = assemble_training_set(spec, self.datasets, self.splits)
        messages = [m for m, _ in training]

        classifier = self.fit(messages, experiment_seed(self.cfg.master_seed, spec.name), n_jobs)
        test = self.test_messages(spec.target)
        probas = classifier.predict_messages(test)
        report = evaluate(probas, [m.label.id for m in test], len(self.taxonomy))

        row = self._row(spec, report=report, train_size=len(messages))
        logger.info(
            f"{spec.name}: P={report.precision:.4f} R={report.recall:.4f} "
            f"F1={report.f1:.4f} AUC={report.auc:.4f} (train {len(messages)}, test {len(test)})"
        )
        return ExperimentResult(row=row, evaluation=report, classifier=classifier)

    def run_matrix(self, jobs: Optional[int] = None) -> MatrixReport:
        """One row per experiment, in config order. Failures become error rows."""
        experiments = self.cfg.experiments
        jobs = jobs or self.cfg.jobs
        if not experiments:
            return MatrixReport(rows=())

        workers = min(jobs, len(experiments))
        tree_jobs = jobs if workers <= 1 else 1
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(lambda s: self._run_safely(s, tree_jobs), experiments))
        else:
            results = [self._run_safely(s, tree_jobs) for s in experiments]
        return MatrixReport(rows=tuple(r.row for r in results), results=tuple(results))

    def _run_safely(self, spec: ExperimentSpec, n_jobs: int) -> ExperimentResult:
        try:
            return self.run_experiment(spec, n_jobs)
        except (CrisdaError, ValueError) as e:
            logger.error(f"Experiment {spec.name} failed: {e}")
            return ExperimentResult(row=self._row(spec, error=str(e)))

    def _row(self, spec: ExperimentSpec, report: Optional[EvalReport] = None,
             train_size: Optional[int] = None, error: str = "") -> ReportRow:
        split = self.splits[spec.target]
        train_pct = percent(1 - self.cfg.test_fraction)
        parts = [
            f"{s.display_name()} ({'100%' if s.portion == 'full' else train_pct})"
            for s in spec.sources
        ]
        return ReportRow(
            name=spec.name,
            exp_type=spec.exp_type,
            train_spec=" + ".join(parts),
            target_test=f"{spec.target} ({percent(self.cfg.test_fraction)})",
            precision=report.precision if report else None,
            recall=report.recall if report else None,
            f1=report.f1 if report else None,
            auc=report.auc if report else None,
            train_size=train_size,
            test_size=len(split.test_ids),
            test_set_digest=split.test_digest,
            domain=domain_relation(spec, self.datasets),
            status=STATUS_ERROR if error else STATUS_OK,
            error=error,
        )

    def splits_payload(self) -> dict:
        return {name: self.splits[name].to_dict() for name in sorted(self.splits)}


def referenced_datasets(cfg: RunConfig) -> list:
    """Dataset names used by experiments or gate checks, first-mention order."""
    names = []
    for spec in cfg.experiments:
        names.extend(spec.datasets())
    if cfg.gate.enabled:
        for check in cfg.gate.checks:
            names.extend(s.dataset for s in check.base + check.candidates)
            names.append(check.target)
    return list(dict.fromkeys(names))


def warn_chronology(cfg: RunConfig, datasets: dict) -> None:
    """Sources are expected to precede their target; later ones only warn."""
    for spec in cfg.experiments:
        target = datasets[spec.target]
        for s in spec.sources:
            source = datasets[s.dataset]
            if s.dataset != spec.target and source.date > target.date:
                logger.warning(
                    f"{spec.name}: source {s.dataset} ({source.date}) is dated after target "
                    f"{spec.target} ({target.date})"
                )
