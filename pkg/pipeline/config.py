"""
Experiment configuration: parsing and validation of the run config JSON.

Everything is validated before any experiment runs. Violations raise
ConfigError carrying the config line they were found on, when it can be located.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from pipeline.errors import ConfigError
from pipeline.features import DEFAULT_K
from pipeline.forest import ForestConfig

logger = logging.getLogger(__name__)

EXPERIMENT_TYPES = ("SS", "MS", "MSWT", "SC")
PORTIONS = ("full", "train_split")
DEFAULT_TEST_FRACTION = Fraction(3, 10)
DEFAULT_EPSILON = 0.005
DEFAULT_VALIDATION_FRACTION = Fraction(1, 5)

TOP_LEVEL_KEYS = {
    "master_seed", "test_fraction", "feature_k", "forest", "manifest_path",
    "experiments", "gate", "stopword_languages", "jobs",
}
FOREST_KEYS = {"n_trees", "max_features_per_split", "max_depth", "min_samples_split", "seed", "bootstrap"}
EXPERIMENT_KEYS = {"name", "exp_type", "sources", "target", "notes"}
PORTION_KEYS = {"dataset", "portion", "language_filter"}
GATE_KEYS = {"enabled", "epsilon", "validation_fraction", "checks"}
CHECK_KEYS = {"target", "base", "candidates"}


@dataclass(frozen=True)
class SourcePortion:
    dataset: str
    portion: str = "full"
    language_filter: Optional[str] = None

    def display_name(self) -> str:
        if self.language_filter:
            return f"{self.dataset}-{self.language_filter.upper()}"
        return self.dataset


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    exp_type: str
    sources: tuple
    target: str
    notes: Optional[str] = None

    def validate(self) -> None:
        """Raise ConfigError (without line) if an ExperimentSpec invariant is broken."""
        where = f"experiment '{self.name}'"
        if self.exp_type not in EXPERIMENT_TYPES:
            raise ConfigError(f"{where}: exp_type must be one of {', '.join(EXPERIMENT_TYPES)}, got '{self.exp_type}'")
        if not self.sources:
            raise ConfigError(f"{where}: needs at least one source")

        names = [s.dataset for s in self.sources]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigError(f"{where}: dataset(s) listed more than once in sources: {', '.join(dupes)}")

        for s in self.sources:
            if s.portion not in PORTIONS:
                raise ConfigError(f"{where}: portion must be 'full' or 'train_split', got '{s.portion}'")
            if s.portion == "train_split" and s.dataset != self.target:
                raise ConfigError(
                    f"{where}: portion 'train_split' is only valid for the target ({self.target}), not {s.dataset}"
                )
            if s.dataset == self.target and s.portion == "full":
                raise ConfigError(
                    f"{where}: target {self.target} cannot be a 'full' source; its test split must stay held out"
                )

        target_sources = [s for s in self.sources if s.dataset == self.target]
        if self.exp_type == "SS" and len(self.sources) != 1:
            raise ConfigError(f"{where}: SS experiments have exactly one source, got {len(self.sources)}")
        if self.exp_type == "MS":
            if len(self.sources) < 2:
                raise ConfigError(f"{where}: MS experiments need at least two sources")
            if target_sources:
                raise ConfigError(f"{where}: MS experiments must not train on the target {self.target}")
        if self.exp_type == "MSWT" and not target_sources:
            raise ConfigError(f"{where}: MSWT experiments must include the target {self.target} with portion 'train_split'")

    def datasets(self) -> list:
        return [s.dataset for s in self.sources] + [self.target]


@dataclass(frozen=True)
class GateCheck:
    target: str
    base: tuple
    candidates: tuple


@dataclass(frozen=True)
class GateConfig:
    enabled: bool = False
    epsilon: float = DEFAULT_EPSILON
    validation_fraction: Fraction = DEFAULT_VALIDATION_FRACTION
    checks: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    manifest_path: Path
    master_seed: int = 0
    test_fraction: Fraction = DEFAULT_TEST_FRACTION
    feature_k: int = DEFAULT_K
    forest: ForestConfig = field(default_factory=ForestConfig)
    experiments: tuple = ()
    gate: GateConfig = field(default_factory=GateConfig)
    stopword_languages: Optional[tuple] = None
    jobs: int = 1


class _Locator:
    """Finds the config line a key (or a named experiment) sits on."""

    def __init__(self, text: str):
        self.text = text

    def line_of(self, key: str, value: Optional[str] = None, after: Optional[str] = None) -> Optional[int]:
        start = 0
        if after is not None:
            m = re.search(rf'"{re.escape(after)}"\s*:', self.text)
            start = m.end() if m else 0
        if value is None:
            pattern = rf'"{re.escape(key)}"\s*:'
        else:
            pattern = rf'"{re.escape(key)}"\s*:\s*{re.escape(json.dumps(value))}'
        m = re.compile(pattern).search(self.text, start)
        if not m:
            return None
        return self.text.count("\n", 0, m.start()) + 1


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return parse_config(text, base_dir=path.parent)


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno)
    loc = _Locator(text)

    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", line=1)
    _reject_unknown(raw, TOP_LEVEL_KEYS, "config", loc)

    if "manifest_path" not in raw or not isinstance(raw["manifest_path"], str):
        raise ConfigError("manifest_path (string) is required", line=loc.line_of("manifest_path"))

    master_seed = raw.get("master_seed", 0)
    if isinstance(master_seed, bool) or not isinstance(master_seed, int):
        raise ConfigError("master_seed must be an integer", line=loc.line_of("master_seed"))

    test_fraction = _fraction(raw.get("test_fraction", DEFAULT_TEST_FRACTION), "test_fraction", loc)

    feature_k = raw.get("feature_k", DEFAULT_K)
    if isinstance(feature_k, bool) or not isinstance(feature_k, int) or feature_k < 1:
        raise ConfigError("feature_k must be an integer >= 1", line=loc.line_of("feature_k"))

    jobs = raw.get("jobs", 1)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be an integer >= 1", line=loc.line_of("jobs"))

    stop_langs = raw.get("stopword_languages")
    if stop_langs is not None:
        if not isinstance(stop_langs, list) or not all(isinstance(s, str) for s in stop_langs):
            raise ConfigError("stopword_languages must be a list of language tags", line=loc.line_of("stopword_languages"))
        stop_langs = tuple(s.lower() for s in stop_langs)

    experiments_raw = raw.get("experiments", [])
    if not isinstance(experiments_raw, list):
        raise ConfigError("experiments must be an array", line=loc.line_of("experiments"))
    experiments = []
    seen = set()
    for i, item in enumerate(experiments_raw):
        spec = _parse_experiment(item, i, loc)
        if spec.name in seen:
            raise ConfigError(f"duplicate experiment name '{spec.name}'", line=loc.line_of("name", spec.name, after="experiments"))
        seen.add(spec.name)
        experiments.append(spec)

    return RunConfig(
        manifest_path=base_dir / raw["manifest_path"],
        master_seed=master_seed,
        test_fraction=test_fraction,
        feature_k=feature_k,
        forest=_parse_forest(raw.get("forest", {}), loc),
        experiments=tuple(experiments),
        gate=_parse_gate(raw.get("gate", {}), loc),
        stopword_languages=stop_langs,
        jobs=jobs,
    )


def _reject_unknown(obj: dict, allowed: set, where: str, loc: _Locator) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}", line=loc.line_of(unknown[0]))


def _fraction(value, key: str, loc: _Locator) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, float, str, Fraction)):
        raise ConfigError(f"{key} must be a number in (0, 1)", line=loc.line_of(key))
    try:
        frac = Fraction(str(value))
    except ValueError:
        raise ConfigError(f"{key} must be a number in (0, 1)", line=loc.line_of(key))
    if not 0 < frac < 1:
        raise ConfigError(f"{key} must lie in (0, 1), got {value}", line=loc.line_of(key))
    return frac


def _parse_forest(raw, loc: _Locator) -> ForestConfig:
    if not isinstance(raw, dict):
        raise ConfigError("forest must be an object", line=loc.line_of("forest"))
    _reject_unknown(raw, FOREST_KEYS, "forest", loc)
    if raw.get("seed"):
        logger.warning("forest.seed is ignored; tree seeds derive from master_seed and the experiment name")
    try:
        return ForestConfig(**{k: v for k, v in raw.items() if k != "seed"})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"forest: {e}", line=loc.line_of("forest"))


def _parse_portion(item, where: str, line: Optional[int]) -> SourcePortion:
    if isinstance(item, str):
        return SourcePortion(dataset=item)
    if not isinstance(item, dict) or "dataset" not in item:
        raise ConfigError(f"{where}: each source needs a 'dataset'", line=line)
    unknown = sorted(set(item) - PORTION_KEYS)
    if unknown:
        raise ConfigError(f"{where}: unknown source key(s) {', '.join(unknown)}", line=line)
    lang = item.get("language_filter")
    return SourcePortion(
        dataset=str(item["dataset"]),
        portion=str(item.get("portion", "full")),
        language_filter=str(lang).lower() if lang else None,
    )


def _parse_experiment(item, index: int, loc: _Locator) -> ExperimentSpec:
    if not isinstance(item, dict):
        raise ConfigError(f"experiments[{index}] must be an object", line=loc.line_of("experiments"))
    name = item.get("name")
    line = loc.line_of("name", name, after="experiments") if isinstance(name, str) else loc.line_of("experiments")
    where = f"experiments[{index}]"

    unknown = sorted(set(item) - EXPERIMENT_KEYS)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}", line=line)
    for key in ("name", "exp_type", "target"):
        if not isinstance(item.get(key), str) or not item[key]:
            raise ConfigError(f"{where}: '{key}' (string) is required", line=line)
    if not isinstance(item.get("sources"), list):
        raise ConfigError(f"{where}: 'sources' must be an array", line=line)

    spec = ExperimentSpec(
        name=item["name"],
        exp_type=item["exp_type"],
        sources=tuple(_parse_portion(s, where, line) for s in item["sources"]),
        target=item["target"],
        notes=item.get("notes"),
    )
    try:
        spec.validate()
    except ConfigError as e:
        raise ConfigError(str(e), line=line)
    return spec


def _parse_gate(raw, loc: _Locator) -> GateConfig:
    if not isinstance(raw, dict):
        raise ConfigError("gate must be an object", line=loc.line_of("gate"))
    _reject_unknown(raw, GATE_KEYS, "gate", loc)

    epsilon = raw.get("epsilon", DEFAULT_EPSILON)
    if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)) or epsilon < 0:
        raise ConfigError("gate.epsilon must be a non-negative number", line=loc.line_of("epsilon"))

    checks = []
    raw_checks = raw.get("checks", [])
    if not isinstance(raw_checks, list):
        raise ConfigError("gate.checks must be an array", line=loc.line_of("checks"))
    for i, item in enumerate(raw_checks):
        where = f"gate.checks[{i}]"
        line = loc.line_of("checks")
        if not isinstance(item, dict) or not isinstance(item.get("target"), str):
            raise ConfigError(f"{where}: needs a 'target' string", line=line)
        unknown = sorted(set(item) - CHECK_KEYS)
        if unknown:
            raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}", line=line)
        base = tuple(_parse_portion(s, where, line) for s in item.get("base", []))
        candidates = tuple(_parse_portion(s, where, line) for s in item.get("candidates", []))
        for s in base + candidates:
            if s.dataset == item["target"] and s.portion == "full":
                raise ConfigError(f"{where}: target {item['target']} cannot be a 'full' source", line=line)
            if s.portion == "train_split" and s.dataset != item["target"]:
                raise ConfigError(f"{where}: 'train_split' is only valid for the target", line=line)
        checks.append(GateCheck(target=item["target"], base=base, candidates=candidates))

    return GateConfig(
        enabled=bool(raw.get("enabled", False)),
        epsilon=float(epsilon),
        validation_fraction=_fraction(raw.get("validation_fraction", DEFAULT_VALIDATION_FRACTION),
                                      "validation_fraction", loc),
        checks=tuple(checks),
    )
