"""
Source-validation gate
Greedy forward selection of candidate training sources, judged by weighted
AUC on a validation slice carved out of the target's train split.
"""

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from pipeline.config import GateCheck, GateConfig, SourcePortion
from pipeline.errors import CrisdaError, PipelineError
from pipeline.forest import mix_seed
from pipeline.harness import ExperimentRunner, portion_messages, stable_hash
from pipeline.metrics import auc_one_vs_rest
from sources.corpus import make_split

logger = logging.getLogger(__name__)

BASELINE_AUC = 0.5
AUDIT_COLUMNS = ["target", "step", "candidate", "sources", "train_size", "auc", "delta", "accepted", "error"]


@dataclass(frozen=True)
class GateResult:
    target: str
    accepted: tuple
    audit: tuple


def _label(portions: Sequence[SourcePortion]) -> str:
    return " + ".join(p.display_name() for p in portions) or "(none)"


def gate_sources(candidates: Sequence[SourcePortion], target: str, base: Sequence[SourcePortion],
                 runner: ExperimentRunner, cfg: GateConfig) -> GateResult:
    """
    Start from `base`; try each candidate in declared order and keep it
    when validation AUC rises by at least cfg.epsilon over the current set.

    The validation slice is a stratified, seeded sub-split of the target's
    train ids; the target's test ids are never read. A target "train_split"
    portion resolves to the train ids outside the slice. A set that cannot
    be trained (empty, or a single class) scores BASELINE_AUC.
    """
    target_ds = runner.datasets[target]
    split = runner.splits[target]
    train_part = replace(
        target_ds,
        messages=tuple(target_ds.select(split.train_ids)),
        expected_count=None,
    )
    gate_seed = mix_seed(runner.cfg.master_seed, stable_hash(f"gate:{target}"))
    sub = make_split(train_part, cfg.validation_fraction, gate_seed)

    validation = train_part.select(sub.test_ids)
    present = {m.label.id for m in train_part.messages}
    covered = {m.label.id for m in validation}
    missing = sorted(present - covered)
    if missing:
        names = ", ".join(runner.taxonomy.by_id(i).name for i in missing)
        raise PipelineError(f"gate: validation slice of {target} has no messages of class(es) {names}")
    fit_ids = frozenset(sub.train_ids)
    golds = [m.label.id for m in validation]

    def score(portions):
        messages = []
        for p in portions:
            messages.extend(portion_messages(p, runner.datasets, runner.splits,
                                             train_ids=fit_ids if p.dataset == target else None))
        if len(messages) == 0 or len({m.label.id for m in messages}) < 2:
            return BASELINE_AUC, len(messages)
        classifier = runner.fit(messages, gate_seed)
        probas = classifier.predict_messages(validation)
        return auc_one_vs_rest(probas, golds, len(runner.taxonomy)).weighted, len(messages)

    current = list(base)
    current_auc, size = score(current)
    audit = [_audit_row(target, 0, "(base)", current, size, current_auc, 0.0, True)]
    logger.info(f"Gate {target}: base {_label(current)} AUC={current_auc:.4f}")

    for step, candidate in enumerate(candidates, 1):
        trial = current + [candidate]
        trial_auc, size = score(trial)
        delta = trial_auc - current_auc
        accepted = delta >= cfg.epsilon
        audit.append(_audit_row(target, step, candidate.display_name(), trial, size, trial_auc, delta, accepted))
        logger.info(
            f"Gate {target}: {candidate.display_name()} AUC={trial_auc:.4f} "
            f"(delta {delta:+.4f}) {'accepted' if accepted else 'rejected'}"
        )
        if accepted:
            current, current_auc = trial, trial_auc

    return GateResult(target=target, accepted=tuple(current), audit=tuple(audit))


def _audit_row(target, step, candidate, portions, size, auc, delta, accepted) -> dict:
    return {
        "target": target,
        "step": step,
        "candidate": candidate,
        "sources": _label(portions),
        "train_size": size,
        "auc": auc,
        "delta": delta,
        "accepted": accepted,
        "error": "",
    }


def run_gate_checks(runner: ExperimentRunner, cfg: GateConfig) -> list:
    """Every configured check, in order; a failing check becomes one error audit row."""
    if not cfg.enabled:
        return []
    rows = []
    for check in cfg.checks:
        try:
            result = gate_sources(check.candidates, check.target, check.base, runner, cfg)
            rows.extend(result.audit)
        except (CrisdaError, ValueError) as e:
            logger.error(f"Gate check for {check.target} failed: {e}")
            rows.append(_error_row(check, str(e)))
    return rows


def _error_row(check: GateCheck, message: str) -> dict:
    return {
        "target": check.target, "step": "", "candidate": "", "sources": _label(check.base),
        "train_size": "", "auc": "", "delta": "", "accepted": "", "error": message,
    }
