"""Scripted labeling sessions: an oracle plays the human against a dataset.

Each iteration the oracle labels a few images (following the active-learning
suggestions or a seeded random order), repairs some wrong auto labels, and
triggers rule induction — recording holdout accuracy as it goes. Useful for
benchmarking how quickly rule quality converges under different policies.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .labels import STATUS_AUTO, STATUS_MANUAL
from .predicates import Dataset, ValidationError
from .recommend import ActiveLearningConfig
from .induction import InductionConfig
from .session import SessionState, new_session, run_autolabel, set_label


@dataclass(frozen=True)
class SimulationPolicy:
    """Knobs for the scripted oracle."""

    label_budget_per_iter: int = 3
    follow_suggestions: bool = True
    correct_misclassified: int = 2
    max_iterations: int = 10
    target_accuracy: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.label_budget_per_iter < 0:
            raise ValidationError("label_budget_per_iter must be >= 0")
        if self.correct_misclassified < 0:
            raise ValidationError("correct_misclassified must be >= 0")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not 0.0 < self.target_accuracy <= 1.0:
            raise ValidationError("target_accuracy must be in (0, 1]")

    def to_json(self) -> dict:
        return {
            "label_budget_per_iter": self.label_budget_per_iter,
            "follow_suggestions": self.follow_suggestions,
            "correct_misclassified": self.correct_misclassified,
            "max_iterations": self.max_iterations,
            "target_accuracy": self.target_accuracy,
            "seed": self.seed,
        }


def policy_from_json(doc: dict) -> SimulationPolicy:
    return SimulationPolicy(
        label_budget_per_iter=int(doc.get("label_budget_per_iter", 3)),
        follow_suggestions=bool(doc.get("follow_suggestions", True)),
        correct_misclassified=int(doc.get("correct_misclassified", 2)),
        max_iterations=int(doc.get("max_iterations", 10)),
        target_accuracy=float(doc.get("target_accuracy", 0.9)),
        seed=int(doc.get("seed", 0)),
    )


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    manual_count: int
    overall_accuracy: float
    per_class_accuracy: Mapping[str, float]
    wall_ms: float

    def to_json(self, include_timing: bool = True) -> dict:
        doc = {
            "iteration": self.iteration,
            "manual_count": self.manual_count,
            "overall_accuracy": self.overall_accuracy,
            "per_class_accuracy": {
                c: self.per_class_accuracy[c] for c in sorted(self.per_class_accuracy)
            },
        }
        if include_timing:
            doc["wall_ms"] = self.wall_ms
        return doc


@dataclass(frozen=True)
class SimulationReport:
    rows: tuple[IterationRow, ...]
    stopping_reason: str  # target | max_iterations | pool_exhausted
    policy: SimulationPolicy

    @property
    def final_accuracy(self) -> float:
        return self.rows[-1].overall_accuracy if self.rows else 0.0

    @property
    def total_manual(self) -> int:
        return self.rows[-1].manual_count if self.rows else 0

    def to_json(self, include_timing: bool = True) -> dict:
        return {
            "policy": self.policy.to_json(),
            "rows": [r.to_json(include_timing) for r in self.rows],
            "stopping_reason": self.stopping_reason,
            "final_accuracy": self.final_accuracy,
            "total_manual": self.total_manual,
        }


def _check_ground_truth(dataset: Dataset, truth: Mapping[str, str]) -> None:
    for iid in dataset.pool_by_id:
        if iid not in truth:
            raise ValidationError(f"ground truth missing pool image {iid!r}")
    for iid, cls in truth.items():
        if iid not in dataset.pool_by_id:
            raise ValidationError(f"ground truth names unknown image {iid!r}")
        if cls not in dataset.classes:
            raise ValidationError(f"ground truth labels {iid!r} with unknown class {cls!r}")


def _labeling_order(state: SessionState, policy: SimulationPolicy,
                    rng: random.Random) -> list[str]:
    """Images the oracle would pick this iteration, most preferred first."""
    unlabeled = sorted(
        iid for iid, ls in state.labels.items() if ls.status != STATUS_MANUAL
    )
    if not policy.follow_suggestions:
        rng.shuffle(unlabeled)
        return unlabeled
    suggested = [i for i in state.suggestions.image_ids
                 if state.labels[i].status != STATUS_MANUAL]
    rest = [i for i in unlabeled if i not in set(suggested)]
    return suggested + rest


def run_simulation(dataset: Dataset, truth: Mapping[str, str],
                   policy: SimulationPolicy = SimulationPolicy(),
                   cfg: InductionConfig = InductionConfig()) -> SimulationReport:
    """Play the labeling loop until the policy says stop.

    Holdout accuracy is read off the same session report the service exposes,
    so simulator numbers and UI numbers can never drift apart.
    """
    _check_ground_truth(dataset, truth)
    if not dataset.holdout:
        raise ValidationError("simulation needs a holdout set to measure accuracy")

    rng = random.Random(policy.seed)
    al_cfg = ActiveLearningConfig(seed=policy.seed)
    state = new_session("simulation", dataset)
    rows: list[IterationRow] = []
    reason = "max_iterations"

    for iteration in range(1, policy.max_iterations + 1):
        t0 = time.perf_counter()

        picked = _labeling_order(state, policy, rng)[: policy.label_budget_per_iter]
        for iid in picked:
            state = set_label(state, iid, truth[iid])

        wrong = sorted(
            iid for iid, ls in state.labels.items()
            if ls.status == STATUS_AUTO and ls.label != truth[iid]
        )
        corrected = wrong[: policy.correct_misclassified]
        for iid in corrected:
            state = set_label(state, iid, truth[iid])

        state = run_autolabel(state, cfg, al_cfg)
        report = state.last_report
        assert report is not None  # guaranteed by the holdout check above
        rows.append(IterationRow(
            iteration=iteration,
            manual_count=sum(
                1 for ls in state.labels.values() if ls.status == STATUS_MANUAL
            ),
            overall_accuracy=report.overall,
            per_class_accuracy={
                cls: acc.accuracy for cls, acc in report.per_class.items()
            },
            wall_ms=round((time.perf_counter() - t0) * 1000.0, 3),
        ))

        if report.overall >= policy.target_accuracy:
            reason = "target"
            break
        if not picked and not corrected:
            reason = "pool_exhausted"
            break

    return SimulationReport(tuple(rows), reason, policy)
