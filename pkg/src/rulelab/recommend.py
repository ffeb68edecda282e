"""Recommendation signals that steer the labeling loop.

Three mechanisms: per-object TF-IDF importance (orders the predicate value
dropdown), holdout accuracy feedback (the donut numbers), and active-learning
image suggestions (informativeness ranking + k-means diversity over binary
predicate vectors).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .predicates import (
    ImageRecord,
    OverlapConfig,
    PredicateAtom,
    ValidationError,
    eval_atom,
)
from .rules import STATUS_BANNED, Rule, RuleSet, eval_literal, eval_rule, matching_classes


@dataclass(frozen=True)
class ImportanceTable:
    """Per-object-type TF-IDF importance over a corpus of N images."""

    entries: Mapping[str, float]
    image_count: int
    image_freq: Mapping[str, int]   # images containing the type
    object_freq: Mapping[str, int]  # summed per-image counts

    def to_json(self) -> dict:
        return {
            "image_count": self.image_count,
            "entries": {t: self.entries[t] for t in sorted(self.entries)},
            "image_freq": {t: self.image_freq[t] for t in sorted(self.image_freq)},
            "object_freq": {t: self.object_freq[t] for t in sorted(self.object_freq)},
        }


def importance_table_from_json(doc: dict) -> ImportanceTable:
    return ImportanceTable(
        entries=dict(doc.get("entries", {})),
        image_count=int(doc.get("image_count", 0)),
        image_freq={k: int(v) for k, v in doc.get("image_freq", {}).items()},
        object_freq={k: int(v) for k, v in doc.get("object_freq", {}).items()},
    )


def compute_importance(images: Sequence[ImageRecord]) -> ImportanceTable:
    """Importance_x = (sum_i objf(x, i) * ln(N / imgf(x))) / N.

    Treats each image as a document and object types as terms; computed once
    when a dataset is loaded.  A type present in every image (or absent from
    all) scores exactly 0.
    """
    if not images:
        raise ValidationError("importance needs a non-empty image list")
    n = len(images)
    image_freq: dict[str, int] = {}
    object_freq: dict[str, int] = {}
    for img in images:
        for t, c in img.type_counts.items():
            image_freq[t] = image_freq.get(t, 0) + 1
            object_freq[t] = object_freq.get(t, 0) + c
    entries = {
        t: (object_freq[t] * math.log(n / image_freq[t])) / n
        for t in image_freq
    }
    return ImportanceTable(entries, n, image_freq, object_freq)


def rank_objects_for_dropdown(tbl: ImportanceTable) -> list[str]:
    """Object types by descending importance, ties alphabetical."""
    return sorted(tbl.entries, key=lambda t: (-tbl.entries[t], t))


@dataclass(frozen=True)
class ClassAccuracy:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def to_json(self) -> dict:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}


@dataclass(frozen=True)
class AccuracyReport:
    overall: float
    per_class: Mapping[str, ClassAccuracy]
    generation: int

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "per_class": {c: self.per_class[c].to_json() for c in sorted(self.per_class)},
            "generation": self.generation,
        }


def accuracy_report_from_json(doc: dict) -> AccuracyReport:
    return AccuracyReport(
        overall=float(doc["overall"]),
        per_class={
            c: ClassAccuracy(int(v["correct"]), int(v["total"]))
            for c, v in doc.get("per_class", {}).items()
        },
        generation=int(doc.get("generation", 0)),
    )


def holdout_accuracy(
    rs: RuleSet,
    holdout: Sequence[tuple[ImageRecord, str]],
    cfg: OverlapConfig = OverlapConfig(),
) -> AccuracyReport:
    """Strict scoring: an image counts correct only when exactly one rule
    matches and it is the ground-truth class; ambiguous and unmatched images
    count incorrect."""
    if not holdout:
        raise ValidationError("holdout set is empty")
    correct: dict[str, int] = {}
    total: dict[str, int] = {}
    for img, truth in holdout:
        total[truth] = total.get(truth, 0) + 1
        matched = matching_classes(rs, img, cfg)
        if matched == [truth]:
            correct[truth] = correct.get(truth, 0) + 1
    per_class = {
        cls: ClassAccuracy(correct.get(cls, 0), total[cls]) for cls in total
    }
    overall = sum(correct.values()) / sum(total.values())
    return AccuracyReport(overall, per_class, rs.generation)


def informativeness(img: ImageRecord, rs: RuleSet, cfg: OverlapConfig = OverlapConfig()) -> float:
    """Satisfied-rule count plus, averaged over unsatisfied rules, how close
    the best clause comes to matching (fraction of satisfied literals)."""
    satisfied = 0
    closeness: list[float] = []
    for rule in rs.rules:
        if eval_rule(rule, img, cfg):
            satisfied += 1
            continue
        best = 0.0
        for clause in rule.clauses:
            if clause.status == STATUS_BANNED:
                continue
            hit = sum(1 for lit in clause.literals if eval_literal(lit, img, cfg))
            best = max(best, hit / len(clause.literals))
        closeness.append(best)
    mean_closeness = sum(closeness) / len(closeness) if closeness else 0.0
    return satisfied + mean_closeness


@dataclass(frozen=True)
class ActiveLearningConfig:
    k: int = 3
    intermediate_n: int | None = None  # default max(5k, 20)
    seed: int = 0
    max_kmeans_iters: int = 100

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.intermediate_n is not None and self.intermediate_n < self.k:
            raise ValidationError("intermediate_n must be >= k")

    @property
    def resolved_intermediate_n(self) -> int:
        return self.intermediate_n if self.intermediate_n is not None else max(5 * self.k, 20)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "intermediate_n": self.intermediate_n,
            "seed": self.seed,
            "max_kmeans_iters": self.max_kmeans_iters,
        }


def al_config_from_json(doc: dict) -> ActiveLearningConfig:
    n = doc.get("intermediate_n")
    return ActiveLearningConfig(
        k=int(doc.get("k", 3)),
        intermediate_n=None if n is None else int(n),
        seed=int(doc.get("seed", 0)),
        max_kmeans_iters=int(doc.get("max_kmeans_iters", 100)),
    )


@dataclass(frozen=True)
class SuggestionSet:
    image_ids: tuple[str, ...]
    scores: Mapping[str, float]
    generation: int

    def to_json(self) -> dict:
        return {
            "image_ids": list(self.image_ids),
            "scores": {i: self.scores[i] for i in sorted(self.scores)},
            "generation": self.generation,
        }


def suggestion_set_from_json(doc: dict) -> SuggestionSet:
    return SuggestionSet(
        image_ids=tuple(doc.get("image_ids", [])),
        scores={k: float(v) for k, v in doc.get("scores", {}).items()},
        generation=int(doc.get("generation", 0)),
    )


EMPTY_SUGGESTIONS = SuggestionSet((), {}, 0)


def feature_vector(img: ImageRecord, vocab: Sequence[PredicateAtom],
                   cfg: OverlapConfig = OverlapConfig()) -> np.ndarray:
    return np.array([1.0 if eval_atom(a, img, cfg) else 0.0 for a in vocab])


def kmeans(points: np.ndarray, k: int, seed: int, max_iters: int = 100) -> np.ndarray:
    """Seeded k-means++ followed by Lloyd iterations; returns assignments.

    Deterministic for fixed inputs and seed: ties in assignment go to the
    lowest centroid index, empty clusters keep their previous centroid.
    """
    n = points.shape[0]
    rng = np.random.RandomState(seed)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.randint(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            centers[c] = points[rng.randint(n)]
            continue
        target = rng.random_sample() * total
        idx = int(np.searchsorted(np.cumsum(d2), target, side="right"))
        idx = min(idx, n - 1)
        centers[c] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))

    assign = np.full(n, -1)
    for _ in range(max_iters):
        dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_assign = np.argmin(dist, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = points[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return assign


def suggest_images(
    pool: Sequence[ImageRecord],
    manual: Mapping[str, str],
    rs: RuleSet,
    vocab: Sequence[PredicateAtom],
    cfg: ActiveLearningConfig = ActiveLearningConfig(),
    ocfg: OverlapConfig = OverlapConfig(),
) -> SuggestionSet:
    """Pick up to k diverse, informative images for the user to label next.

    Candidates are pool images without a manual label that zero or several
    rules match; the top-ranked slice by informativeness is clustered by
    binary predicate vector and each cluster contributes its most central
    image.
    """
    scored: list[tuple[float, str, ImageRecord]] = []
    for img in pool:
        if img.image_id in manual:
            continue
        if len(matching_classes(rs, img, ocfg)) == 1:
            continue
        scored.append((informativeness(img, rs, ocfg), img.image_id, img))
    if not scored:
        return SuggestionSet((), {}, rs.generation)
    scored.sort(key=lambda e: (-e[0], e[1]))
    intermediate = scored[: cfg.resolved_intermediate_n]

    k = min(cfg.k, len(intermediate))
    points = np.stack([feature_vector(img, vocab, ocfg) for _, _, img in intermediate])
    assign = kmeans(points, k, cfg.seed, cfg.max_kmeans_iters)

    chosen: list[tuple[float, str]] = []
    for c in range(k):
        member_idx = np.flatnonzero(assign == c)
        if not len(member_idx):
            continue
        centroid = points[member_idx].mean(axis=0)
        best: tuple[float, str] | None = None
        for i in member_idx:
            d = float(np.sum((points[i] - centroid) ** 2))
            key = (d, intermediate[i][1])
            if best is None or key < best:
                best = key
        assert best is not None
        score = next(s for s, iid, _ in intermediate if iid == best[1])
        chosen.append((score, best[1]))
    chosen.sort(key=lambda e: (-e[0], e[1]))
    return SuggestionSet(
        image_ids=tuple(iid for _, iid in chosen),
        scores={iid: score for score, iid in chosen},
        generation=rs.generation,
    )
