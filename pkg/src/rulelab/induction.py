"""Sequential-covering rule induction (propositional FOIL).

Per class, a one-vs-rest split of the manually labeled images feeds a greedy
clause search: literals are added by FOIL information gain until the clause
excludes every negative (or a budget/stall cuts it short), covered positives
are removed, and the loop repeats.  Locked clauses are replayed verbatim
ahead of the search; banned canonical forms can never be emitted again.

Coverage bookkeeping uses int bitmasks (bit i = example i), which keeps the
search exact, allocation-free and fast at interactive dataset sizes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .predicates import (
    Dataset,
    ImageRecord,
    OverlapConfig,
    PredicateAtom,
    ValidationError,
    eval_atom,
    predicate_vocabulary,
)
from .rules import (
    STATUS_LOCKED,
    STATUS_NORMAL,
    Clause,
    Literal,
    Rule,
    RuleSet,
    canonical_form,
    canonical_form_of,
    eval_clause,
)


class InductionError(Exception):
    """Rule induction cannot proceed (e.g. a locked clause is also banned)."""


class EmptyClassWarning(UserWarning):
    """A class had no labeled positives; its rule is the locked clauses only."""


@dataclass(frozen=True)
class InductionConfig:
    max_literals_per_clause: int = 4
    max_clauses_per_rule: int = 6
    min_clause_positive_coverage: int = 1

    def __post_init__(self) -> None:
        if min(self.max_literals_per_clause, self.max_clauses_per_rule,
               self.min_clause_positive_coverage) < 1:
            raise ValidationError("induction bounds must all be >= 1")

    def to_json(self) -> dict:
        return {
            "max_literals_per_clause": self.max_literals_per_clause,
            "max_clauses_per_rule": self.max_clauses_per_rule,
            "min_clause_positive_coverage": self.min_clause_positive_coverage,
        }


def induction_config_from_json(doc: dict) -> InductionConfig:
    return InductionConfig(
        max_literals_per_clause=int(doc.get("max_literals_per_clause", 4)),
        max_clauses_per_rule=int(doc.get("max_clauses_per_rule", 6)),
        min_clause_positive_coverage=int(doc.get("min_clause_positive_coverage", 1)),
    )


@dataclass(frozen=True)
class LiteralGain:
    """Gain bookkeeping for one candidate literal at one growth step."""

    literal: Literal
    t: int          # positives covered before and still after the literal
    p0: int
    n0: int
    p1: int
    n1: int
    gain: float


def foil_gain(t: int, p0: int, n0: int, p1: int, n1: int) -> float:
    """t * (log2 precision after - log2 precision before); -inf when p1 = 0."""
    if p1 == 0:
        return float("-inf")
    return t * (math.log2(p1 / (p1 + n1)) - math.log2(p0 / (p0 + n0)))


def _atom_columns(images: Sequence[ImageRecord], vocab: Sequence[PredicateAtom],
                  cfg: OverlapConfig) -> list[int]:
    """Per-atom bitmask over the image sequence."""
    cols = [0] * len(vocab)
    for i, img in enumerate(images):
        bit = 1 << i
        for j, atom in enumerate(vocab):
            if eval_atom(atom, img, cfg):
                cols[j] |= bit
    return cols


class _CandidateSpace:
    """Both polarities of every vocab atom, in canonical literal-key order."""

    def __init__(self, vocab: Sequence[PredicateAtom], pos_cols: list[int],
                 neg_cols: list[int], full_pos: int, full_neg: int) -> None:
        entries = []
        for j, atom in enumerate(vocab):
            for negated in (False, True):
                lit = Literal(atom, negated)
                pmask = (~pos_cols[j] & full_pos) if negated else pos_cols[j]
                nmask = (~neg_cols[j] & full_neg) if negated else neg_cols[j]
                entries.append((lit.key, lit, pmask, nmask))
        entries.sort(key=lambda e: e[0])
        self.entries = entries


def _grow_clause(uncovered: int, full_neg: int, space: _CandidateSpace,
                 banned: frozenset[str], cfg: InductionConfig):
    """Grow one clause greedily; returns (literals, pos_cov, neg_cov, impure)
    or None when no admissible clause can be completed."""
    lits: list[Literal] = []
    pos_cov = uncovered
    neg_cov = full_neg
    trail: list[tuple[int, int]] = []
    exclusions: dict[tuple[str, ...], set[str]] = {}

    while True:
        p0 = pos_cov.bit_count()
        n0 = neg_cov.bit_count()
        completed = False
        if lits and n0 == 0:
            completed = True
        elif len(lits) == cfg.max_literals_per_clause:
            completed = True
        else:
            prefix = tuple(l.key for l in lits)
            excluded = exclusions.get(prefix, set())
            in_clause = {(l.atom, l.negated) for l in lits}
            best: tuple[float, str, Literal, int, int] | None = None
            for key, lit, pmask, nmask in space.entries:
                if (lit.atom, lit.negated) in in_clause or key in excluded:
                    continue
                p1 = (pos_cov & pmask).bit_count()
                if p1 == 0:
                    continue
                n1 = (neg_cov & nmask).bit_count()
                gain = foil_gain(p1, p0, n0, p1, n1)
                if best is None or gain > best[0]:
                    best = (gain, key, lit, pmask, nmask)
            if best is None or best[0] <= 0:
                if not lits:
                    return None  # nothing can start a clause: covering halts
                completed = True
            else:
                trail.append((pos_cov, neg_cov))
                lits.append(best[2])
                pos_cov &= best[3]
                neg_cov &= best[4]
                continue

        if completed:
            if canonical_form_of(lits) in banned:
                # Discard, forbid the final literal at this choice point and
                # resume from the pre-final state.
                last = lits.pop()
                pos_cov, neg_cov = trail.pop()
                exclusions.setdefault(tuple(l.key for l in lits), set()).add(last.key)
                continue
            return lits, pos_cov, neg_cov, neg_cov.bit_count() > 0


def rank_candidate_literals(
    positives: Sequence[ImageRecord],
    negatives: Sequence[ImageRecord],
    prefix: Sequence[Literal],
    vocab: Sequence[PredicateAtom],
    overlap: OverlapConfig = OverlapConfig(),
) -> list[LiteralGain]:
    """Gain table for extending ``prefix`` by one literal, best first.

    Introspection helper (not used by the induction loop itself): exposes the
    same gain arithmetic for tests and tooling.
    """
    pos_cols = _atom_columns(positives, vocab, overlap)
    neg_cols = _atom_columns(negatives, vocab, overlap)
    full_pos = (1 << len(positives)) - 1
    full_neg = (1 << len(negatives)) - 1
    space = _CandidateSpace(vocab, pos_cols, neg_cols, full_pos, full_neg)
    pos_cov, neg_cov = full_pos, full_neg
    for lit in prefix:
        for key, cand, pmask, nmask in space.entries:
            if cand == lit:
                pos_cov &= pmask
                neg_cov &= nmask
    p0 = pos_cov.bit_count()
    n0 = neg_cov.bit_count()
    in_clause = {(l.atom, l.negated) for l in prefix}
    out = []
    for key, lit, pmask, nmask in space.entries:
        if (lit.atom, lit.negated) in in_clause:
            continue
        p1 = (pos_cov & pmask).bit_count()
        n1 = (neg_cov & nmask).bit_count()
        out.append(LiteralGain(lit, p1, p0, n0, p1, n1, foil_gain(p1, p0, n0, p1, n1)))
    out.sort(key=lambda g: (-g.gain, g.literal.key))
    return out


def induce_rule(
    class_name: str,
    positives: Sequence[ImageRecord],
    negatives: Sequence[ImageRecord],
    vocab: Sequence[PredicateAtom],
    locked: Sequence[Clause] = (),
    banned: frozenset[str] = frozenset(),
    cfg: InductionConfig = InductionConfig(),
    overlap: OverlapConfig = OverlapConfig(),
) -> Rule:
    """Sequential covering for one class, honoring locked and banned clauses."""
    if not positives:
        raise InductionError(f"no positive examples for class {class_name!r}")
    if not vocab:
        raise InductionError("empty predicate vocabulary")
    for c in locked:
        if canonical_form(c) in banned:
            raise InductionError(
                f"locked clause {canonical_form(c)!r} for {class_name!r} is banned"
            )

    clauses: list[Clause] = [replace(c, status=STATUS_LOCKED) for c in locked]
    uncovered = (1 << len(positives)) - 1
    for c in clauses:
        for i, img in enumerate(positives):
            if uncovered & (1 << i) and eval_clause(c, img, overlap):
                uncovered &= ~(1 << i)

    pos_cols = _atom_columns(positives, vocab, overlap)
    neg_cols = _atom_columns(negatives, vocab, overlap)
    full_pos = (1 << len(positives)) - 1
    full_neg = (1 << len(negatives)) - 1
    space = _CandidateSpace(vocab, pos_cols, neg_cols, full_pos, full_neg)
    emitted_forms = {canonical_form(c) for c in clauses}

    while uncovered and len(clauses) < cfg.max_clauses_per_rule:
        grown = _grow_clause(uncovered, full_neg, space, banned | emitted_forms, cfg)
        if grown is None:
            break
        lits, pos_cov, _neg_cov, impure = grown
        if pos_cov.bit_count() < cfg.min_clause_positive_coverage:
            break
        clause = Clause(tuple(lits), STATUS_NORMAL, impure)
        clauses.append(clause)
        emitted_forms.add(canonical_form(clause))
        uncovered &= ~pos_cov
    return Rule(class_name, tuple(clauses))


def induce_ruleset(
    labeled: Mapping[str, str],
    ds: Dataset,
    rs_prev: RuleSet,
    cfg: InductionConfig = InductionConfig(),
) -> RuleSet:
    """One-vs-rest induction over every task class.

    Positives for a class are its manually labeled pool images; negatives are
    the labeled images of every other class.  Locked clauses and the banned
    registry from ``rs_prev`` carry forward; generation increments.
    """
    if not labeled:
        raise ValidationError("no labeled images")
    by_class: dict[str, list[ImageRecord]] = {c: [] for c in ds.classes}
    for iid in sorted(labeled):
        cls = labeled[iid]
        img = ds.pool_by_id.get(iid)
        if img is None:
            raise ValidationError(f"labeled image {iid!r} is not in the pool")
        if cls not in by_class:
            raise ValidationError(f"label {cls!r} for image {iid!r} is not a task class")
        by_class[cls].append(img)

    vocab = predicate_vocabulary(ds)
    rules = []
    banned_fwd: dict[str, frozenset[str]] = {}
    for cls in ds.classes:
        try:
            prev_rule = rs_prev.rule_for(cls)
        except KeyError:
            prev_rule = Rule(cls)
        locked = tuple(c for c in prev_rule.clauses if c.status == STATUS_LOCKED)
        banned = rs_prev.banned_for(cls)
        if banned:
            banned_fwd[cls] = banned
        for c in locked:
            if canonical_form(c) in banned:
                raise InductionError(
                    f"locked clause {canonical_form(c)!r} for {cls!r} is banned"
                )
        positives = by_class[cls]
        if not positives:
            warnings.warn(
                f"class {cls!r} has no labeled positives; keeping locked clauses only",
                EmptyClassWarning,
                stacklevel=2,
            )
            rules.append(Rule(cls, tuple(replace(c, status=STATUS_LOCKED) for c in locked)))
            continue
        negatives = [img for other in ds.classes if other != cls for img in by_class[other]]
        rules.append(
            induce_rule(cls, positives, negatives, vocab, locked, banned, cfg, ds.overlap)
        )
    return RuleSet(rules=tuple(rules), banned=banned_fwd, generation=rs_prev.generation + 1)
