"""Mixed-initiative image labeling: induce DNF labeling rules from a few
manual labels, apply them to a pool, refine by direct rule edits, and let
active-learning suggestions steer what to label next."""

from .predicates import (
    Dataset,
    DetectedObject,
    ImageRecord,
    OverlapConfig,
    ParseError,
    PredicateAtom,
    ValidationError,
    count_at_least,
    eval_atom,
    has_attribute,
    has_object,
    ingest_dataset,
    overlaps,
    predicate_vocabulary,
)
from .rules import (
    Clause,
    EditError,
    Literal,
    Rule,
    RuleSet,
    apply_ruleset,
    canonical_form,
    edit_ruleset,
    empty_ruleset,
    eval_clause,
    eval_rule,
)
from .induction import (
    EmptyClassWarning,
    InductionConfig,
    InductionError,
    foil_gain,
    induce_rule,
    induce_ruleset,
)
from .recommend import (
    AccuracyReport,
    ActiveLearningConfig,
    ImportanceTable,
    SuggestionSet,
    compute_importance,
    holdout_accuracy,
    informativeness,
    rank_objects_for_dropdown,
    suggest_images,
)
from .session import (
    SessionState,
    SessionStore,
    new_session,
    run_autolabel,
    set_label,
)

__version__ = "0.1.0"
