"""DNF rule algebra: literals, clauses, per-class rules, rule sets.

A rule labels an image when any of its clauses (conjunctions of possibly
negated predicate atoms) holds.  Clauses carry a user-facing status:
``locked`` clauses survive regeneration verbatim, ``banned`` clauses stay
visible but are skipped during evaluation and their canonical form is
registered so induction can never bring them back.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Union

from .labels import LabelState, ambiguous, auto, manual, unlabeled
from .predicates import (
    ImageRecord,
    OverlapConfig,
    PredicateAtom,
    ValidationError,
    atom_from_json,
    eval_atom,
)

STATUS_NORMAL = "normal"
STATUS_LOCKED = "locked"
STATUS_BANNED = "banned"
_STATUSES = (STATUS_NORMAL, STATUS_LOCKED, STATUS_BANNED)


class EditError(ValueError):
    """A rule edit cannot be applied; message carries the reason."""


@dataclass(frozen=True)
class Literal:
    atom: PredicateAtom
    negated: bool = False

    @property
    def key(self) -> str:
        """Canonical literal string; negation sorts after the positive form."""
        return ("not " if self.negated else "") + self.atom.canonical

    def to_json(self) -> dict:
        return {"kind": self.atom.kind, "args": list(self.atom.args), "negated": self.negated}


def literal_from_json(doc: dict) -> Literal:
    return Literal(atom=atom_from_json(doc), negated=bool(doc.get("negated", False)))


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    status: str = STATUS_NORMAL
    impure: bool = False

    def __post_init__(self) -> None:
        if not self.literals:
            raise ValidationError("a clause must contain at least one literal")
        if self.status not in _STATUSES:
            raise ValidationError(f"unknown clause status {self.status!r}")
        seen = set()
        for lit in self.literals:
            pair = (lit.atom, lit.negated)
            if pair in seen:
                raise ValidationError(f"duplicate literal {lit.key!r} in clause")
            seen.add(pair)

    def to_json(self) -> dict:
        return {
            "literals": [lit.to_json() for lit in self.literals],
            "status": self.status,
            "impure": self.impure,
        }


def clause_from_json(doc: dict) -> Clause:
    return Clause(
        literals=tuple(literal_from_json(l) for l in doc.get("literals", [])),
        status=doc.get("status", STATUS_NORMAL),
        impure=bool(doc.get("impure", False)),
    )


def canonical_form(c: Clause) -> str:
    """Order- and duplicate-normalized identity string for lock/ban."""
    keys = sorted({(lit.atom.canonical, lit.negated) for lit in c.literals})
    return " & ".join(("not " if neg else "") + canon for canon, neg in keys)


def canonical_form_of(literals: Iterable[Literal]) -> str:
    keys = sorted({(lit.atom.canonical, lit.negated) for lit in literals})
    return " & ".join(("not " if neg else "") + canon for canon, neg in keys)


@dataclass(frozen=True)
class Rule:
    class_name: str
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self) -> None:
        forms = [canonical_form(c) for c in self.clauses]
        if len(set(forms)) != len(forms):
            raise ValidationError(f"rule for {self.class_name!r} repeats a clause")

    def to_json(self) -> dict:
        return {"class": self.class_name, "clauses": [c.to_json() for c in self.clauses]}


def rule_from_json(doc: dict) -> Rule:
    return Rule(
        class_name=str(doc["class"]),
        clauses=tuple(clause_from_json(c) for c in doc.get("clauses", [])),
    )


@dataclass(frozen=True)
class RuleSet:
    """One rule per task class plus the per-class ban registry."""

    rules: tuple[Rule, ...]
    banned: Mapping[str, frozenset[str]] = field(default_factory=dict)
    generation: int = 0

    def __post_init__(self) -> None:
        names = [r.class_name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate class in ruleset")
        for cls in self.banned:
            if cls not in names:
                raise ValidationError(f"banned registry names unknown class {cls!r}")
        for rule in self.rules:
            registry = self.banned.get(rule.class_name, frozenset())
            for clause in rule.clauses:
                if clause.status != STATUS_BANNED and canonical_form(clause) in registry:
                    raise ValidationError(
                        f"rule for {rule.class_name!r} contains banned clause "
                        f"{canonical_form(clause)!r}"
                    )

    def rule_for(self, class_name: str) -> Rule:
        for rule in self.rules:
            if rule.class_name == class_name:
                return rule
        raise KeyError(class_name)

    def banned_for(self, class_name: str) -> frozenset[str]:
        return self.banned.get(class_name, frozenset())

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(r.class_name for r in self.rules)

    def to_json(self) -> dict:
        return {
            "generation": self.generation,
            "rules": [r.to_json() for r in self.rules],
            "banned": {cls: sorted(forms) for cls, forms in sorted(self.banned.items()) if forms},
        }


def ruleset_from_json(doc: dict) -> RuleSet:
    return RuleSet(
        rules=tuple(rule_from_json(r) for r in doc.get("rules", [])),
        banned={cls: frozenset(forms) for cls, forms in doc.get("banned", {}).items()},
        generation=int(doc.get("generation", 0)),
    )


def empty_ruleset(classes: Iterable[str]) -> RuleSet:
    return RuleSet(rules=tuple(Rule(class_name=c) for c in classes), banned={}, generation=0)


# --- evaluation ---------------------------------------------------------------


def eval_literal(lit: Literal, img: ImageRecord, cfg: OverlapConfig = OverlapConfig()) -> bool:
    return eval_atom(lit.atom, img, cfg) != lit.negated


def eval_clause(c: Clause, img: ImageRecord, cfg: OverlapConfig = OverlapConfig()) -> bool:
    return all(eval_literal(lit, img, cfg) for lit in c.literals)


def eval_rule(r: Rule, img: ImageRecord, cfg: OverlapConfig = OverlapConfig()) -> bool:
    """True iff some non-banned clause holds; banned clauses are skipped."""
    return any(
        eval_clause(c, img, cfg) for c in r.clauses if c.status != STATUS_BANNED
    )


def matching_classes(rs: RuleSet, img: ImageRecord, cfg: OverlapConfig = OverlapConfig()) -> list[str]:
    return [r.class_name for r in rs.rules if eval_rule(r, img, cfg)]


def apply_ruleset(
    rs: RuleSet,
    pool: Iterable[ImageRecord],
    manual_labels: Mapping[str, str],
    cfg: OverlapConfig = OverlapConfig(),
) -> dict[str, LabelState]:
    """Label every pool image: manual labels win, then exactly one matching
    rule auto-labels, zero leaves unlabeled, several mark the image ambiguous."""
    out: dict[str, LabelState] = {}
    gen = rs.generation
    for img in pool:
        iid = img.image_id
        if iid in manual_labels:
            out[iid] = manual(iid, manual_labels[iid], gen)
            continue
        matched = matching_classes(rs, img, cfg)
        if len(matched) == 1:
            out[iid] = auto(iid, matched[0], gen)
        elif not matched:
            out[iid] = unlabeled(iid, gen)
        else:
            out[iid] = ambiguous(iid, tuple(matched), gen)
    return out


# --- edits --------------------------------------------------------------------


@dataclass(frozen=True)
class AddClause:
    class_name: str
    clause: Clause


@dataclass(frozen=True)
class AddLiteral:
    class_name: str
    clause_index: int
    literal: Literal


@dataclass(frozen=True)
class EditLiteral:
    class_name: str
    clause_index: int
    literal_index: int
    literal: Literal


@dataclass(frozen=True)
class RemoveLiteral:
    class_name: str
    clause_index: int
    literal_index: int


@dataclass(frozen=True)
class RemoveClause:
    class_name: str
    clause_index: int


@dataclass(frozen=True)
class Lock:
    class_name: str
    clause_index: int


@dataclass(frozen=True)
class Unlock:
    class_name: str
    clause_index: int


@dataclass(frozen=True)
class Ban:
    class_name: str
    clause_index: int


@dataclass(frozen=True)
class Unban:
    class_name: str
    canonical: str


@dataclass(frozen=True)
class ReplaceRule:
    class_name: str
    rule: Rule


RuleEdit = Union[
    AddClause, AddLiteral, EditLiteral, RemoveLiteral, RemoveClause,
    Lock, Unlock, Ban, Unban, ReplaceRule,
]

_EDIT_OPS = {
    AddClause: "add_clause",
    AddLiteral: "add_literal",
    EditLiteral: "edit_literal",
    RemoveLiteral: "remove_literal",
    RemoveClause: "remove_clause",
    Lock: "lock",
    Unlock: "unlock",
    Ban: "ban",
    Unban: "unban",
    ReplaceRule: "replace_rule",
}


def edit_to_json(edit: RuleEdit) -> dict:
    doc: dict = {"op": _EDIT_OPS[type(edit)], "class": edit.class_name}
    if isinstance(edit, AddClause):
        doc["clause"] = edit.clause.to_json()
    elif isinstance(edit, AddLiteral):
        doc.update(clause_index=edit.clause_index, literal=edit.literal.to_json())
    elif isinstance(edit, EditLiteral):
        doc.update(
            clause_index=edit.clause_index,
            literal_index=edit.literal_index,
            literal=edit.literal.to_json(),
        )
    elif isinstance(edit, RemoveLiteral):
        doc.update(clause_index=edit.clause_index, literal_index=edit.literal_index)
    elif isinstance(edit, (RemoveClause, Lock, Unlock, Ban)):
        doc["clause_index"] = edit.clause_index
    elif isinstance(edit, Unban):
        doc["canonical_form"] = edit.canonical
    elif isinstance(edit, ReplaceRule):
        doc["rule"] = edit.rule.to_json()
    return doc


def edit_from_json(doc: dict) -> RuleEdit:
    try:
        op = doc["op"]
        cls = str(doc["class"])
        if op == "add_clause":
            return AddClause(cls, clause_from_json(doc["clause"]))
        if op == "add_literal":
            return AddLiteral(cls, int(doc["clause_index"]), literal_from_json(doc["literal"]))
        if op == "edit_literal":
            return EditLiteral(
                cls, int(doc["clause_index"]), int(doc["literal_index"]),
                literal_from_json(doc["literal"]),
            )
        if op == "remove_literal":
            return RemoveLiteral(cls, int(doc["clause_index"]), int(doc["literal_index"]))
        if op == "remove_clause":
            return RemoveClause(cls, int(doc["clause_index"]))
        if op == "lock":
            return Lock(cls, int(doc["clause_index"]))
        if op == "unlock":
            return Unlock(cls, int(doc["clause_index"]))
        if op == "ban":
            return Ban(cls, int(doc["clause_index"]))
        if op == "unban":
            return Unban(cls, str(doc["canonical_form"]))
        if op == "replace_rule":
            return ReplaceRule(cls, rule_from_json(doc["rule"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise EditError(f"malformed edit payload: {exc}") from exc
    raise EditError(f"unknown edit op {doc.get('op')!r}")


def _rule_index(rs: RuleSet, class_name: str) -> int:
    for i, rule in enumerate(rs.rules):
        if rule.class_name == class_name:
            return i
    raise EditError(f"unknown class {class_name!r}")


def _clause_at(rule: Rule, index: int) -> Clause:
    if not (0 <= index < len(rule.clauses)):
        raise EditError(
            f"clause index {index} out of range for {rule.class_name!r} "
            f"({len(rule.clauses)} clauses)"
        )
    return rule.clauses[index]


def _require_editable(clause: Clause, what: str) -> None:
    if clause.status == STATUS_LOCKED:
        raise EditError(f"cannot {what} a locked clause; unlock it first")
    if clause.status == STATUS_BANNED:
        raise EditError(f"cannot {what} a banned clause; unban it first")


def _check_new_form(rule: Rule, rs: RuleSet, new_literals: tuple[Literal, ...],
                    skip_index: int | None = None) -> None:
    form = canonical_form_of(new_literals)
    for i, c in enumerate(rule.clauses):
        if i != skip_index and canonical_form(c) == form:
            raise EditError(f"duplicate clause {form!r}")
    if form in rs.banned_for(rule.class_name):
        raise EditError(f"clause {form!r} is banned; unban it first")


def _with_rule(rs: RuleSet, index: int, rule: Rule) -> RuleSet:
    rules = rs.rules[:index] + (rule,) + rs.rules[index + 1 :]
    return RuleSet(rules=rules, banned=rs.banned, generation=rs.generation)


def edit_ruleset(rs: RuleSet, edit: RuleEdit) -> RuleSet:
    """Apply one user edit, returning a new RuleSet; never mutates rs."""
    ri = _rule_index(rs, edit.class_name)
    rule = rs.rules[ri]

    if isinstance(edit, AddClause):
        clause = replace(edit.clause, status=STATUS_NORMAL, impure=False)
        _check_new_form(rule, rs, clause.literals)
        return _with_rule(rs, ri, Rule(rule.class_name, rule.clauses + (clause,)))

    if isinstance(edit, AddLiteral):
        clause = _clause_at(rule, edit.clause_index)
        _require_editable(clause, "edit")
        if any(l.atom == edit.literal.atom and l.negated == edit.literal.negated
               for l in clause.literals):
            raise EditError(f"literal {edit.literal.key!r} already in clause")
        new_literals = clause.literals + (edit.literal,)
        _check_new_form(rule, rs, new_literals, skip_index=edit.clause_index)
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, literals=new_literals)
        return _with_rule(rs, ri, Rule(rule.class_name, tuple(clauses)))

    if isinstance(edit, EditLiteral):
        clause = _clause_at(rule, edit.clause_index)
        _require_editable(clause, "edit")
        if not (0 <= edit.literal_index < len(clause.literals)):
            raise EditError(f"literal index {edit.literal_index} out of range")
        new_literals = list(clause.literals)
        new_literals[edit.literal_index] = edit.literal
        dupes = {(l.atom, l.negated) for l in new_literals}
        if len(dupes) != len(new_literals):
            raise EditError(f"edit would duplicate literal {edit.literal.key!r}")
        _check_new_form(rule, rs, tuple(new_literals), skip_index=edit.clause_index)
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, literals=tuple(new_literals))
        return _with_rule(rs, ri, Rule(rule.class_name, tuple(clauses)))

    if isinstance(edit, RemoveLiteral):
        clause = _clause_at(rule, edit.clause_index)
        _require_editable(clause, "edit")
        if not (0 <= edit.literal_index < len(clause.literals)):
            raise EditError(f"literal index {edit.literal_index} out of range")
        if len(clause.literals) == 1:
            raise EditError("a clause must contain at least one literal")
        new_literals = clause.literals[: edit.literal_index] + clause.literals[edit.literal_index + 1 :]
        _check_new_form(rule, rs, new_literals, skip_index=edit.clause_index)
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, literals=new_literals)
        return _with_rule(rs, ri, Rule(rule.class_name, tuple(clauses)))

    if isinstance(edit, RemoveClause):
        clause = _clause_at(rule, edit.clause_index)
        if clause.status == STATUS_LOCKED:
            raise EditError("cannot remove a locked clause; unlock it first")
        clauses = rule.clauses[: edit.clause_index] + rule.clauses[edit.clause_index + 1 :]
        return _with_rule(rs, ri, Rule(rule.class_name, clauses))

    if isinstance(edit, Lock):
        clause = _clause_at(rule, edit.clause_index)
        if clause.status == STATUS_BANNED:
            raise EditError("cannot lock a banned clause")
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, status=STATUS_LOCKED)
        return _with_rule(rs, ri, Rule(rule.class_name, tuple(clauses)))

    if isinstance(edit, Unlock):
        clause = _clause_at(rule, edit.clause_index)
        if clause.status == STATUS_BANNED:
            raise EditError("clause is banned, not locked")
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, status=STATUS_NORMAL)
        return _with_rule(rs, ri, Rule(rule.class_name, tuple(clauses)))

    if isinstance(edit, Ban):
        clause = _clause_at(rule, edit.clause_index)
        if clause.status == STATUS_LOCKED:
            raise EditError("cannot ban a locked clause; unlock it first")
        form = canonical_form(clause)
        clauses = list(rule.clauses)
        clauses[edit.clause_index] = replace(clause, status=STATUS_BANNED)
        banned = dict(rs.banned)
        banned[rule.class_name] = rs.banned_for(rule.class_name) | {form}
        return RuleSet(
            rules=rs.rules[:ri] + (Rule(rule.class_name, tuple(clauses)),) + rs.rules[ri + 1 :],
            banned=banned,
            generation=rs.generation,
        )

    if isinstance(edit, Unban):
        registry = rs.banned_for(rule.class_name)
        if edit.canonical not in registry:
            raise EditError(f"{edit.canonical!r} is not banned for {rule.class_name!r}")
        clauses = tuple(
            replace(c, status=STATUS_NORMAL)
            if c.status == STATUS_BANNED and canonical_form(c) == edit.canonical
            else c
            for c in rule.clauses
        )
        banned = dict(rs.banned)
        banned[rule.class_name] = registry - {edit.canonical}
        if not banned[rule.class_name]:
            del banned[rule.class_name]
        return RuleSet(
            rules=rs.rules[:ri] + (Rule(rule.class_name, clauses),) + rs.rules[ri + 1 :],
            banned=banned,
            generation=rs.generation,
        )

    if isinstance(edit, ReplaceRule):
        if edit.rule.class_name != edit.class_name:
            raise EditError("replacement rule names a different class")
        try:
            return _with_rule(rs, ri, edit.rule)
        except ValidationError as exc:
            raise EditError(str(exc)) from exc

    raise EditError(f"unsupported edit {type(edit).__name__}")
