"""Event-sourced labeling session: state machine, persistence, replay.

Every mutation is a pure transition ``state -> state`` driven by a typed,
timestamped event; the live operation and log replay share the same code
path, so replaying ``initial snapshot + event log`` reconstructs the current
state byte-for-byte.  Persistence is a JSON snapshot plus an append-only
JSON-lines event log per session, snapshots written atomically.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

from . import labels as lbl
from .induction import InductionConfig, induce_ruleset, induction_config_from_json
from .labels import LabelState, label_state_from_json
from .predicates import (
    Dataset,
    ValidationError,
    dataset_from_json,
    dataset_to_json,
    ingest_dataset,
    predicate_vocabulary,
)
from .recommend import (
    AccuracyReport,
    ActiveLearningConfig,
    ImportanceTable,
    SuggestionSet,
    accuracy_report_from_json,
    al_config_from_json,
    compute_importance,
    holdout_accuracy,
    importance_table_from_json,
    suggest_images,
    suggestion_set_from_json,
)
from .rules import RuleEdit, RuleSet, apply_ruleset, edit_from_json, edit_to_json, edit_ruleset, empty_ruleset, ruleset_from_json


class SessionError(Exception):
    pass


class UnknownSessionError(SessionError):
    pass


class UnknownImageError(SessionError):
    pass


class UnknownClassError(SessionError):
    pass


class NoLabelsError(SessionError):
    pass


class ConflictError(SessionError):
    """Another mutation holds the session's writer lock."""


class StorageError(SessionError):
    pass


EVENT_LABEL_SET = "label_set"
EVENT_LABEL_CLEARED = "label_cleared"
EVENT_AUTOLABEL_RUN = "autolabel_run"
EVENT_RULE_EDITED = "rule_edited"
EVENT_PREVIEW = "preview"
EVENT_EXPORT = "export"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: str
    type: str
    payload: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "timestamp": self.timestamp, "type": self.type,
                "payload": self.payload}


def event_from_json(doc: dict) -> SessionEvent:
    return SessionEvent(
        seq=int(doc["seq"]), timestamp=str(doc["timestamp"]),
        type=str(doc["type"]), payload=dict(doc.get("payload", {})),
    )


@dataclass(frozen=True)
class ProgressStats:
    manual: int
    auto: int
    unlabeled: int
    ambiguous: int

    @property
    def total(self) -> int:
        return self.manual + self.auto + self.unlabeled + self.ambiguous

    def to_json(self) -> dict:
        total = self.total

        def frac(n: int) -> float:
            return n / total if total else 0.0

        return {
            "manual": self.manual,
            "auto": self.auto,
            "unlabeled": self.unlabeled,
            "ambiguous": self.ambiguous,
            "total": total,
            "fractions": {
                "manual": frac(self.manual),
                "auto": frac(self.auto),
                "unlabeled": frac(self.unlabeled),
                "ambiguous": frac(self.ambiguous),
            },
        }


@dataclass(frozen=True)
class SessionState:
    session_id: str
    dataset: Dataset
    labels: Mapping[str, LabelState]
    ruleset: RuleSet
    importance: ImportanceTable
    suggestions: SuggestionSet
    last_report: AccuracyReport | None
    iteration: int
    events: tuple[SessionEvent, ...] = ()

    def manual_labels(self) -> dict[str, str]:
        return {
            iid: st.label  # type: ignore[misc]
            for iid, st in self.labels.items()
            if st.status == lbl.STATUS_MANUAL
        }


def progress_stats(state: SessionState) -> ProgressStats:
    counts = {lbl.STATUS_MANUAL: 0, lbl.STATUS_AUTO: 0,
              lbl.STATUS_UNLABELED: 0, lbl.STATUS_AMBIGUOUS: 0}
    for st in state.labels.values():
        counts[st.status] += 1
    return ProgressStats(
        manual=counts[lbl.STATUS_MANUAL],
        auto=counts[lbl.STATUS_AUTO],
        unlabeled=counts[lbl.STATUS_UNLABELED],
        ambiguous=counts[lbl.STATUS_AMBIGUOUS],
    )


def new_session(session_id: str, dataset: Dataset) -> SessionState:
    """Fresh session: everything unlabeled, empty generation-0 ruleset,
    importance computed over the pool, diversity-only initial suggestions."""
    if not dataset.pool:
        raise ValidationError("dataset pool is empty")
    ruleset = empty_ruleset(dataset.classes)
    labels = {img.image_id: lbl.unlabeled(img.image_id) for img in dataset.pool}
    vocab = predicate_vocabulary(dataset)
    suggestions = suggest_images(
        dataset.pool, {}, ruleset, vocab, ActiveLearningConfig(), dataset.overlap
    )
    report = (
        holdout_accuracy(ruleset, dataset.holdout, dataset.overlap)
        if dataset.holdout else None
    )
    return SessionState(
        session_id=session_id,
        dataset=dataset,
        labels=labels,
        ruleset=ruleset,
        importance=compute_importance(dataset.pool),
        suggestions=suggestions,
        last_report=report,
        iteration=0,
        events=(),
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _next_event(state: SessionState, etype: str, payload: dict,
                timestamp: str | None = None) -> SessionEvent:
    return SessionEvent(
        seq=len(state.events) + 1,
        timestamp=timestamp if timestamp is not None else _now(),
        type=etype,
        payload=payload,
    )


def _merge_labels(old: Mapping[str, LabelState], new: dict[str, LabelState]) -> dict[str, LabelState]:
    # keep the previous LabelState object (and its updated_generation) when
    # nothing observable changed, so reruns are stable
    merged = {}
    for iid, st in new.items():
        prev = old.get(iid)
        if prev is not None and (prev.status, prev.label, prev.classes) == (st.status, st.label, st.classes):
            merged[iid] = prev
        else:
            merged[iid] = st
    return merged


def _drop_suggestion(suggestions: SuggestionSet, image_id: str) -> SuggestionSet:
    if image_id not in suggestions.image_ids:
        return suggestions
    return SuggestionSet(
        image_ids=tuple(i for i in suggestions.image_ids if i != image_id),
        scores={i: s for i, s in suggestions.scores.items() if i != image_id},
        generation=suggestions.generation,
    )


def _transition(state: SessionState, etype: str, payload: dict) -> SessionState:
    """Apply one event's effect (excluding the log append). Must stay a pure
    deterministic function of (state, type, payload) for replay to hold."""
    if etype == EVENT_LABEL_SET:
        iid = payload["image_id"]
        cls = payload["label"]
        if iid not in state.dataset.pool_by_id:
            raise UnknownImageError(f"unknown image {iid!r}")
        if cls not in state.dataset.classes:
            raise UnknownClassError(f"unknown class {cls!r}")
        labels = dict(state.labels)
        labels[iid] = lbl.manual(iid, cls, state.ruleset.generation)
        return replace(state, labels=labels,
                       suggestions=_drop_suggestion(state.suggestions, iid))

    if etype == EVENT_LABEL_CLEARED:
        iid = payload["image_id"]
        if iid not in state.dataset.pool_by_id:
            raise UnknownImageError(f"unknown image {iid!r}")
        labels = dict(state.labels)
        labels[iid] = lbl.unlabeled(iid, state.ruleset.generation)
        return replace(state, labels=labels)

    if etype == EVENT_AUTOLABEL_RUN:
        cfg = induction_config_from_json(payload.get("config", {}))
        al_cfg = al_config_from_json(payload.get("active_learning", {}))
        manual_map = state.manual_labels()
        if not manual_map:
            raise NoLabelsError("no manual labels to induce from")
        rs = induce_ruleset(manual_map, state.dataset, state.ruleset, cfg)
        applied = apply_ruleset(rs, state.dataset.pool, manual_map, state.dataset.overlap)
        labels = _merge_labels(state.labels, applied)
        vocab = predicate_vocabulary(state.dataset)
        suggestions = suggest_images(
            state.dataset.pool, manual_map, rs, vocab, al_cfg, state.dataset.overlap
        )
        report = (
            holdout_accuracy(rs, state.dataset.holdout, state.dataset.overlap)
            if state.dataset.holdout else None
        )
        return replace(state, ruleset=rs, labels=labels, suggestions=suggestions,
                       last_report=report, iteration=rs.generation)

    if etype == EVENT_RULE_EDITED:
        edit = edit_from_json(payload["edit"])
        rs = edit_ruleset(state.ruleset, edit)
        manual_map = state.manual_labels()
        applied = apply_ruleset(rs, state.dataset.pool, manual_map, state.dataset.overlap)
        labels = _merge_labels(state.labels, applied)
        vocab = predicate_vocabulary(state.dataset)
        suggestions = suggest_images(
            state.dataset.pool, manual_map, rs, vocab,
            al_config_from_json(payload.get("active_learning", {})),
            state.dataset.overlap,
        )
        report = (
            holdout_accuracy(rs, state.dataset.holdout, state.dataset.overlap)
            if state.dataset.holdout else None
        )
        return replace(state, ruleset=rs, labels=labels, suggestions=suggestions,
                       last_report=report)

    if etype in (EVENT_PREVIEW, EVENT_EXPORT):
        return state

    raise ValidationError(f"unknown event type {etype!r}")


def apply_event(state: SessionState, event: SessionEvent) -> SessionState:
    nxt = _transition(state, event.type, event.payload)
    return replace(nxt, events=state.events + (event,))


def set_label(state: SessionState, image_id: str, label: str, *,
              timestamp: str | None = None) -> SessionState:
    event = _next_event(state, EVENT_LABEL_SET,
                        {"image_id": image_id, "label": label}, timestamp)
    return apply_event(state, event)


def clear_label(state: SessionState, image_id: str, *,
                timestamp: str | None = None) -> SessionState:
    event = _next_event(state, EVENT_LABEL_CLEARED, {"image_id": image_id}, timestamp)
    return apply_event(state, event)


def run_autolabel(state: SessionState, cfg: InductionConfig = InductionConfig(),
                  al_cfg: ActiveLearningConfig = ActiveLearningConfig(), *,
                  timestamp: str | None = None) -> SessionState:
    """Induce, apply, score, suggest; logs the run with wall-clock timing."""
    payload = {"config": cfg.to_json(), "active_learning": al_cfg.to_json()}
    t0 = time.perf_counter()
    nxt = _transition(state, EVENT_AUTOLABEL_RUN, payload)
    payload = dict(payload, timing_ms=round((time.perf_counter() - t0) * 1000.0, 3))
    event = _next_event(state, EVENT_AUTOLABEL_RUN, payload, timestamp)
    return replace(nxt, events=state.events + (event,))


def apply_rule_edit(state: SessionState, edit: RuleEdit, *,
                    timestamp: str | None = None) -> SessionState:
    event = _next_event(state, EVENT_RULE_EDITED, {"edit": edit_to_json(edit)}, timestamp)
    return apply_event(state, event)


def preview_rules(state: SessionState, candidate: RuleSet, *,
                  timestamp: str | None = None):
    """What accuracy/progress WOULD be under ``candidate``; only the Preview
    event is appended to the session."""
    for cls in candidate.classes:
        if cls not in state.dataset.classes:
            raise ValidationError(f"candidate ruleset names foreign class {cls!r}")
    manual_map = state.manual_labels()
    applied = apply_ruleset(candidate, state.dataset.pool, manual_map, state.dataset.overlap)
    counts = {lbl.STATUS_MANUAL: 0, lbl.STATUS_AUTO: 0,
              lbl.STATUS_UNLABELED: 0, lbl.STATUS_AMBIGUOUS: 0}
    for st in applied.values():
        counts[st.status] += 1
    stats = ProgressStats(counts[lbl.STATUS_MANUAL], counts[lbl.STATUS_AUTO],
                          counts[lbl.STATUS_UNLABELED], counts[lbl.STATUS_AMBIGUOUS])
    report = (
        holdout_accuracy(candidate, state.dataset.holdout, state.dataset.overlap)
        if state.dataset.holdout else None
    )
    event = _next_event(state, EVENT_PREVIEW, {"ruleset": candidate.to_json()}, timestamp)
    return apply_event(state, event), report, stats


def export_payload(state: SessionState) -> dict:
    """Deterministic export document: committed labels with provenance plus
    the still-unresolved remainder."""
    entries = []
    unresolved = []
    for iid in sorted(state.labels):
        st = state.labels[iid]
        if st.status in (lbl.STATUS_MANUAL, lbl.STATUS_AUTO):
            entries.append({"image_id": iid, "label": st.label, "provenance": st.status})
        else:
            item = {"image_id": iid, "status": st.status}
            if st.classes:
                item["classes"] = list(st.classes)
            unresolved.append(item)
    return {"labels": entries, "unresolved": unresolved}


def export_labels(state: SessionState, path: str | Path, *,
                  timestamp: str | None = None):
    """Write the export document to ``path``; returns (state, summary)."""
    doc = export_payload(state)
    try:
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))
    except OSError as exc:
        raise StorageError(f"cannot write export to {path}: {exc}") from exc
    event = _next_event(state, EVENT_EXPORT, {"path": str(path)}, timestamp)
    stats = progress_stats(state)
    summary = {
        "path": str(path),
        "labeled": len(doc["labels"]),
        "manual": stats.manual,
        "auto": stats.auto,
        "unresolved": len(doc["unresolved"]),
    }
    return apply_event(state, event), summary


# --- serialization ------------------------------------------------------------


def session_to_json(state: SessionState) -> dict:
    return {
        "session_id": state.session_id,
        "dataset": dataset_to_json(state.dataset),
        "labels": {iid: state.labels[iid].to_json() for iid in sorted(state.labels)},
        "ruleset": state.ruleset.to_json(),
        "importance": state.importance.to_json(),
        "suggestions": state.suggestions.to_json(),
        "last_report": state.last_report.to_json() if state.last_report else None,
        "iteration": state.iteration,
        "events": [e.to_json() for e in state.events],
    }


def session_from_json(doc: dict) -> SessionState:
    return SessionState(
        session_id=doc["session_id"],
        dataset=dataset_from_json(doc["dataset"]),
        labels={iid: label_state_from_json(l) for iid, l in doc["labels"].items()},
        ruleset=ruleset_from_json(doc["ruleset"]),
        importance=importance_table_from_json(doc["importance"]),
        suggestions=suggestion_set_from_json(doc["suggestions"]),
        last_report=(
            accuracy_report_from_json(doc["last_report"]) if doc.get("last_report") else None
        ),
        iteration=int(doc["iteration"]),
        events=tuple(event_from_json(e) for e in doc.get("events", [])),
    )


def dumps_session(state: SessionState) -> str:
    """Canonical session bytes; equality here is the replay contract."""
    return json.dumps(session_to_json(state), sort_keys=True, separators=(",", ":"))


# --- persistence --------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


class SessionStore:
    """Disk-backed session registry with a per-session exclusive writer.

    Layout per session: ``<root>/<id>/initial.json`` (state at creation),
    ``events.jsonl`` (append-only), ``snapshot.json`` (latest state, written
    atomically after every mutation).
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._states: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- internals --------------------------------------------------------

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _persist(self, old: SessionState, new: SessionState) -> None:
        sdir = self._dir(new.session_id)
        try:
            with open(sdir / "events.jsonl", "a") as fh:
                for event in new.events[len(old.events):]:
                    fh.write(json.dumps(event.to_json(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"cannot append events for {new.session_id}: {exc}") from exc
        _atomic_write(sdir / "snapshot.json", dumps_session(new))

    # -- API ---------------------------------------------------------------

    def create(self, dataset_path: str | Path | None = None, *,
               dataset_doc: dict | None = None, strict: bool = False) -> SessionState:
        if (dataset_path is None) == (dataset_doc is None):
            raise ValidationError("provide exactly one of dataset path or inline dataset")
        if dataset_path is not None:
            dataset = ingest_dataset(dataset_path, strict=strict)
        else:
            dataset = dataset_from_json(dataset_doc, strict=strict)
        session_id = uuid.uuid4().hex[:12]
        state = new_session(session_id, dataset)
        sdir = self._dir(session_id)
        try:
            sdir.mkdir(parents=True)
            (sdir / "events.jsonl").touch()
        except OSError as exc:
            raise StorageError(f"cannot create session dir {sdir}: {exc}") from exc
        _atomic_write(sdir / "initial.json", dumps_session(state))
        _atomic_write(sdir / "snapshot.json", dumps_session(state))
        with self._registry_lock:
            self._states[session_id] = state
            self._locks.setdefault(session_id, threading.Lock())
        return state

    def ids(self) -> list[str]:
        on_disk = {p.name for p in self.root.iterdir() if (p / "snapshot.json").exists()}
        return sorted(on_disk | set(self._states))

    def get(self, session_id: str) -> SessionState:
        with self._registry_lock:
            state = self._states.get(session_id)
        if state is not None:
            return state
        state = self._recover(session_id)
        with self._registry_lock:
            self._states.setdefault(session_id, state)
        return state

    def _recover(self, session_id: str) -> SessionState:
        sdir = self._dir(session_id)
        snap = sdir / "snapshot.json"
        if not snap.exists():
            raise UnknownSessionError(f"unknown session {session_id!r}")
        state = session_from_json(json.loads(snap.read_text()))
        # apply any events committed to the log after the snapshot was cut
        for event in self._read_events(session_id)[len(state.events):]:
            state = apply_event(state, event)
        return state

    def _read_events(self, session_id: str) -> list[SessionEvent]:
        path = self._dir(session_id) / "events.jsonl"
        if not path.exists():
            return []
        events = []
        for line in path.read_text().splitlines():
            if line.strip():
                events.append(event_from_json(json.loads(line)))
        return events

    def replay(self, session_id: str) -> SessionState:
        """Rebuild the session purely from initial snapshot + event log."""
        sdir = self._dir(session_id)
        initial = sdir / "initial.json"
        if not initial.exists():
            raise UnknownSessionError(f"unknown session {session_id!r}")
        state = session_from_json(json.loads(initial.read_text()))
        for event in self._read_events(session_id):
            state = apply_event(state, event)
        return state

    def mutate(self, session_id: str, fn: Callable[[SessionState], SessionState]) -> SessionState:
        """Run one mutation under the session's exclusive writer lock."""
        lock = self._lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise ConflictError(f"session {session_id!r} is busy with another mutation")
        try:
            old = self.get(session_id)
            new = fn(old)
            self._persist(old, new)
            with self._registry_lock:
                self._states[session_id] = new
            return new
        finally:
            lock.release()

    def set_label(self, session_id: str, image_id: str, label: str) -> SessionState:
        return self.mutate(session_id, lambda s: set_label(s, image_id, label))

    def clear_label(self, session_id: str, image_id: str) -> SessionState:
        return self.mutate(session_id, lambda s: clear_label(s, image_id))

    def autolabel(self, session_id: str, cfg: InductionConfig = InductionConfig(),
                  al_cfg: ActiveLearningConfig = ActiveLearningConfig()) -> SessionState:
        return self.mutate(session_id, lambda s: run_autolabel(s, cfg, al_cfg))

    def edit_rules(self, session_id: str, edit: RuleEdit) -> SessionState:
        return self.mutate(session_id, lambda s: apply_rule_edit(s, edit))

    def preview(self, session_id: str, candidate: RuleSet):
        result: list = []

        def fn(s: SessionState) -> SessionState:
            nxt, report, stats = preview_rules(s, candidate)
            result.append((report, stats))
            return nxt

        self.mutate(session_id, fn)
        return result[0]

    def export(self, session_id: str, path: str | Path | None = None):
        if path is None:
            path = self._dir(session_id) / "export.json"
        result: list = []

        def fn(s: SessionState) -> SessionState:
            nxt, summary = export_labels(s, path)
            result.append(summary)
            return nxt

        self.mutate(session_id, fn)
        return result[0]
