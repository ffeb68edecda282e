"""Per-image label assignment with provenance.

Shared between the rule engine (which assigns auto labels) and the session
layer (which owns manual labels and progress statistics).
"""

from __future__ import annotations

from dataclasses import dataclass

STATUS_MANUAL = "manual"
STATUS_AUTO = "auto"
STATUS_UNLABELED = "unlabeled"
STATUS_AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class LabelState:
    """How one pool image is currently labeled and by whom."""

    image_id: str
    status: str
    label: str | None = None
    classes: tuple[str, ...] = ()  # populated only for ambiguous
    updated_generation: int = 0

    def __post_init__(self) -> None:
        if self.status in (STATUS_MANUAL, STATUS_AUTO):
            if not self.label:
                raise ValueError(f"{self.status} state needs a label")
        elif self.status == STATUS_AMBIGUOUS:
            if len(self.classes) < 2:
                raise ValueError("ambiguous state needs >= 2 classes")
        elif self.status != STATUS_UNLABELED:
            raise ValueError(f"unknown label status {self.status!r}")

    def to_json(self) -> dict:
        doc: dict = {
            "image_id": self.image_id,
            "status": self.status,
            "updated_generation": self.updated_generation,
        }
        if self.label is not None:
            doc["label"] = self.label
        if self.classes:
            doc["classes"] = list(self.classes)
        return doc


def label_state_from_json(doc: dict) -> LabelState:
    return LabelState(
        image_id=doc["image_id"],
        status=doc["status"],
        label=doc.get("label"),
        classes=tuple(doc.get("classes", [])),
        updated_generation=doc.get("updated_generation", 0),
    )


def manual(image_id: str, label: str, generation: int = 0) -> LabelState:
    return LabelState(image_id, STATUS_MANUAL, label=label, updated_generation=generation)


def auto(image_id: str, label: str, generation: int = 0) -> LabelState:
    return LabelState(image_id, STATUS_AUTO, label=label, updated_generation=generation)


def unlabeled(image_id: str, generation: int = 0) -> LabelState:
    return LabelState(image_id, STATUS_UNLABELED, updated_generation=generation)


def ambiguous(image_id: str, classes: tuple[str, ...], generation: int = 0) -> LabelState:
    return LabelState(
        image_id, STATUS_AMBIGUOUS, classes=tuple(sorted(classes)), updated_generation=generation
    )
