"""Image evidence model and grounded predicate evaluation.

An image is described by the output of an upstream extractor: detected
objects (type, bounding box, confidence, optional mask reference) plus
free-form attribute tags.  Labeling rules are built from three kinds of
boolean atoms over that evidence:

* ``count_at_least(type, k)`` -- the image holds at least k objects of a type
  (plain object presence is the k=1 case);
* ``overlaps(a, b)``          -- some object of type a and some object of
  type b overlap geometrically (bounding-box IoU above a task threshold);
* ``has_attribute(name)``     -- an attribute tag is present.
"""

from __future__ import annotations

import itertools
import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

KIND_COUNT = "count_at_least"
KIND_OVERLAPS = "overlaps"
KIND_ATTRIBUTE = "has_attribute"


class ParseError(ValueError):
    """A dataset document is not valid JSON or is structurally unreadable."""


class ValidationError(ValueError):
    """A dataset document violates an invariant; message names the offender."""


class FormatWarning(UserWarning):
    """Tolerated dataset-format oddity (unknown fields outside strict mode)."""


def normalize_token(raw: str) -> str:
    """Normalize an object type or attribute name: trimmed, lower-cased."""
    return raw.strip().lower()


@dataclass(frozen=True)
class OverlapConfig:
    """Geometry settings for overlaps(); threshold 0 means any positive
    intersection area counts."""

    iou_threshold: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.iou_threshold < 1.0):
            raise ValidationError(
                f"iou_threshold must be in [0, 1), got {self.iou_threshold!r}"
            )


@dataclass(frozen=True)
class DetectedObject:
    """One extractor detection: normalized type, xywh box, confidence."""

    object_type: str
    bbox: tuple[float, float, float, float]
    confidence: float = 1.0
    mask_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.object_type:
            raise ValidationError("object_type must be non-empty")
        if len(self.bbox) != 4 or any(
            not isinstance(v, (int, float)) or v != v or v in (float("inf"), float("-inf"))
            for v in self.bbox
        ):
            raise ValidationError(f"bbox must be four finite numbers, got {self.bbox!r}")
        x, y, w, h = self.bbox
        if w < 0 or h < 0:
            raise ValidationError(f"bbox width/height must be >= 0, got {self.bbox!r}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence must be in [0, 1], got {self.confidence!r}")

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]


def bbox_iou(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection-over-union of two xywh boxes; zero-area unions give 0."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(ax, bx)
    iy = max(ay, by)
    ix2 = min(ax + aw, bx + bw)
    iy2 = min(ay + ah, by + bh)
    iw = ix2 - ix
    ih = iy2 - iy
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class ImageRecord:
    """One image plus the extracted evidence rules are evaluated against."""

    image_id: str
    uri: str
    objects: tuple[DetectedObject, ...] = ()
    attributes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")

    @cached_property
    def type_counts(self) -> Counter:
        return Counter(o.object_type for o in self.objects)

    def count_of(self, object_type: str) -> int:
        return self.type_counts.get(object_type, 0)

    def objects_of(self, object_type: str) -> list[DetectedObject]:
        return [o for o in self.objects if o.object_type == object_type]


@dataclass(frozen=True)
class PredicateAtom:
    """A grounded boolean predicate over one image's evidence.

    kind/args pairs:
      count_at_least -> (object_type, k) with k >= 1
      overlaps       -> (type_a, type_b) stored in lexicographic order
      has_attribute  -> (attribute_name,)
    """

    kind: str
    args: tuple

    def __post_init__(self) -> None:
        if self.kind == KIND_COUNT:
            t, k = self.args
            if not t or not isinstance(k, int) or k < 1:
                raise ValidationError(f"bad count_at_least args {self.args!r}")
        elif self.kind == KIND_OVERLAPS:
            a, b = self.args
            if not a or not b:
                raise ValidationError(f"bad overlaps args {self.args!r}")
            if (a, b) != tuple(sorted((a, b))):
                raise ValidationError(f"overlaps args must be sorted, got {self.args!r}")
        elif self.kind == KIND_ATTRIBUTE:
            (name,) = self.args
            if not name:
                raise ValidationError("has_attribute needs a non-empty name")
        else:
            raise ValidationError(f"unknown atom kind {self.kind!r}")

    @property
    def canonical(self) -> str:
        """Stable display/identity string; atoms sort by this everywhere."""
        if self.kind == KIND_COUNT:
            return f"count({self.args[0]})>={self.args[1]}"
        if self.kind == KIND_OVERLAPS:
            return f"overlaps({self.args[0]},{self.args[1]})"
        return f"attr({self.args[0]})"

    def to_json(self) -> dict:
        return {"kind": self.kind, "args": list(self.args)}


def count_at_least(object_type: str, k: int = 1) -> PredicateAtom:
    return PredicateAtom(KIND_COUNT, (normalize_token(object_type), k))


def has_object(object_type: str) -> PredicateAtom:
    """Plain presence; canonicalizes to the count_at_least(type, 1) atom."""
    return count_at_least(object_type, 1)


def overlaps(type_a: str, type_b: str) -> PredicateAtom:
    a, b = sorted((normalize_token(type_a), normalize_token(type_b)))
    return PredicateAtom(KIND_OVERLAPS, (a, b))


def has_attribute(name: str) -> PredicateAtom:
    return PredicateAtom(KIND_ATTRIBUTE, (normalize_token(name),))


def atom_from_json(doc: dict) -> PredicateAtom:
    kind = doc.get("kind")
    args = doc.get("args", [])
    if kind == KIND_COUNT:
        return count_at_least(str(args[0]), int(args[1]))
    if kind == KIND_OVERLAPS:
        return overlaps(str(args[0]), str(args[1]))
    if kind == KIND_ATTRIBUTE:
        return has_attribute(str(args[0]))
    raise ValidationError(f"unknown atom kind {kind!r}")


def eval_atom(atom: PredicateAtom, img: ImageRecord, cfg: OverlapConfig = OverlapConfig()) -> bool:
    """Evaluate one atom against one image's evidence."""
    if atom.kind == KIND_COUNT:
        t, k = atom.args
        return img.count_of(t) >= k
    if atom.kind == KIND_OVERLAPS:
        a, b = atom.args
        first = img.objects_of(a)
        second = img.objects_of(b)
        for oa in first:
            for ob in second:
                if oa is ob:
                    continue  # an object never overlaps itself
                if bbox_iou(oa.bbox, ob.bbox) > cfg.iou_threshold:
                    return True
        return False
    return atom.args[0] in img.attributes


def evaluate_atoms(img: ImageRecord, atoms: list[PredicateAtom], cfg: OverlapConfig = OverlapConfig()) -> list[bool]:
    return [eval_atom(a, img, cfg) for a in atoms]


@dataclass(frozen=True)
class Dataset:
    """A labeling task: class names, unlabeled working pool, and a held-out
    ground-truth split used only for accuracy feedback."""

    task_name: str
    classes: tuple[str, ...]
    pool: tuple[ImageRecord, ...]
    holdout: tuple[tuple[ImageRecord, str], ...] = ()
    overlap: OverlapConfig = field(default_factory=OverlapConfig)

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValidationError("a task needs at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("class names must be unique")
        if any(not c for c in self.classes):
            raise ValidationError("class names must be non-empty")
        seen: set[str] = set()
        for img in self.pool:
            if img.image_id in seen:
                raise ValidationError(f"duplicate image_id {img.image_id!r} in pool")
            seen.add(img.image_id)
        for img, label in self.holdout:
            if img.image_id in seen:
                raise ValidationError(f"image_id {img.image_id!r} appears in both pool and holdout")
            seen.add(img.image_id)
            if label not in self.classes:
                raise ValidationError(
                    f"holdout image {img.image_id!r} labeled with unknown class {label!r}"
                )

    @cached_property
    def pool_by_id(self) -> dict[str, ImageRecord]:
        return {img.image_id: img for img in self.pool}

    def all_images(self) -> list[ImageRecord]:
        return list(self.pool) + [img for img, _ in self.holdout]


# --- dataset document (de)serialization --------------------------------------

_TASK_KEYS = {"name", "classes", "overlap_iou_threshold"}
_IMAGE_KEYS = {"id", "uri", "objects", "attributes"}
_OBJECT_KEYS = {"type", "bbox", "confidence", "mask_ref"}


def _check_keys(doc: dict, allowed: set[str], where: str, strict: bool) -> None:
    unknown = sorted(set(doc) - allowed)
    if not unknown:
        return
    msg = f"unknown field(s) {unknown} in {where}"
    if strict:
        raise ValidationError(msg)
    warnings.warn(msg, FormatWarning, stacklevel=3)


def image_from_json(doc: dict, *, strict: bool = False, where: str = "image") -> ImageRecord:
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: image record must be an object")
    _check_keys(doc, _IMAGE_KEYS, where, strict)
    try:
        image_id = str(doc["id"])
    except KeyError:
        raise ValidationError(f"{where}: missing required field 'id'") from None
    objs = []
    for i, o in enumerate(doc.get("objects", [])):
        owhere = f"{where} id={image_id!r} objects[{i}]"
        if not isinstance(o, dict):
            raise ValidationError(f"{owhere}: detection must be an object")
        _check_keys(o, _OBJECT_KEYS, owhere, strict)
        try:
            objs.append(
                DetectedObject(
                    object_type=normalize_token(str(o["type"])),
                    bbox=tuple(float(v) for v in o["bbox"]),
                    confidence=float(o.get("confidence", 1.0)),
                    mask_ref=o.get("mask_ref"),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{owhere}: missing required field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{owhere}: {exc}") from None
    attrs = frozenset(normalize_token(str(a)) for a in doc.get("attributes", []))
    attrs = frozenset(a for a in attrs if a)
    return ImageRecord(
        image_id=image_id,
        uri=str(doc.get("uri", "")),
        objects=tuple(objs),
        attributes=attrs,
    )


def image_to_json(img: ImageRecord) -> dict:
    doc: dict = {
        "id": img.image_id,
        "uri": img.uri,
        "objects": [
            {
                "type": o.object_type,
                "bbox": [float(v) for v in o.bbox],
                "confidence": float(o.confidence),
                **({"mask_ref": o.mask_ref} if o.mask_ref is not None else {}),
            }
            for o in img.objects
        ],
        "attributes": sorted(img.attributes),
    }
    return doc


def dataset_from_json(doc: dict, *, strict: bool = False) -> Dataset:
    if not isinstance(doc, dict):
        raise ParseError("dataset document must be a JSON object")
    for required in ("task", "pool"):
        if required not in doc:
            raise ParseError(f"dataset document missing required field {required!r}")
    _check_keys(doc, {"task", "pool", "holdout"}, "dataset", strict)
    task = doc["task"]
    if not isinstance(task, dict) or "name" not in task or "classes" not in task:
        raise ParseError("'task' must be an object with 'name' and 'classes'")
    _check_keys(task, _TASK_KEYS, "task", strict)
    overlap = OverlapConfig(float(task.get("overlap_iou_threshold", 0.0)))
    pool = tuple(
        image_from_json(img, strict=strict, where=f"pool[{i}]")
        for i, img in enumerate(doc.get("pool", []))
    )
    holdout = []
    for i, entry in enumerate(doc.get("holdout", [])):
        if not isinstance(entry, dict) or "image" not in entry or "label" not in entry:
            raise ValidationError(f"holdout[{i}] must be an object with 'image' and 'label'")
        _check_keys(entry, {"image", "label"}, f"holdout[{i}]", strict)
        holdout.append(
            (image_from_json(entry["image"], strict=strict, where=f"holdout[{i}]"), str(entry["label"]))
        )
    return Dataset(
        task_name=str(task["name"]),
        classes=tuple(str(c) for c in task["classes"]),
        pool=pool,
        holdout=tuple(holdout),
        overlap=overlap,
    )


def dataset_to_json(ds: Dataset) -> dict:
    return {
        "task": {
            "name": ds.task_name,
            "classes": list(ds.classes),
            "overlap_iou_threshold": ds.overlap.iou_threshold,
        },
        "pool": [image_to_json(img) for img in ds.pool],
        "holdout": [{"image": image_to_json(img), "label": label} for img, label in ds.holdout],
    }


def ingest_dataset(path: str | Path, *, strict: bool = False) -> Dataset:
    """Load and validate a dataset document from a JSON file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read dataset file {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"dataset file {path} is not valid JSON: {exc}") from exc
    return dataset_from_json(doc, strict=strict)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset_to_json(ds), indent=2, sort_keys=True))


def predicate_vocabulary(ds: Dataset) -> list[PredicateAtom]:
    """Candidate atoms grounded in the dataset, ordered by canonical string.

    One count_at_least(t, k) per observed per-image count k of each type t,
    one overlaps(a, b) per unordered type pair co-occurring in some image,
    and one has_attribute(n) per observed attribute.
    """
    counts: set[tuple[str, int]] = set()
    pairs: set[tuple[str, str]] = set()
    attrs: set[str] = set()
    for img in ds.all_images():
        present = sorted(img.type_counts)
        for t in present:
            counts.add((t, img.type_counts[t]))
        for a, b in itertools.combinations(present, 2):
            pairs.add((a, b))
        attrs.update(img.attributes)
    vocab = [count_at_least(t, k) for t, k in counts]
    vocab += [PredicateAtom(KIND_OVERLAPS, pair) for pair in pairs]
    vocab += [has_attribute(a) for a in attrs]
    vocab.sort(key=lambda a: a.canonical)
    return vocab
