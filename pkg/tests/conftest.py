from __future__ import annotations

from rulelab.predicates import Dataset, DetectedObject, ImageRecord, OverlapConfig


def obj(object_type: str, x: float = 0, y: float = 0, w: float = 10, h: float = 10,
        confidence: float = 1.0) -> DetectedObject:
    return DetectedObject(object_type=object_type, bbox=(x, y, w, h), confidence=confidence)


def make_image(image_id: str, *, objects=(), attributes=(), uri: str | None = None) -> ImageRecord:
    return ImageRecord(
        image_id=image_id,
        uri=uri if uri is not None else f"mem://{image_id}",
        objects=tuple(objects),
        attributes=frozenset(attributes),
    )


def attr_image(image_id: str, *attributes: str) -> ImageRecord:
    """Shorthand for the attribute-only images most toy sets use."""
    return make_image(image_id, attributes=attributes)


def make_dataset(classes, pool, holdout=(), *, iou: float = 0.0, name: str = "task") -> Dataset:
    return Dataset(
        task_name=name,
        classes=tuple(classes),
        pool=tuple(pool),
        holdout=tuple(holdout),
        overlap=OverlapConfig(iou),
    )
