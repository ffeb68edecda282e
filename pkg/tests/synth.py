"""Synthetic labeled-scene generator for simulator and benchmark tests.

Three scene classes, each betrayed by two signature attributes. A noise
fraction of the pool either loses one of its own signatures or picks up a
foreign one, which is exactly the kind of dirt that forces multi-clause
rules and label corrections. Holdout images stay clean so a correct ruleset
can actually be measured as correct.
"""
from __future__ import annotations

import random

from rulelab.predicates import Dataset, OverlapConfig

from conftest import make_image, obj

SIGNATURES = {
    "meadow": ("grassy", "open_sky"),
    "harbor": ("boats", "wet_dock"),
    "quarry": ("rubble", "machinery"),
}
BACKGROUND_ATTRS = ("sunny", "cloudy", "crowded", "distant")
THEME_OBJECTS = {
    "meadow": ("flower", "fence"),
    "harbor": ("boat", "crane"),
    "quarry": ("truck", "conveyor"),
}
SHARED_OBJECTS = ("person", "sign")


def _attributes(cls: str, rng: random.Random, noisy: bool, noise: float) -> set[str]:
    attrs = set(SIGNATURES[cls])
    if noisy:
        roll = rng.random()
        if roll < noise / 2:
            attrs.discard(rng.choice(SIGNATURES[cls]))
        elif roll < noise:
            other = rng.choice([c for c in SIGNATURES if c != cls])
            attrs.add(rng.choice(SIGNATURES[other]))
    attrs.update(a for a in BACKGROUND_ATTRS if rng.random() < 0.3)
    return attrs


def _objects(cls: str, rng: random.Random):
    out = []
    slot = 0
    for obj_type in THEME_OBJECTS[cls] + SHARED_OBJECTS:
        for _ in range(rng.randint(0, 2)):
            # disjoint slots: no accidental overlap atoms in the vocabulary
            out.append(obj(obj_type, x=slot * 20, y=0, w=10, h=10))
            slot += 1
    return out


def make_synthetic(pool_size: int = 270, holdout_per_class: int = 10,
                   noise: float = 0.10, seed: int = 0):
    """Build (dataset, ground_truth) with classes assigned round-robin."""
    rng = random.Random(seed)
    classes = tuple(SIGNATURES)

    pool = []
    truth: dict[str, str] = {}
    for i in range(pool_size):
        cls = classes[i % len(classes)]
        iid = f"img_{i:03d}"
        pool.append(make_image(
            iid,
            attributes=_attributes(cls, rng, noisy=True, noise=noise),
            objects=_objects(cls, rng),
        ))
        truth[iid] = cls

    holdout = []
    for cls in classes:
        for j in range(holdout_per_class):
            holdout.append((make_image(
                f"hold_{cls}_{j:02d}",
                attributes=_attributes(cls, rng, noisy=False, noise=0.0),
                objects=_objects(cls, rng),
            ), cls))

    dataset = Dataset(
        task_name="synthetic-scenes",
        classes=classes,
        pool=tuple(pool),
        holdout=tuple(holdout),
        overlap=OverlapConfig(),
    )
    return dataset, truth
