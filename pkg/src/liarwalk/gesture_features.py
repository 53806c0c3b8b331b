"""Gesture annotations, their 7-dim numeric encoding, and per-class presence stats."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

import numpy as np

from .errors import DataFormatError

if TYPE_CHECKING:
    from .pose_data import Dataset

#: Fixed gesture order; component 0 counts hands (0, 1 or 2), the rest are binary flags.
GESTURE_NAMES = (
    "hands_in_pockets",
    "looking_around",
    "touching_face",
    "touching_shirt",
    "touching_hair",
    "hands_folded",
    "looking_at_phone",
)


@dataclass(frozen=True)
class GestureAnnotation:
    hands_in_pockets: int = 0
    looking_around: int = 0
    touching_face: int = 0
    touching_shirt: int = 0
    touching_hair: int = 0
    hands_folded: int = 0
    looking_at_phone: int = 0

    def __post_init__(self):
        if self.hands_in_pockets not in (0, 1, 2):
            raise DataFormatError(
                f"hands_in_pockets must be 0, 1 or 2, got {self.hands_in_pockets}"
            )
        for f in fields(self)[1:]:
            v = getattr(self, f.name)
            if v not in (0, 1):
                raise DataFormatError(f"gesture {f.name} must be 0 or 1, got {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "GestureAnnotation":
        unknown = set(d) - set(GESTURE_NAMES)
        if unknown:
            raise DataFormatError(f"unknown gesture key(s): {sorted(unknown)}")
        missing = set(GESTURE_NAMES) - set(d)
        if missing:
            raise DataFormatError(f"missing gesture key(s): {sorted(missing)}")
        return cls(**{k: int(d[k]) for k in GESTURE_NAMES})

    def to_dict(self) -> dict:
        return {name: int(getattr(self, name)) for name in GESTURE_NAMES}


def encode_gestures(ann: GestureAnnotation) -> np.ndarray:
    """Encode an annotation as the fixed-order 7-vector of floats."""
    return np.array([float(getattr(ann, name)) for name in GESTURE_NAMES])


def gesture_class_stats(ds: "Dataset") -> dict[int, dict[str, float]]:
    """Per-class percentage of points in which each gesture was observed.

    hands_in_pockets counts as observed when >= 1 hand is in a pocket.
    Only labels present in the dataset appear in the result.
    """
    counts: dict[int, int] = {}
    present: dict[int, dict[str, int]] = {}
    for pt in ds.points:
        lbl = pt.label
        counts[lbl] = counts.get(lbl, 0) + 1
        row = present.setdefault(lbl, {name: 0 for name in GESTURE_NAMES})
        for name in GESTURE_NAMES:
            if getattr(pt.gestures, name) >= 1:
                row[name] += 1
    return {
        lbl: {name: 100.0 * present[lbl][name] / counts[lbl] for name in GESTURE_NAMES}
        for lbl in sorted(counts)
    }
