"""Label-preserving augmentations: reflection about the vertical axis and
cyclic temporal phase shifts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataFormatError
from .pose_data import MIRROR_PERM, DataPoint, Dataset, PoseSequence

log = logging.getLogger(__name__)


def reflect_vertical(seq: PoseSequence) -> PoseSequence:
    """Negate every x coordinate, then swap left/right joint slots so the
    skeleton stays anatomically labeled."""
    frames = seq.frames.copy()
    frames[:, :, 0] *= -1.0
    frames = frames[:, MIRROR_PERM]
    return seq.with_frames(frames, id_suffix="#refl")


def phase_shift(seq: PoseSequence, k: int) -> PoseSequence:
    """Cyclic rotation of the frame axis: output frame i = input frame (i+k) mod tau."""
    if not 0 <= k < seq.tau:
        raise DataFormatError(f"phase shift {k} out of range for tau={seq.tau}")
    frames = np.roll(seq.frames, -k, axis=0)
    return seq.with_frames(frames, id_suffix=f"#ps{k}")


@dataclass
class AugmentConfig:
    reflect: bool = False
    shifts: list[int] = field(default_factory=list)


def augment_dataset(ds: Dataset, cfg: AugmentConfig) -> Dataset:
    """Originals plus the reflect x shift cross-product of variants; labels,
    gestures and subject ids are copied unchanged."""
    points: list[DataPoint] = []
    for pt in ds.points:
        variants = [pt.sequence]
        if cfg.reflect:
            variants.append(reflect_vertical(pt.sequence))
        for base in list(variants):
            for k in cfg.shifts:
                if not 0 <= k < base.tau:
                    log.warning(
                        "skipping phase shift %d for %r (tau=%d)", k, base.id, base.tau
                    )
                    continue
                variants.append(phase_shift(base, k))
        points.extend(
            replace(pt, sequence=v) for v in variants
        )
    return Dataset(points=points)
