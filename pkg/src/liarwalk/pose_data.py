"""Core data model: 16-joint pose sequences, labeled data points, ingestion and
normalization (similarity transform, min-max scaling, fixed-length conditioning)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DataFormatError, DegenerateSequenceError
from .gesture_features import GestureAnnotation

N_JOINTS = 16
POSE_DIM = N_JOINTS * 3


class Joint(IntEnum):
    ROOT = 0  # pelvis
    SPINE = 1  # back
    NECK = 2
    HEAD = 3
    LSHOULDER = 4
    LELBOW = 5
    LHAND = 6
    RSHOULDER = 7
    RELBOW = 8
    RHAND = 9
    LHIP = 10
    LKNEE = 11
    LFOOT = 12
    RHIP = 13
    RKNEE = 14
    RFOOT = 15


#: Left/right mirror pairs; joints 0-3 lie on the midline and map to themselves.
MIRROR_PAIRS = ((4, 7), (5, 8), (6, 9), (10, 13), (11, 14), (12, 15))

#: Permutation that swaps left and right joint slots.
MIRROR_PERM = np.arange(N_JOINTS)
for _l, _r in MIRROR_PAIRS:
    MIRROR_PERM[_l], MIRROR_PERM[_r] = _r, _l


@dataclass
class PoseSequence:
    id: str
    subject_id: str
    walk_index: int
    fps: float
    frames: np.ndarray  # (tau, 16, 3)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[1:] != (N_JOINTS, 3):
            raise DataFormatError(
                f"frames must have shape (tau, {N_JOINTS}, 3), got {self.frames.shape}"
            )
        if self.frames.shape[0] < 2:
            raise DataFormatError("a sequence needs at least 2 frames")
        if not np.isfinite(self.frames).all():
            raise DataFormatError(f"sequence {self.id!r} contains non-finite coordinates")
        if self.fps <= 0:
            raise DataFormatError(f"fps must be positive, got {self.fps}")

    @property
    def tau(self) -> int:
        return self.frames.shape[0]

    def with_frames(self, frames: np.ndarray, id_suffix: str = "") -> "PoseSequence":
        return replace(self, frames=frames, id=self.id + id_suffix)


@dataclass
class DataPoint:
    sequence: PoseSequence
    gestures: GestureAnnotation
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataFormatError(f"label out of domain: {self.label}")


@dataclass
class NormStats:
    """Per-channel (48) min/max fitted over the training split."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.asarray(self.mins, dtype=np.float64).reshape(POSE_DIM)
        self.maxs = np.asarray(self.maxs, dtype=np.float64).reshape(POSE_DIM)
        if (self.mins > self.maxs).any():
            raise DataFormatError("NormStats requires min <= max per channel")

    @property
    def constant(self) -> np.ndarray:
        return self.mins == self.maxs


@dataclass
class Dataset:
    points: list[DataPoint] = field(default_factory=list)
    norm_stats: Optional[NormStats] = None

    def __post_init__(self):
        ids = [p.sequence.id for p in self.points]
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise DataFormatError(f"duplicate sequence id: {dup!r}")

    def __len__(self) -> int:
        return len(self.points)

    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.points], dtype=np.int64)


# ---------------------------------------------------------------------------
# Ingestion (JSON Lines, one data point per line)
# ---------------------------------------------------------------------------

def _parse_point(obj: dict, line: int) -> DataPoint:
    for key in ("id", "subject", "walk", "fps", "label", "gestures", "frames"):
        if key not in obj:
            raise DataFormatError(f"missing key {key!r}", line=line)
    raw_frames = obj["frames"]
    if not raw_frames:
        raise DataFormatError("empty frame list", line=line)
    for k, fr in enumerate(raw_frames):
        if len(fr) != POSE_DIM:
            raise DataFormatError(
                f"frame {k} has {len(fr)} coordinates, expected {POSE_DIM}", line=line
            )
        if not all(math.isfinite(v) for v in fr):
            raise DataFormatError(f"frame {k} contains a non-finite coordinate", line=line)
    frames = np.asarray(raw_frames, dtype=np.float64).reshape(-1, N_JOINTS, 3)
    label = obj["label"]
    if label not in (0, 1):
        raise DataFormatError(f"label out of domain: {label}", line=line)
    try:
        gestures = GestureAnnotation.from_dict(obj["gestures"])
        seq = PoseSequence(
            id=str(obj["id"]),
            subject_id=str(obj["subject"]),
            walk_index=int(obj["walk"]),
            fps=float(obj["fps"]),
            frames=frames,
        )
    except DataFormatError as e:
        raise DataFormatError(str(e), line=line) from None
    return DataPoint(sequence=seq, gestures=gestures, label=int(label))


def parse_dataset(path: str | Path) -> Dataset:
    """Read a JSONL pose dataset, validating every line. Order is preserved."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    points = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"invalid JSON ({e.msg})", line=lineno) from None
            points.append(_parse_point(obj, lineno))
    if not points:
        raise DataFormatError(f"{path} contains no data points")
    return Dataset(points=points)


def point_to_json(pt: DataPoint) -> str:
    seq = pt.sequence
    obj = {
        "id": seq.id,
        "subject": seq.subject_id,
        "walk": seq.walk_index,
        "fps": seq.fps,
        "label": pt.label,
        "gestures": pt.gestures.to_dict(),
        "frames": [[float(v) for v in fr] for fr in seq.frames.reshape(-1, POSE_DIM)],
    }
    return json.dumps(obj, separators=(",", ":"))


def write_dataset(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pt in ds.points:
            fh.write(point_to_json(pt) + "\n")


# ---------------------------------------------------------------------------
# Similarity-transform normalization
# ---------------------------------------------------------------------------

def _orthonormal_frame(forward: np.ndarray, up_hint: np.ndarray) -> np.ndarray:
    """Rotation matrix whose rows map `forward` to +z and `up_hint` near +y."""
    z = forward / np.linalg.norm(forward)
    for cand in (up_hint, np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0])):
        y = cand - np.dot(cand, z) * z
        n = np.linalg.norm(y)
        if n > 1e-9:
            y = y / n
            break
    x = np.cross(y, z)
    return np.stack([x, y, z])


def normalizing_transform(seq: PoseSequence) -> tuple[np.ndarray, float, np.ndarray]:
    """Compute the (R, s, t) mapping p -> s * R @ (p - t) that canonicalizes `seq`.

    R aligns the root's first-to-last displacement with +z and the mean
    root-to-neck direction with +y; t is the first-pose centroid; s scales the
    longest axis-aligned bounding-box edge over all frames to 1.
    """
    frames = seq.frames
    spread = frames.reshape(-1, 3).max(axis=0) - frames.reshape(-1, 3).min(axis=0)
    if float(spread.max()) < 1e-12:
        raise DegenerateSequenceError(
            f"sequence {seq.id!r}: all joints coincident, cannot normalize"
        )
    disp = frames[-1, Joint.ROOT] - frames[0, Joint.ROOT]
    if np.linalg.norm(disp) < 1e-6:
        R = np.eye(3)
    else:
        up = (frames[:, Joint.NECK] - frames[:, Joint.ROOT]).mean(axis=0)
        R = _orthonormal_frame(disp, up)
    t = frames[0].mean(axis=0)
    rotated = (frames - t) @ R.T
    flat = rotated.reshape(-1, 3)
    edges = flat.max(axis=0) - flat.min(axis=0)
    s = 1.0 / float(edges.max())
    return R, s, t


def similarity_normalize(seq: PoseSequence) -> PoseSequence:
    """Apply one rigid-body+scale transform to every frame so the first-pose
    centroid sits at the origin and all frames fit in a unit-volume box."""
    R, s, t = normalizing_transform(seq)
    frames = s * ((seq.frames - t) @ R.T)
    return seq.with_frames(frames)


def umeyama_alignment(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    """Least-squares similarity (R, s, t) minimizing ||dst - (s R src + t)||^2.

    Closed-form point-set alignment; used to verify normalization round trips.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    n, m = src.shape
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    xs, xd = src - mu_s, dst - mu_d
    cov = xd.T @ xs / n
    U, d, Vt = np.linalg.svd(cov)
    S = np.eye(m)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[-1, -1] = -1.0
    R = U @ S @ Vt
    var_s = (xs ** 2).sum() / n
    s = float((d * np.diag(S)).sum() / var_s)
    t = mu_d - s * R @ mu_s
    return R, s, t


# ---------------------------------------------------------------------------
# Min-max scaling and fixed-length conditioning
# ---------------------------------------------------------------------------

def minmax_fit(train: Iterable[PoseSequence]) -> NormStats:
    """Per-channel min/max over every frame of every training sequence."""
    train = list(train)
    if not train:
        raise DataFormatError("minmax_fit requires a non-empty training set")
    flat = np.concatenate([s.frames.reshape(-1, POSE_DIM) for s in train], axis=0)
    return NormStats(mins=flat.min(axis=0), maxs=flat.max(axis=0))


def minmax_apply(seq: PoseSequence, stats: NormStats) -> PoseSequence:
    """Map each channel to [0, 1]; constant channels go to 0.5, out-of-range
    values (sequences outside the training range) are clamped."""
    flat = seq.frames.reshape(-1, POSE_DIM)
    span = stats.maxs - stats.mins
    safe = np.where(stats.constant, 1.0, span)
    out = (flat - stats.mins) / safe
    out = np.where(stats.constant, 0.5, out)
    out = np.clip(out, 0.0, 1.0)
    return seq.with_frames(out.reshape(-1, N_JOINTS, 3))


def condition_length(seq: PoseSequence, T: int) -> PoseSequence:
    """Force the frame count to exactly T: repeat the final frame to pad, or
    subsample uniformly (indices round(i*(tau-1)/(T-1))) to shrink."""
    if T < 2:
        raise DataFormatError(f"target length must be >= 2, got {T}")
    tau = seq.tau
    if tau == T:
        return seq
    if tau < T:
        pad = np.repeat(seq.frames[-1:], T - tau, axis=0)
        frames = np.concatenate([seq.frames, pad], axis=0)
    else:
        idx = np.rint(np.arange(T) * (tau - 1) / (T - 1)).astype(int)
        frames = seq.frames[idx]
    return seq.with_frames(frames)
