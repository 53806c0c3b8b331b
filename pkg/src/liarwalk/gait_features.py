"""The 29-dim handcrafted gait feature vector: 13 posture features (bounding-box
volume, joint angles, joint distances, triangle areas, stride length) and 16
movement features (speed/acceleration/jerk magnitudes plus gait cycle time)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .pose_data import Joint, PoseSequence

#: Joints whose trajectories contribute speed/acceleration/jerk features.
MOVEMENT_JOINTS = (Joint.LHAND, Joint.RHAND, Joint.HEAD, Joint.LFOOT, Joint.RFOOT)

FEATURE_NAMES = (
    "volume",
    "angle_neck_by_shoulders",
    "angle_rshoulder_by_neck_lshoulder",
    "angle_lshoulder_by_neck_rshoulder",
    "angle_neck_by_vertical_back",
    "angle_neck_by_head_back",
    "dist_rhand_root",
    "dist_lhand_root",
    "dist_rfoot_root",
    "dist_lfoot_root",
    "stride_length",
    "area_hands_neck",
    "area_feet_root",
    "lhand_speed", "lhand_accel", "lhand_jerk",
    "rhand_speed", "rhand_accel", "rhand_jerk",
    "head_speed", "head_accel", "head_jerk",
    "lfoot_speed", "lfoot_accel", "lfoot_jerk",
    "rfoot_speed", "rfoot_accel", "rfoot_jerk",
    "gait_cycle_time",
)

N_FEATURES = len(FEATURE_NAMES)  # 29


@dataclass
class PostureFrameFeatures:
    volume: float
    angles: np.ndarray  # 5 radians, in FEATURE_NAMES order
    distances: np.ndarray  # 4
    areas: np.ndarray  # 2
    degenerate_angles: np.ndarray  # 5 bools; True where a zero-length ray forced 0


# (vertex, ray end a, ray end b); None marks the vertical ray anchored at the vertex.
_ANGLE_DEFS = (
    (Joint.NECK, Joint.LSHOULDER, Joint.RSHOULDER),
    (Joint.RSHOULDER, Joint.NECK, Joint.LSHOULDER),
    (Joint.LSHOULDER, Joint.NECK, Joint.RSHOULDER),
    (Joint.NECK, None, Joint.SPINE),
    (Joint.NECK, Joint.HEAD, Joint.SPINE),
)

_DISTANCE_DEFS = (
    (Joint.RHAND, Joint.ROOT),
    (Joint.LHAND, Joint.ROOT),
    (Joint.RFOOT, Joint.ROOT),
    (Joint.LFOOT, Joint.ROOT),
)

# Triangle (a, b, c): area = 0.5 * ||(a-c) x (b-c)||
_AREA_DEFS = (
    (Joint.LHAND, Joint.RHAND, Joint.NECK),
    (Joint.LFOOT, Joint.RFOOT, Joint.ROOT),
)

_UP = np.array([0.0, 1.0, 0.0])


def _angles_batch(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All 5 posture angles for every frame: (tau, 5) radians + degeneracy mask."""
    tau = frames.shape[0]
    angles = np.zeros((tau, 5))
    degen = np.zeros((tau, 5), dtype=bool)
    for i, (vertex, a, b) in enumerate(_ANGLE_DEFS):
        u = _UP[None, :].repeat(tau, axis=0) if a is None else frames[:, a] - frames[:, vertex]
        w = frames[:, b] - frames[:, vertex]
        nu = np.linalg.norm(u, axis=1)
        nw = np.linalg.norm(w, axis=1)
        bad = (nu == 0.0) | (nw == 0.0)
        denom = np.where(bad, 1.0, nu * nw)
        cosv = np.clip((u * w).sum(axis=1) / denom, -1.0, 1.0)
        angles[:, i] = np.where(bad, 0.0, np.arccos(cosv))
        degen[:, i] = bad
    return angles, degen


def _posture_matrix(frames: np.ndarray) -> np.ndarray:
    """(tau, 12) per-frame posture features: volume, 5 angles, 4 distances, 2 areas."""
    ext = frames.max(axis=1) - frames.min(axis=1)  # (tau, 3)
    volume = ext.prod(axis=1)
    angles, _ = _angles_batch(frames)
    dists = np.stack(
        [np.linalg.norm(frames[:, a] - frames[:, b], axis=1) for a, b in _DISTANCE_DEFS],
        axis=1,
    )
    areas = np.stack(
        [
            0.5 * np.linalg.norm(
                np.cross(frames[:, a] - frames[:, c], frames[:, b] - frames[:, c]), axis=1
            )
            for a, b, c in _AREA_DEFS
        ],
        axis=1,
    )
    return np.concatenate([volume[:, None], angles, dists, areas], axis=1)


def posture_frame(pose: np.ndarray) -> PostureFrameFeatures:
    """Posture features of a single 16x3 frame."""
    pose = np.asarray(pose, dtype=np.float64)
    if pose.shape != (16, 3):
        raise DataFormatError(f"expected a (16, 3) frame, got {pose.shape}")
    frames = pose[None]
    angles, degen = _angles_batch(frames)
    m = _posture_matrix(frames)[0]
    return PostureFrameFeatures(
        volume=float(m[0]),
        angles=angles[0],
        distances=m[6:10],
        areas=m[10:12],
        degenerate_angles=degen[0],
    )


def stride_length(seq: PoseSequence) -> float:
    """Maximum left-foot-to-right-foot distance over the gait."""
    d = np.linalg.norm(seq.frames[:, Joint.LFOOT] - seq.frames[:, Joint.RFOOT], axis=1)
    return float(d.max())


def _first_derivative(x: np.ndarray, dt: float) -> np.ndarray:
    """Central differences with one-sided differences at the boundaries."""
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[-1] = (x[-1] - x[-2]) / dt
    return d


def finite_derivative_magnitudes(
    positions: np.ndarray, fps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame norms of the first, second and third finite derivatives of a
    tau x 3 trajectory sampled at `fps`."""
    positions = np.asarray(positions, dtype=np.float64)
    tau = positions.shape[0]
    for order, name, need in ((1, "speed", 2), (2, "acceleration", 3), (3, "jerk", 4)):
        if tau < need:
            raise DataFormatError(
                f"{name} (order {order}) needs at least {need} frames, got {tau}"
            )
    if fps <= 0:
        raise DataFormatError(f"fps must be positive, got {fps}")
    dt = 1.0 / fps
    d1 = _first_derivative(positions, dt)
    d2 = _first_derivative(d1, dt)
    d3 = _first_derivative(d2, dt)
    return (
        np.linalg.norm(d1, axis=1),
        np.linalg.norm(d2, axis=1),
        np.linalg.norm(d3, axis=1),
    )


def _plateau_minima(y: np.ndarray) -> list[int]:
    """Indices of strict local minima, with constant runs collapsed to their
    middle frame when both flanking values are strictly higher."""
    out = []
    n = len(y)
    start = 0
    while start < n:
        end = start
        while end + 1 < n and y[end + 1] == y[start]:
            end += 1
        if start > 0 and end < n - 1 and y[start - 1] > y[start] and y[end + 1] > y[start]:
            out.append(start + (end - start) // 2)
        start = end + 1
    return out


def detect_foot_strikes(
    seq: PoseSequence,
    fps: float | None = None,
    theta_v: float = 0.05,
    theta_gap: int | None = None,
) -> tuple[list[int], list[int]]:
    """Foot-strike frame indices per foot: local minima of the foot's height
    gated by low foot speed; minima closer than theta_gap keep the lower one."""
    if seq.tau < 3:
        raise DataFormatError("foot-strike detection needs at least 3 frames")
    fps = seq.fps if fps is None else fps
    if theta_gap is None:
        theta_gap = math.ceil(0.25 * fps)
    result = []
    for foot in (Joint.LFOOT, Joint.RFOOT):
        y = seq.frames[:, foot, 1]
        speed = np.linalg.norm(_first_derivative(seq.frames[:, foot], 1.0 / fps), axis=1)
        candidates = [k for k in _plateau_minima(y) if speed[k] < theta_v]
        merged: list[int] = []
        for k in candidates:
            if merged and k - merged[-1] < theta_gap:
                if y[k] < y[merged[-1]]:
                    merged[-1] = k
            else:
                merged.append(k)
        result.append(merged)
    return result[0], result[1]


def gait_cycle_time(seq: PoseSequence, fps: float | None = None, **detector_kwargs) -> float:
    """Mean time (seconds) between consecutive same-foot strikes, pooled over
    both feet; whole-sequence duration when no foot has two strikes."""
    fps = seq.fps if fps is None else fps
    if seq.tau >= 3:
        left, right = detect_foot_strikes(seq, fps, **detector_kwargs)
    else:
        left, right = [], []
    intervals = []
    for strikes in (left, right):
        intervals.extend(b - a for a, b in zip(strikes, strikes[1:]))
    if not intervals:
        return seq.tau / fps
    return float(np.mean(intervals)) / fps


def gait_feature_vector(seq: PoseSequence, fps: float | None = None) -> np.ndarray:
    """The 29-dim gait feature vector in FEATURE_NAMES order. Per-frame posture
    and movement magnitudes are aggregated by their arithmetic mean."""
    if seq.tau < 4:
        raise DataFormatError("gait features need at least 4 frames")
    fps = seq.fps if fps is None else fps
    posture = _posture_matrix(seq.frames).mean(axis=0)  # 12 values
    movement = np.empty(15)
    for j, joint in enumerate(MOVEMENT_JOINTS):
        speed, accel, jerk = finite_derivative_magnitudes(seq.frames[:, joint], fps)
        movement[3 * j] = speed.mean()
        movement[3 * j + 1] = accel.mean()
        movement[3 * j + 2] = jerk.mean()
    out = np.concatenate(
        [
            posture[:10],  # volume, 5 angles, 4 distances
            [stride_length(seq)],
            posture[10:12],  # 2 areas
            movement,
            [gait_cycle_time(seq, fps)],
        ]
    )
    assert out.shape == (N_FEATURES,)
    return out
