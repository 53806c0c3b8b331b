"""Seeded parametric walking-sequence generator. Deliberately simple kinematics
(oscillating limbs, exact ground contacts) so two-class datasets with known,
controllable separability can stand in for the unavailable study data."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataFormatError
from .gesture_features import GESTURE_NAMES, GestureAnnotation
from .pose_data import DataPoint, Dataset, Joint, PoseSequence

_MASK64 = (1 << 64) - 1


def mix_seed(master: int, index: int) -> int:
    """Splitmix64-style derivation of a per-point seed from (master, index)."""
    z = (master + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass
class WalkParams:
    period_frames: int = 30
    fps: float = 30.0
    frames: int = 120
    forward_speed: float = 0.9
    arm_swing_amplitude: float = 0.15
    hand_height_offset: float = 0.0
    head_yaw_amplitude: float = 0.08
    step_height: float = 0.06
    noise_std: float = 0.0
    class_label: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.period_frames < 4:
            raise DataFormatError("period_frames must be >= 4")
        if self.frames < self.period_frames:
            raise DataFormatError("frames must be >= period_frames")
        for name in ("arm_swing_amplitude", "head_yaw_amplitude", "step_height", "noise_std"):
            if getattr(self, name) < 0:
                raise DataFormatError(f"{name} must be >= 0")
        if self.fps <= 0:
            raise DataFormatError("fps must be positive")


def _foot_forward_offset(phase: np.ndarray, half_stride: float) -> np.ndarray:
    """Triangle wave: forward during the swing half-cycle, linearly backward
    during stance so the planted foot is exactly stationary in world space."""
    ph = np.mod(phase, 2.0 * np.pi)
    swing = ph < np.pi
    out = np.where(
        swing,
        -half_stride + 2.0 * half_stride * ph / np.pi,
        half_stride - 2.0 * half_stride * (ph - np.pi) / np.pi,
    )
    return out


def generate_walk(params: WalkParams, seq_id: str = "synthetic",
                  subject_id: str = "s0", walk_index: int = 1) -> PoseSequence:
    """Build one kinematic walk. With noise_std = 0 the sequence is exactly
    periodic: frame k+p equals frame k translated forward by p*speed/fps."""
    p = params.period_frames
    tau = params.frames
    v = params.forward_speed
    k = np.arange(tau)
    phase = 2.0 * np.pi * k / p  # left-leg phase; right leg is antiphase
    root_z = v * k / params.fps

    F = np.zeros((tau, 16, 3))

    def set_joint(j, x, y, z):
        F[:, j, 0] = x
        F[:, j, 1] = y
        F[:, j, 2] = z

    head_x = params.head_yaw_amplitude * np.sin(phase)
    set_joint(Joint.ROOT, 0.0, 0.90, root_z)
    set_joint(Joint.SPINE, 0.0, 1.15, root_z)
    set_joint(Joint.NECK, 0.0, 1.40, root_z)
    set_joint(Joint.HEAD, head_x, 1.55, root_z)
    set_joint(Joint.LSHOULDER, 0.20, 1.35, root_z)
    set_joint(Joint.RSHOULDER, -0.20, 1.35, root_z)

    # arms swing in antiphase with the same-side legs
    hand_y = 0.85 + params.hand_height_offset
    lhand_z = root_z - params.arm_swing_amplitude * np.sin(phase)
    rhand_z = root_z + params.arm_swing_amplitude * np.sin(phase)
    set_joint(Joint.LHAND, 0.25, hand_y, lhand_z)
    set_joint(Joint.RHAND, -0.25, hand_y, rhand_z)
    for shoulder, hand, elbow in (
        (Joint.LSHOULDER, Joint.LHAND, Joint.LELBOW),
        (Joint.RSHOULDER, Joint.RHAND, Joint.RELBOW),
    ):
        F[:, elbow] = 0.5 * (F[:, shoulder] + F[:, hand])
        F[:, elbow, 0] += 0.02 * np.sign(F[0, shoulder, 0])

    # stance half-cycle keeps each foot planted; L = speed * stance duration
    half_stride = 0.5 * v * (p / 2.0) / params.fps
    for hip, knee, foot, side, leg_phase in (
        (Joint.LHIP, Joint.LKNEE, Joint.LFOOT, 0.10, phase),
        (Joint.RHIP, Joint.RKNEE, Joint.RFOOT, -0.10, phase + np.pi),
    ):
        set_joint(hip, side, 0.85, root_z)
        foot_y = np.maximum(0.0, params.step_height * np.sin(leg_phase))
        foot_z = root_z + _foot_forward_offset(leg_phase, half_stride)
        set_joint(foot, side, foot_y, foot_z)
        F[:, knee] = 0.5 * (F[:, hip] + F[:, foot])
        F[:, knee, 2] += 0.03

    if params.noise_std > 0:
        rng = np.random.default_rng(params.seed)
        F = F + rng.normal(0.0, params.noise_std, size=F.shape)

    return PoseSequence(
        id=seq_id, subject_id=subject_id, walk_index=walk_index,
        fps=params.fps, frames=F,
    )


# ---------------------------------------------------------------------------
# Two-class dataset generation
# ---------------------------------------------------------------------------

#: Gesture presence probabilities; hands_in_pockets is a distribution over {0,1,2}.
DEFAULT_NATURAL_GESTURES = {
    "hands_in_pockets": (0.70, 0.20, 0.10),
    "looking_around": 0.35,
    "touching_face": 0.20,
    "touching_shirt": 0.25,
    "touching_hair": 0.10,
    "hands_folded": 0.15,
    "looking_at_phone": 0.25,
}
DEFAULT_DECEPTIVE_GESTURES = {
    "hands_in_pockets": (0.35, 0.35, 0.30),
    "looking_around": 0.65,
    "touching_face": 0.30,
    "touching_shirt": 0.15,
    "touching_hair": 0.10,
    "hands_folded": 0.15,
    "looking_at_phone": 0.40,
}


@dataclass
class ClassConfig:
    walk: WalkParams
    gesture_probs: dict = field(default_factory=dict)

    def __post_init__(self):
        probs = dict(self.gesture_probs)
        hip = probs.get("hands_in_pockets", (1.0, 0.0, 0.0))
        if len(hip) != 3 or abs(sum(hip) - 1.0) > 1e-9 or min(hip) < 0:
            raise DataFormatError("hands_in_pockets needs a 3-way probability vector")
        for name in GESTURE_NAMES[1:]:
            v = probs.get(name, 0.0)
            if not 0.0 <= v <= 1.0:
                raise DataFormatError(f"gesture probability {name} out of [0, 1]: {v}")
        self.gesture_probs = probs


def separable_class_configs() -> tuple[ClassConfig, ClassConfig]:
    """Documented separable pair: arm-swing and head-yaw cues plus
    class-dependent gesture probabilities."""
    natural = ClassConfig(
        walk=WalkParams(arm_swing_amplitude=0.25, head_yaw_amplitude=0.04,
                        noise_std=0.01, class_label=0),
        gesture_probs=DEFAULT_NATURAL_GESTURES,
    )
    deceptive = ClassConfig(
        walk=WalkParams(arm_swing_amplitude=0.05, head_yaw_amplitude=0.12,
                        noise_std=0.01, class_label=1),
        gesture_probs=DEFAULT_DECEPTIVE_GESTURES,
    )
    return natural, deceptive


def null_class_configs() -> tuple[ClassConfig, ClassConfig]:
    """Indistinguishable classes: identical walk templates and gesture odds."""
    base = WalkParams(noise_std=0.01)
    return (
        ClassConfig(walk=replace(base, class_label=0),
                    gesture_probs=DEFAULT_NATURAL_GESTURES),
        ClassConfig(walk=replace(base, class_label=1),
                    gesture_probs=DEFAULT_NATURAL_GESTURES),
    )


def _sample_gestures(probs: dict, rng: np.random.Generator) -> GestureAnnotation:
    values = {"hands_in_pockets": int(rng.choice(3, p=probs["hands_in_pockets"]))}
    for name in GESTURE_NAMES[1:]:
        values[name] = int(rng.random() < probs.get(name, 0.0))
    return GestureAnnotation(**values)


def _jitter(walk: WalkParams, rng: np.random.Generator, seed: int) -> WalkParams:
    return replace(
        walk,
        forward_speed=walk.forward_speed * rng.uniform(0.9, 1.1),
        arm_swing_amplitude=walk.arm_swing_amplitude * rng.uniform(0.85, 1.15),
        head_yaw_amplitude=walk.head_yaw_amplitude * rng.uniform(0.85, 1.15),
        step_height=walk.step_height * rng.uniform(0.9, 1.1),
        hand_height_offset=walk.hand_height_offset + rng.uniform(-0.01, 0.01),
        seed=seed,
    )


def generate_dataset(
    class_configs: tuple[ClassConfig, ClassConfig],
    count_per_class: int,
    master_seed: int,
    walks_per_subject: int = 4,
) -> Dataset:
    """Balanced labeled dataset with per-point seeds derived from the master
    seed, jittered walk parameters, and gesture annotations sampled from each
    class's probabilities."""
    if count_per_class < 1:
        raise DataFormatError("count_per_class must be >= 1")
    points = []
    index = 0
    for cls_cfg in class_configs:
        label = cls_cfg.walk.class_label
        for i in range(count_per_class):
            seed = mix_seed(master_seed, index)
            rng = np.random.default_rng(seed)
            params = _jitter(cls_cfg.walk, rng, seed)
            subject = f"c{label}s{i // walks_per_subject:04d}"
            seq = generate_walk(
                params,
                seq_id=f"syn{label}_{i:05d}",
                subject_id=subject,
                walk_index=i % walks_per_subject + 1,
            )
            gestures = _sample_gestures(cls_cfg.gesture_probs, rng)
            points.append(DataPoint(sequence=seq, gestures=gestures, label=label))
            index += 1
    return Dataset(points=points)
