from __future__ import annotations

import numpy as np
import pytest

from liarwalk.gesture_features import GestureAnnotation
from liarwalk.pose_data import DataPoint, Dataset, PoseSequence
from liarwalk.synthetic import WalkParams, generate_walk


def random_sequence(rng: np.random.Generator, tau: int = 40, fps: float = 30.0,
                    seq_id: str = "rand", subject: str = "s0") -> PoseSequence:
    """A smooth-ish random walk per joint so derivatives stay finite but generic."""
    steps = rng.normal(scale=0.05, size=(tau, 16, 3))
    frames = rng.normal(scale=0.5, size=(1, 16, 3)) + np.cumsum(steps, axis=0)
    frames[:, 0, 2] += np.linspace(0.0, 1.0, tau)  # give the root a net displacement
    return PoseSequence(id=seq_id, subject_id=subject, walk_index=1, fps=fps, frames=frames)


def random_annotation(rng: np.random.Generator) -> GestureAnnotation:
    return GestureAnnotation(
        hands_in_pockets=int(rng.integers(0, 3)),
        **{name: int(rng.integers(0, 2)) for name in (
            "looking_around", "touching_face", "touching_shirt",
            "touching_hair", "hands_folded", "looking_at_phone",
        )},
    )


def make_dataset(n: int = 12, seed: int = 0, tau: int = 24, subjects: int = 4) -> Dataset:
    rng = np.random.default_rng(seed)
    points = []
    for i in range(n):
        seq = random_sequence(rng, tau=tau, seq_id=f"w{i:03d}", subject=f"s{i % subjects}")
        points.append(DataPoint(
            sequence=seq, gestures=random_annotation(rng), label=i % 2,
        ))
    return Dataset(points=points)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset():
    return make_dataset()


@pytest.fixture
def clean_walk():
    """Noise-free periodic synthetic walk (4 full cycles)."""
    return generate_walk(WalkParams(period_frames=30, frames=120, noise_std=0.0, seed=0))
