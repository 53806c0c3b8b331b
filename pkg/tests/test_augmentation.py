import logging

import numpy as np
import pytest

from conftest import make_dataset, random_sequence
from liarwalk.augmentation import (
    AugmentConfig,
    augment_dataset,
    phase_shift,
    reflect_vertical,
)
from liarwalk.errors import DataFormatError
from liarwalk.gait_features import FEATURE_NAMES, gait_feature_vector
from liarwalk.pose_data import Joint


# feature index permutation induced by an anatomical left/right swap
_LR_SWAPPED_NAMES = [
    name.replace("lhand", "@").replace("rhand", "lhand").replace("@", "rhand")
    .replace("lfoot", "@").replace("rfoot", "lfoot").replace("@", "rfoot")
    .replace("lshoulder", "@").replace("rshoulder", "lshoulder").replace("@", "rshoulder")
    for name in FEATURE_NAMES
]
LR_PERM = np.array([FEATURE_NAMES.index(n) for n in _LR_SWAPPED_NAMES])


class TestReflect:
    def test_double_reflection_is_identity(self, rng):
        seq = random_sequence(rng)
        back = reflect_vertical(reflect_vertical(seq))
        np.testing.assert_array_equal(back.frames, seq.frames)

    def test_swaps_sides_and_negates_x(self, rng):
        seq = random_sequence(rng)
        out = reflect_vertical(seq)
        np.testing.assert_array_equal(out.frames[:, Joint.LHAND, 0],
                                      -seq.frames[:, Joint.RHAND, 0])
        np.testing.assert_array_equal(out.frames[:, Joint.LHAND, 1:],
                                      seq.frames[:, Joint.RHAND, 1:])
        np.testing.assert_array_equal(out.frames[:, Joint.HEAD, 0],
                                      -seq.frames[:, Joint.HEAD, 0])

    def test_id_suffix(self, rng):
        assert reflect_vertical(random_sequence(rng, seq_id="a")).id == "a#refl"

    def test_gait_features_are_lr_permuted(self, rng):
        seq = random_sequence(rng, tau=30)
        f = gait_feature_vector(seq)
        f_refl = gait_feature_vector(reflect_vertical(seq))
        np.testing.assert_allclose(f_refl, f[LR_PERM], rtol=1e-9, atol=1e-12)


class TestPhaseShift:
    def test_rolls_frames(self, rng):
        seq = random_sequence(rng, tau=10)
        out = phase_shift(seq, 3)
        np.testing.assert_array_equal(out.frames[0], seq.frames[3])
        np.testing.assert_array_equal(out.frames[-1], seq.frames[2])
        assert out.id.endswith("#ps3")

    def test_zero_shift_is_identity(self, rng):
        seq = random_sequence(rng)
        np.testing.assert_array_equal(phase_shift(seq, 0).frames, seq.frames)

    @pytest.mark.parametrize("k", [-1, 10, 99])
    def test_out_of_range(self, rng, k):
        with pytest.raises(DataFormatError):
            phase_shift(random_sequence(rng, tau=10), k)


class TestAugmentDataset:
    def test_cross_product_count(self, small_dataset):
        out = augment_dataset(small_dataset, AugmentConfig(reflect=True, shifts=[5, 9]))
        assert len(out) == len(small_dataset) * 2 * 3

    def test_labels_and_gestures_copied(self, small_dataset):
        out = augment_dataset(small_dataset, AugmentConfig(reflect=True))
        for k, pt in enumerate(small_dataset.points):
            orig, refl = out.points[2 * k], out.points[2 * k + 1]
            assert orig.label == refl.label == pt.label
            assert refl.gestures == pt.gestures
            assert refl.sequence.subject_id == pt.sequence.subject_id

    def test_noop_config_preserves_dataset(self, small_dataset):
        out = augment_dataset(small_dataset, AugmentConfig())
        assert [p.sequence.id for p in out.points] == \
            [p.sequence.id for p in small_dataset.points]

    def test_out_of_range_shift_skipped_with_warning(self, small_dataset, caplog):
        with caplog.at_level(logging.WARNING):
            out = augment_dataset(small_dataset, AugmentConfig(shifts=[5, 500]))
        assert len(out) == len(small_dataset) * 2
        assert any("skipping phase shift" in r.message for r in caplog.records)

    def test_variant_ids_unique(self, small_dataset):
        out = augment_dataset(small_dataset, AugmentConfig(reflect=True, shifts=[1]))
        ids = [p.sequence.id for p in out.points]
        assert len(set(ids)) == len(ids)
