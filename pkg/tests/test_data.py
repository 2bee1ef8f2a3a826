import numpy as np
import pytest
from scipy import ndimage

from gtseg.data.augment import (
    IDENTITY,
    AugmentPolicy,
    augment,
    center_crop_resize,
    hflip,
    rotate90,
    rotate_small,
    vflip,
)
from gtseg.data.dataset import load_dataset, save_dataset
from gtseg.data.folds import FoldSplit, kfold_split, load_folds, save_folds
from gtseg.data.patches import patch_sample
from gtseg.data.pgm import PGMFormatError, load_image, load_mask, load_pgm, save_mask, save_pgm
from gtseg.data.sample import Sample
from gtseg.data.synth import FOREGROUND_RANGE, synth_generate


@pytest.fixture(scope="module")
def samples():
    return synth_generate(11, 6, 48)


# -----------------------------
# Sample
# -----------------------------
def test_sample_coerces_types():
    sample = Sample(image=np.zeros((4, 4), dtype=np.float32), mask=np.ones((4, 4), dtype=bool), id="a")
    assert sample.image.dtype == np.float64
    assert sample.mask.dtype == np.uint8
    assert sample.foreground_fraction == 1.0


@pytest.mark.parametrize(
    "image, mask",
    [
        (np.zeros((4, 4)), np.zeros((4, 5))),
        (np.zeros((4, 4)), np.full((4, 4), 2)),
        (np.full((4, 4), 1.5), np.zeros((4, 4))),
        (np.zeros((2, 4, 4)), np.zeros((2, 4, 4))),
    ],
)
def test_sample_rejects_invalid_pairs(image, mask):
    with pytest.raises(ValueError):
        Sample(image=image, mask=mask, id="bad")


# -----------------------------
# Synthetic generator
# -----------------------------
def test_synth_is_deterministic_per_index(samples):
    again = synth_generate(11, 6, 48)
    prefix = synth_generate(11, 2, 48)
    for a, b in zip(samples, again):
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.mask, b.mask)
    for a, b in zip(samples, prefix):
        np.testing.assert_array_equal(a.image, b.image)
    other = synth_generate(12, 1, 48)[0]
    assert not np.array_equal(other.image, samples[0].image)


def test_synth_samples_are_valid(samples):
    assert [s.id for s in samples] == [f"s{i:04d}" for i in range(6)]
    for sample in samples:
        assert sample.shape == (48, 48)
        assert FOREGROUND_RANGE[0] <= sample.foreground_fraction <= FOREGROUND_RANGE[1]
        assert 0.0 <= sample.image.min() and sample.image.max() <= 1.0
        labels, count = ndimage.label(sample.mask, structure=np.ones((3, 3)))
        sizes = np.bincount(labels.ravel())[1:]
        assert 1 <= count <= 2 and sizes.max() >= 0.8 * sizes.sum()


def test_blur_softens_the_boundary():
    sharp = synth_generate(5, 4, 48, blur=False)
    soft = synth_generate(5, 4, 48, blur=True)
    for s, b in zip(sharp, soft):
        np.testing.assert_array_equal(s.mask, b.mask)
        body = s.mask.astype(bool)
        inner = body & ~ndimage.binary_erosion(body)
        outer = ndimage.binary_dilation(body) & ~body
        sharp_step = s.image[inner].mean() - s.image[outer].mean()
        soft_step = b.image[inner].mean() - b.image[outer].mean()
        assert 0 < soft_step < 0.8 * sharp_step


def test_synth_rejects_bad_arguments():
    with pytest.raises(ValueError):
        synth_generate(0, 0, 32)
    with pytest.raises(ValueError):
        synth_generate(0, 1, 8)


# -----------------------------
# Augmentation
# -----------------------------
def test_identity_policy_returns_the_input(samples):
    sample = samples[0]
    out = augment(sample, seed=3, policy=IDENTITY)
    np.testing.assert_array_equal(out.image, sample.image)
    np.testing.assert_array_equal(out.mask, sample.mask)
    assert out.id == sample.id


def test_flips_are_involutions(samples):
    sample = samples[1]
    for flip in (hflip, vflip):
        image, mask = flip(*flip(sample.image, sample.mask))
        np.testing.assert_array_equal(image, sample.image)
        np.testing.assert_array_equal(mask, sample.mask)


def test_four_quarter_turns_are_the_identity(samples):
    sample = samples[2]
    image, mask = sample.image, sample.mask
    for _ in range(4):
        image, mask = rotate90(image, mask)
    np.testing.assert_array_equal(image, sample.image)
    np.testing.assert_array_equal(mask, sample.mask)
    quarter, _ = rotate90(sample.image, sample.mask, 1)
    np.testing.assert_array_equal(quarter, np.rot90(sample.image))


def test_full_crop_is_the_identity(samples):
    sample = samples[3]
    image, mask = center_crop_resize(sample.image, sample.mask, 1.0)
    np.testing.assert_allclose(image, sample.image, atol=1e-12)
    np.testing.assert_array_equal(mask, sample.mask)


def test_small_rotation_keeps_mask_binary(samples):
    image, mask = rotate_small(samples[0].image, samples[0].mask, 12.0)
    assert set(np.unique(mask)) <= {0, 1}
    assert image.shape == samples[0].shape


def test_augment_is_seeded_and_keeps_invariants(samples):
    always = AugmentPolicy(1.0, (0.8, 1.0), 1.0, 1.0, 15.0, 1.0, 1.0)
    for seed in range(5):
        first = augment(samples[4], seed, always)
        second = augment(samples[4], seed, always)
        np.testing.assert_array_equal(first.image, second.image)
        assert first.shape == samples[4].shape
        assert set(np.unique(first.mask)) <= {0, 1}
        assert 0.0 <= first.image.min() and first.image.max() <= 1.0


def test_quarter_turns_are_skipped_on_rectangles():
    sample = Sample(image=np.linspace(0, 1, 32 * 48).reshape(32, 48), mask=np.zeros((32, 48)), id="r")
    policy = AugmentPolicy(0.0, (0.8, 1.0), 1.0, 0.0, 15.0, 0.0, 0.0)
    out = augment(sample, 0, policy)
    np.testing.assert_array_equal(out.image, sample.image)


def test_policy_validates_probabilities():
    with pytest.raises(ValueError):
        AugmentPolicy(crop_prob=1.5)
    with pytest.raises(ValueError):
        AugmentPolicy(crop_range=(0.0, 1.0))


# -----------------------------
# Patches
# -----------------------------
def test_patches_are_aligned_windows(samples):
    sample = samples[5]
    patches = patch_sample(sample, 16, 5, seed=4)
    assert [p.id for p in patches] == [f"{sample.id}_p{j}" for j in range(5)]
    for patch in patches:
        assert patch.shape == (16, 16)
        hits = [
            (r, c)
            for r in range(48 - 15)
            for c in range(48 - 15)
            if np.array_equal(sample.image[r:r + 16, c:c + 16], patch.image)
        ]
        assert hits
        r, c = hits[0]
        np.testing.assert_array_equal(sample.mask[r:r + 16, c:c + 16], patch.mask)


def test_patch_positions_cover_the_valid_range():
    size, patch = 128, 120
    index = np.arange(size * size, dtype=np.float64).reshape(size, size)
    # each pixel value encodes its own position
    grid = Sample(image=index / index.max(), mask=np.zeros((size, size), dtype=np.uint8), id="grid")
    seen = set()
    for seed in range(10):
        for p in patch_sample(grid, patch, 100, seed=seed):
            seen.add(divmod(int(round(p.image[0, 0] * index.max())), size))
    assert all(r <= size - patch and c <= size - patch for r, c in seen)
    assert len(seen) >= 0.99 * (size - patch + 1) ** 2


def test_patches_reject_bad_arguments(samples):
    with pytest.raises(ValueError):
        patch_sample(samples[0], 64, 1, seed=0)
    with pytest.raises(ValueError):
        patch_sample(samples[0], 16, 0, seed=0)


# -----------------------------
# Folds
# -----------------------------
def test_kfold_split_sizes_and_cover():
    ids = [f"s{i:04d}" for i in range(248)]
    split = kfold_split(ids, 3, seed=0)
    assert split.sizes() == [83, 83, 82]
    assert sorted(i for f in range(3) for i in split.fold_ids(f)) == ids
    assert set(split.train_ids(0)).isdisjoint(split.fold_ids(0))
    assert kfold_split(ids, 3, seed=0) == split
    assert kfold_split(ids, 3, seed=1) != split


def test_kfold_split_rejects_bad_input():
    with pytest.raises(ValueError):
        kfold_split(["a", "b"], 1, seed=0)
    with pytest.raises(ValueError):
        kfold_split(["a", "a", "b"], 2, seed=0)
    with pytest.raises(ValueError):
        kfold_split(["a", "b"], 3, seed=0)


def test_folds_file_round_trip(tmp_path):
    split = kfold_split([f"id{i}" for i in range(10)], 3, seed=2)
    save_folds(tmp_path / "folds.txt", split)
    assert load_folds(tmp_path / "folds.txt") == split
    (tmp_path / "bad.txt").write_text("a 0\nb\n")
    with pytest.raises(ValueError):
        load_folds(tmp_path / "bad.txt")


def test_fold_split_rejects_out_of_range_folds():
    with pytest.raises(ValueError):
        FoldSplit(fold_count=2, assignments={"a": 2})


# -----------------------------
# PGM
# -----------------------------
def test_pgm_round_trip(tmp_path):
    data = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    save_pgm(tmp_path / "a.pgm", data)
    loaded = load_pgm(tmp_path / "a.pgm")
    assert loaded.dtype == np.uint8
    np.testing.assert_array_equal(loaded, data)
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n4 3\n255\n")


def test_pgm_header_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n3 2\n# max\n255\n" + bytes([0, 64, 128, 192, 255, 1]))
    np.testing.assert_array_equal(load_pgm(path), [[0, 64, 128], [192, 255, 1]])
    np.testing.assert_array_equal(load_mask(path), [[0, 0, 1], [1, 1, 0]])
    np.testing.assert_allclose(load_image(path)[1, 1], 1.0)


@pytest.mark.parametrize(
    "payload",
    [
        b"P5\n2 2\n65535\n" + bytes(8),
        b"P2\n2 2\n255\n0 0 0 0",
        b"P5\n2 2\n255\n" + bytes(3),
        b"P5\n2",
    ],
)
def test_pgm_rejects_unsupported_files(tmp_path, payload):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(PGMFormatError):
        load_pgm(path)


def test_float_images_are_quantized(tmp_path):
    save_pgm(tmp_path / "f.pgm", np.array([[0.0, 0.5, 1.0]]))
    np.testing.assert_array_equal(load_pgm(tmp_path / "f.pgm"), [[0, 128, 255]])
    with pytest.raises(ValueError):
        save_pgm(tmp_path / "g.pgm", np.array([[1.5]]))
    with pytest.raises(ValueError):
        save_mask(tmp_path / "m.pgm", np.array([[0, 2]]))


# -----------------------------
# Dataset directories
# -----------------------------
def test_dataset_round_trip(tmp_path, samples):
    split = kfold_split([s.id for s in samples], 3, seed=0)
    save_dataset(tmp_path, samples[::-1], split)
    loaded, loaded_split = load_dataset(tmp_path)
    assert [s.id for s in loaded] == sorted(s.id for s in samples)
    assert loaded_split == split
    for original, restored in zip(samples, loaded):
        np.testing.assert_array_equal(original.mask, restored.mask)
        assert np.max(np.abs(original.image - restored.image)) <= 0.5 / 255 + 1e-12


def test_dataset_without_folds_and_unpaired(tmp_path, samples):
    save_dataset(tmp_path, samples[:2])
    _, split = load_dataset(tmp_path)
    assert split is None
    (tmp_path / "masks" / f"{samples[0].id}.pgm").unlink()
    with pytest.raises(ValueError):
        load_dataset(tmp_path)
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing")
