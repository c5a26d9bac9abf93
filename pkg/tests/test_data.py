import struct

import numpy as np
import pytest

from distadv.data import (
    Dataset,
    IdxCountMismatchError,
    IdxEmptyError,
    IdxMagicError,
    IdxTruncatedError,
    augmented_digits,
    load_idx_pair,
    synthetic_gaussians,
)
from distadv.model import predict, random_classifier


def write_idx_images(path, images_u8):
    n, rows, cols = images_u8.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        fh.write(images_u8.astype(np.uint8).tobytes())


def write_idx_labels(path, labels_u8):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels_u8)))
        fh.write(bytes(labels_u8))


@pytest.fixture
def idx_pair(tmp_path):
    images = np.zeros((2, 3, 3), dtype=np.uint8)
    images[0, 0, 0] = 255
    images[0, 2, 2] = 128
    images[1, 1, 1] = 51
    img_path = tmp_path / "imgs.idx"
    lbl_path = tmp_path / "lbls.idx"
    write_idx_images(img_path, images)
    write_idx_labels(lbl_path, [7, 2])
    return img_path, lbl_path


class TestIdxLoader:
    def test_known_bytes(self, idx_pair):
        ds = load_idx_pair(*idx_pair)
        assert ds.images.shape == (2, 9)
        assert ds.images[0, 0] == 1.0  # byte 255
        assert ds.images[0, 8] == pytest.approx(128 / 255)
        assert ds.images[1, 4] == pytest.approx(51 / 255)
        assert ds.images[1, 0] == 0.0  # byte 0
        np.testing.assert_array_equal(ds.labels, [7, 2])

    def test_wrong_magic_type(self, idx_pair, tmp_path):
        img_path, _ = idx_pair
        # an images file passed where labels are expected: image magic seen
        with pytest.raises(IdxMagicError):
            load_idx_pair(img_path, img_path)

    def test_every_mutated_magic_rejected(self, idx_pair, tmp_path):
        img_path, lbl_path = idx_pair
        original = img_path.read_bytes()
        for byte in range(4):
            for flip in (0x01, 0x80, 0xFF):
                blob = bytearray(original)
                blob[byte] ^= flip
                bad = tmp_path / "bad.idx"
                bad.write_bytes(bytes(blob))
                with pytest.raises(IdxMagicError):
                    load_idx_pair(bad, lbl_path)

    def test_zero_images(self, idx_pair, tmp_path):
        _, lbl_path = idx_pair
        empty = tmp_path / "empty.idx"
        write_idx_images(empty, np.zeros((0, 3, 3), dtype=np.uint8))
        with pytest.raises(IdxEmptyError):
            load_idx_pair(empty, lbl_path)

    def test_truncated_payload(self, idx_pair, tmp_path):
        img_path, lbl_path = idx_pair
        cut = tmp_path / "cut.idx"
        cut.write_bytes(img_path.read_bytes()[:-4])
        with pytest.raises(IdxTruncatedError):
            load_idx_pair(cut, lbl_path)

    def test_truncated_header(self, idx_pair, tmp_path):
        _, lbl_path = idx_pair
        stub = tmp_path / "stub.idx"
        stub.write_bytes(struct.pack(">II", 0x00000803, 2))
        with pytest.raises(IdxTruncatedError):
            load_idx_pair(stub, lbl_path)

    def test_count_mismatch(self, idx_pair, tmp_path):
        img_path, _ = idx_pair
        lbl3 = tmp_path / "three.idx"
        write_idx_labels(lbl3, [1, 2, 3])
        with pytest.raises(IdxCountMismatchError):
            load_idx_pair(img_path, lbl3)


class TestSyntheticGaussians:
    def test_zero_separation_chance_accuracy(self):
        # identical class conditionals: a fixed classifier scores 1/k up to
        # 3 sigma of the binomial fluctuation
        k, n = 4, 400
        ds = synthetic_gaussians(classes=k, dim=10, per_class=n // k, separation=0.0, seed=3)
        net = random_classifier([10, 12, k], seed=9)
        acc = float(np.mean(predict(net, ds.images) == ds.labels))
        p = 1.0 / k
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(acc - p) <= 3 * sigma

    def test_minimal_dataset(self):
        ds = synthetic_gaussians(classes=2, dim=3, per_class=1, separation=0.5, seed=0)
        assert len(ds) == 2
        np.testing.assert_array_equal(ds.labels, [0, 1])

    def test_deterministic(self):
        a = synthetic_gaussians(classes=3, dim=5, per_class=10, separation=0.7, seed=42)
        b = synthetic_gaussians(classes=3, dim=5, per_class=10, separation=0.7, seed=42)
        assert a.images.tobytes() == b.images.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()

    def test_range_respected(self):
        ds = synthetic_gaussians(classes=3, dim=4, per_class=50, separation=2.0, seed=1, spread=0.5)
        assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            synthetic_gaussians(classes=1, dim=3, per_class=5, separation=0.5, seed=0)
        with pytest.raises(ValueError):
            synthetic_gaussians(classes=2, dim=3, per_class=0, separation=0.5, seed=0)


class TestDataset:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="range"):
            Dataset(np.array([[1.5]]), np.array([0]))

    def test_rejects_count_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            Dataset(np.zeros((3, 2)), np.zeros(2, dtype=int))

    def test_subset(self):
        ds = synthetic_gaussians(classes=2, dim=3, per_class=5, separation=0.5, seed=0)
        sub = ds.subset([0, 5])
        assert len(sub) == 2
        np.testing.assert_array_equal(sub.labels, ds.labels[[0, 5]])


class TestAugmentedDigits:
    def test_shapes_and_range(self):
        train, test = augmented_digits(60, 20, seed=0)
        assert train.images.shape == (60, 784)
        assert test.images.shape == (20, 784)
        for ds in (train, test):
            assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0
            assert ds.labels.min() >= 0 and ds.labels.max() <= 9

    def test_deterministic(self):
        a_train, a_test = augmented_digits(30, 10, seed=4)
        b_train, b_test = augmented_digits(30, 10, seed=4)
        assert a_train.images.tobytes() == b_train.images.tobytes()
        assert a_test.images.tobytes() == b_test.images.tobytes()

    def test_seed_changes_corpus(self):
        a, _ = augmented_digits(30, 10, seed=4)
        b, _ = augmented_digits(30, 10, seed=5)
        assert a.images.tobytes() != b.images.tobytes()
