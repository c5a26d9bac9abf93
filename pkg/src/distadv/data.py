"""Dataset ingestion: IDX image/label files (the MNIST container format),
synthetic Gaussian-blob corpora, and a deterministic handwritten-digit
corpus built from sklearn's bundled 8x8 digits for offline desk-scale runs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .numerics import make_rng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxError(Exception):
    """Base class for IDX parsing failures."""


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxCountMismatchError(IdxError):
    pass


class IdxEmptyError(IdxError):
    pass


@dataclass
class Dataset:
    images: np.ndarray  # (n, d) float64 rows
    labels: np.ndarray  # (n,) int64
    name: str = "dataset"
    pixel_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2:
            raise ValueError(f"images must be 2-D, got shape {self.images.shape}")
        if self.labels.ndim != 1 or len(self.labels) != self.images.shape[0]:
            raise ValueError("labels must be a vector matching the image count")
        lo, hi = self.pixel_range
        if not lo < hi:
            raise ValueError(f"invalid pixel range [{lo}, {hi}]")
        if self.images.size and (
            self.images.min() < lo or self.images.max() > hi
        ):
            raise ValueError("image values escape the declared pixel range")

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, indices) -> "Dataset":
        return Dataset(
            self.images[indices], self.labels[indices], self.name, self.pixel_range
        )


def _read_header(data: bytes, path, n_fields: int, what: str):
    need = 4 * n_fields
    if len(data) < need:
        raise IdxTruncatedError(f"{path}: file ends inside the {what} header")
    return struct.unpack(f">{n_fields}I", data[:need]), data[need:]


def load_idx_pair(images_path, labels_path) -> Dataset:
    """Parse an IDX image/label file pair into a flattened float dataset.

    Big-endian magics 0x00000803 (images) and 0x00000801 (labels), unsigned
    byte payloads; pixels are scaled to [0, 1] by dividing by 255.
    """
    with open(images_path, "rb") as fh:
        raw = fh.read()
    (magic, count, rows, cols), payload = _read_header(raw, images_path, 4, "image")
    if magic != IDX_IMAGE_MAGIC:
        raise IdxMagicError(
            f"{images_path}: magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
        )
    if count == 0:
        raise IdxEmptyError(f"{images_path}: file declares zero images")
    if len(payload) != count * rows * cols:
        raise IdxTruncatedError(
            f"{images_path}: payload holds {len(payload)} bytes, "
            f"expected {count * rows * cols}"
        )
    images = (
        np.frombuffer(payload, dtype=np.uint8)
        .reshape(count, rows * cols)
        .astype(np.float64)
        / 255.0
    )

    with open(labels_path, "rb") as fh:
        raw = fh.read()
    (magic, label_count), payload = _read_header(raw, labels_path, 2, "label")
    if magic != IDX_LABEL_MAGIC:
        raise IdxMagicError(
            f"{labels_path}: magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
        )
    if label_count == 0:
        raise IdxEmptyError(f"{labels_path}: file declares zero labels")
    if len(payload) != label_count:
        raise IdxTruncatedError(
            f"{labels_path}: payload holds {len(payload)} bytes, expected {label_count}"
        )
    if label_count != count:
        raise IdxCountMismatchError(
            f"{count} images but {label_count} labels"
        )
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    return Dataset(images, labels, name="idx")


def synthetic_gaussians(
    classes: int,
    dim: int,
    per_class: int,
    separation: float,
    seed: int,
    spread: float = 0.1,
) -> Dataset:
    """Gaussian class blobs clipped into [0, 1]^dim.

    Class means sit at 0.5 + (separation/2) * u_c for seeded unit vectors
    u_c, so separation 0 makes every class-conditional distribution
    identical.  Deterministic given the seed.
    """
    if classes < 2:
        raise ValueError("need at least two classes")
    if per_class < 1:
        raise ValueError("need at least one sample per class")
    rng = make_rng(seed, "synthetic")
    dirs = rng.standard_normal((classes, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    means = 0.5 + 0.5 * separation * dirs
    blocks = [
        rng.standard_normal((per_class, dim)) * spread + means[c]
        for c in range(classes)
    ]
    images = np.clip(np.concatenate(blocks), 0.0, 1.0)
    labels = np.repeat(np.arange(classes), per_class)
    return Dataset(images, labels, name=f"gaussians{classes}x{per_class}")


def _bilinear_resize(img: np.ndarray, size: int) -> np.ndarray:
    """Bilinear upsampling of one square image to size x size."""
    src = img.shape[0]
    pos = (np.arange(size) + 0.5) * src / size - 0.5
    lo = np.clip(np.floor(pos).astype(int), 0, src - 1)
    hi = np.clip(lo + 1, 0, src - 1)
    frac = np.clip(pos - lo, 0.0, 1.0)
    rows = img[lo][:, lo] * np.outer(1 - frac, 1 - frac)
    rows += img[lo][:, hi] * np.outer(1 - frac, frac)
    rows += img[hi][:, lo] * np.outer(frac, 1 - frac)
    rows += img[hi][:, hi] * np.outer(frac, frac)
    return rows


def augmented_digits(
    n_train: int, n_test: int, seed: int, side: int = 28
) -> tuple[Dataset, Dataset]:
    """Deterministic MNIST-format digit corpus built offline.

    Upscales sklearn's bundled 8x8 handwritten digits to side x side and
    augments them with seeded integer shifts and mild noise until the
    requested counts are reached.  Train and test draw from disjoint base
    images, so no augmented test sample shares a source image with training.
    """
    from sklearn.datasets import load_digits

    raw = load_digits()
    base = raw.images / 16.0
    labels = raw.target.astype(np.int64)
    n_base = len(base)
    rng = make_rng(seed, "digits-split")
    order = rng.permutation(n_base)
    cut = int(0.8 * n_base)
    pools = {"train": order[:cut], "test": order[cut:]}
    out = {}
    for split, pool, count in (
        ("train", pools["train"], n_train),
        ("test", pools["test"], n_test),
    ):
        rng = make_rng(seed, "digits-aug", split)
        picks = pool[rng.integers(0, len(pool), size=count)]
        images = np.empty((count, side * side))
        for i, src in enumerate(picks):
            img = _bilinear_resize(base[src], side)
            dy, dx = rng.integers(-2, 3, size=2)
            img = np.roll(np.roll(img, dy, axis=0), dx, axis=1)
            img += rng.normal(0.0, 0.02, size=img.shape)
            images[i] = np.clip(img, 0.0, 1.0).ravel()
        out[split] = Dataset(
            images, labels[picks], name=f"digits-{split}-{count}"
        )
    return out["train"], out["test"]
