"""Deterministic numeric primitives shared by every other module.

Everything here operates on float64 numpy arrays and is a pure function of
its inputs.  Reductions use a fixed accumulation order: `matmul` routes
through a non-optimized einsum whose per-row result does not depend on which
other rows are present in the batch, so gradients computed sample-by-sample,
in minibatches, or full-batch are bitwise identical.  That property is what
makes the exact-equivalence guarantees of the attack suite (e.g. DAA with
c=0 versus PGD) hold at the byte level.
"""

from __future__ import annotations

import hashlib
from typing import Callable

import numpy as np

__all__ = [
    "derive_seed",
    "make_rng",
    "matmul",
    "sign",
    "clip_projection",
    "pairwise_sq_distances",
    "median_pairwise_distance",
    "uniform_noise",
    "finite_difference_gradient",
]


def derive_seed(master: int, *parts) -> int:
    """Derive an independent 64-bit stream seed from a master seed.

    The derivation hashes the master seed together with an arbitrary tuple of
    string/int tags, so per-sample or per-round streams can be keyed by
    stable identifiers (dataset index, restart number, ...) and stay
    independent of batch ordering.
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def make_rng(master: int, *parts) -> np.random.Generator:
    """Seeded generator for the stream keyed by (master, *parts)."""
    return np.random.default_rng(derive_seed(master, *parts))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """2-D matrix product with a fixed, batch-independent summation order.

    Row i of the result is a function of row i of `a` alone (BLAS kernels do
    not guarantee that across batch sizes, non-optimized einsum does).
    """
    return np.einsum("ij,jk->ik", a, b, optimize=False)


def sign(t: np.ndarray) -> np.ndarray:
    """Elementwise sign with sign(0) = 0."""
    return np.sign(np.asarray(t, dtype=np.float64))


def clip_projection(
    candidate: np.ndarray,
    original: np.ndarray,
    alpha: float,
    lo: float,
    hi: float,
) -> np.ndarray:
    """Two-stage projection: into the l-inf box around `original`, then into
    the pixel range [lo, hi].

    Idempotent, and every output entry e satisfies
    max(lo, orig - alpha) <= e <= min(hi, orig + alpha).
    """
    candidate = np.asarray(candidate, dtype=np.float64)
    original = np.asarray(original, dtype=np.float64)
    if candidate.shape != original.shape:
        raise ValueError(
            f"shape mismatch: candidate {candidate.shape} vs original {original.shape}"
        )
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not lo < hi:
        raise ValueError(f"invalid pixel range [{lo}, {hi}]")
    boxed = np.clip(candidate, original - alpha, original + alpha)
    return np.clip(boxed, lo, hi)


def pairwise_sq_distances(batch: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between all row pairs of a 2-D batch.

    The result is exactly symmetric, has an exactly zero diagonal, and is
    nonnegative.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {batch.shape}")
    if batch.shape[0] == 0:
        raise ValueError("batch must contain at least one row")
    gram = np.einsum("ij,kj->ik", batch, batch, optimize=False)
    sq = np.diagonal(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def median_pairwise_distance(d2: np.ndarray) -> float:
    """Median of the n(n-1)/2 off-diagonal Euclidean (non-squared) distances.

    Even counts average the two central order statistics.
    """
    d2 = np.asarray(d2, dtype=np.float64)
    n = d2.shape[0]
    if d2.ndim != 2 or d2.shape != (n, n):
        raise ValueError(f"expected a square distance matrix, got shape {d2.shape}")
    if n < 2:
        raise ValueError("median needs at least two particles")
    iu = np.triu_indices(n, k=1)
    return float(np.median(np.sqrt(d2[iu])))


def uniform_noise(shape, alpha: float, seed: int) -> np.ndarray:
    """i.i.d. uniform noise in [-alpha, alpha], deterministic given seed."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    rng = np.random.default_rng(seed)
    return rng.uniform(-alpha, alpha, size=shape)


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a
    time: (f(x + h e_i) - f(x - h e_i)) / (2h).

    Test oracle for the analytic gradients; not used on any hot path.
    """
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        bumped = x.copy()
        bumped[idx] = x[idx] + h
        fp = float(f(bumped))
        bumped[idx] = x[idx] - h
        fm = float(f(bumped))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value at coordinate {idx}")
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad
