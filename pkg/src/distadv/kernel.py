"""RBF kernel with median-heuristic bandwidth and the two particle
interaction terms used by the distributional attacks.

The blob term couples particles through kernel-smoothed loss gradients plus
a kernel-gradient repulsion; the discrete-gradient-flow term is a
distance-weighted attraction/repulsion with a single composite scale.  Both
are plain functions of the current minibatch: the bandwidth is recomputed
from the present iterates every time (median heuristic), nothing is cached
across steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import matmul, median_pairwise_distance, pairwise_sq_distances

# Bandwidth floor when every particle coincides (median distance 0); the
# kernel then degenerates to all-ones.
BANDWIDTH_FLOOR = 1e-12


@dataclass(frozen=True)
class InteractionConfig:
    """Knobs of the particle coupling.

    c weights the blob term, lam is the length scale of the
    discrete-gradient-flow weight, dgf_scale is the composite prefactor
    2*gamma*c/(1+c) exposed directly as one number.
    """

    c: float = 1.1
    lam: float = 1.0
    dgf_scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError(f"c must be finite and >= 0, got {self.c}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam}")
        if not (np.isfinite(self.dgf_scale) and self.dgf_scale >= 0):
            raise ValueError(
                f"dgf_scale must be finite and >= 0, got {self.dgf_scale}"
            )


@dataclass(frozen=True)
class KernelMatrix:
    n: int
    matrix: np.ndarray
    bandwidth: float


def median_bandwidth(d2: np.ndarray, m: int) -> float:
    """Median-heuristic bandwidth med^2 / ln(m).

    med is the median pairwise Euclidean distance; a zero median returns the
    documented floor so the kernel stays defined for coincident particles.
    """
    if m < 2:
        raise ValueError(f"bandwidth needs at least two particles, got {m}")
    med = median_pairwise_distance(d2)
    if med == 0.0:
        return BANDWIDTH_FLOOR
    return med * med / float(np.log(m))


def rbf_kernel(batch: np.ndarray, h: float) -> KernelMatrix:
    """K[i, j] = exp(-||x_i - x_j||^2 / h)."""
    if h <= 0:
        raise ValueError(f"bandwidth must be > 0, got {h}")
    d2 = pairwise_sq_distances(batch)
    return KernelMatrix(n=d2.shape[0], matrix=np.exp(-d2 / h), bandwidth=float(h))


def _batch_bandwidth(d2: np.ndarray, m: int) -> float:
    return median_bandwidth(d2, m) if m >= 2 else BANDWIDTH_FLOOR


def blob_interaction(
    batch: np.ndarray, loss_grads: np.ndarray, kcfg: InteractionConfig
) -> np.ndarray:
    """Blob coupling term for each particle:

        (c/M) * sum_j [ K(x_i, x_j) g_j + (2/h) K(x_i, x_j) (x_i - x_j) ]

    where g_j are the per-particle loss gradients and h is the
    median-heuristic bandwidth of the current batch.  The j = i self terms
    are part of the sum, so a single particle reduces to c * g.
    """
    batch = np.asarray(batch, dtype=np.float64)
    loss_grads = np.asarray(loss_grads, dtype=np.float64)
    if batch.shape != loss_grads.shape:
        raise ValueError(
            f"shape mismatch: batch {batch.shape} vs gradients {loss_grads.shape}"
        )
    m = batch.shape[0]
    d2 = pairwise_sq_distances(batch)
    h = _batch_bandwidth(d2, m)
    k = np.exp(-d2 / h)
    smoothed = matmul(k, loss_grads)
    row_sums = k.sum(axis=1)
    repulsion = (2.0 / h) * (row_sums[:, None] * batch - matmul(k, batch))
    return (kcfg.c / m) * (smoothed + repulsion)


def dgf_interaction(batch: np.ndarray, kcfg: InteractionConfig) -> np.ndarray:
    """Discrete-gradient-flow coupling term for each particle:

        dgf_scale * sum_j (d2_ij/lam - 1) exp(-d2_ij/lam) (x_i - x_j)

    An isolated particle has an empty interaction and yields zero.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {batch.shape}")
    d2 = pairwise_sq_distances(batch)
    scaled = d2 / kcfg.lam
    w = (scaled - 1.0) * np.exp(-scaled)
    row_sums = w.sum(axis=1)
    return kcfg.dgf_scale * (row_sums[:, None] * batch - matmul(w, batch))
