"""Dense feed-forward classifier with exact analytic gradients.

The network is a stack of affine layers with relu or identity activations.
Gradients with respect to both the inputs (for attacks) and the parameters
(for training) are computed by hand-rolled backprop; a finite-difference
oracle in the test suite pins them down.  Classifiers serialize to a
versioned binary checkpoint that round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .numerics import make_rng, matmul

ACTIVATIONS = ("relu", "identity")

CHECKPOINT_MAGIC = b"DAAF"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    """Base class for checkpoint load failures."""


class CheckpointMagicError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointArchitectureError(CheckpointError):
    pass


@dataclass(frozen=True)
class LossKind:
    """Attack objective: 'cross_entropy' or the 'cw_inf' logit margin.

    cw_inf evaluates max(max_{i != y} Z_i - Z_y, -kappa) on the logits Z;
    kappa = 0 reduces it to a pure misclassification margin.
    """

    tag: str = "cross_entropy"
    kappa: float = 0.0

    def __post_init__(self):
        if self.tag not in ("cross_entropy", "cw_inf"):
            raise ValueError(f"unknown loss tag {self.tag!r}")
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")


CROSS_ENTROPY = LossKind("cross_entropy")
CW_INF = LossKind("cw_inf")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match "
                f"output dim {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Classifier:
    layers: list[DenseLayer] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("classifier needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    def copy(self) -> "Classifier":
        return Classifier(
            [
                DenseLayer(l.weights.copy(), l.bias.copy(), l.activation)
                for l in self.layers
            ]
        )

    def parameter_vector(self) -> np.ndarray:
        """Flatten all parameters: per layer, row-major weights then bias."""
        chunks = []
        for l in self.layers:
            chunks.append(l.weights.ravel())
            chunks.append(l.bias)
        return np.concatenate(chunks)

    def set_parameter_vector(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        offset = 0
        for l in self.layers:
            w_size = l.weights.size
            l.weights = flat[offset : offset + w_size].reshape(l.weights.shape).copy()
            offset += w_size
            l.bias = flat[offset : offset + l.out_dim].copy()
            offset += l.out_dim
        if offset != flat.size:
            raise ValueError(
                f"parameter vector has {flat.size} entries, expected {offset}"
            )


def random_classifier(dims: list[int], seed: int, final_activation: str = "identity") -> Classifier:
    """He-initialized classifier with relu hidden layers.

    dims lists the widths, e.g. [784, 256, 128, 10].
    """
    if len(dims) < 2:
        raise ValueError("need at least an input and an output dim")
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        rng = make_rng(seed, "init", k)
        w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        last = k == len(dims) - 2
        layers.append(
            DenseLayer(w, np.zeros(fan_out), final_activation if last else "relu")
        )
    return Classifier(layers)


def _forward_cached(c: Classifier, batch: np.ndarray):
    """Forward pass keeping pre- and post-activation caches for backprop."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError(f"batch must be 2-D, got shape {batch.shape}")
    if batch.shape[1] != c.input_dim:
        raise ValueError(
            f"batch width {batch.shape[1]} does not match input dim {c.input_dim}"
        )
    acts = [batch]
    pre = []
    a = batch
    for l in c.layers:
        z = matmul(a, l.weights.T) + l.bias
        pre.append(z)
        a = np.maximum(z, 0.0) if l.activation == "relu" else z
        acts.append(a)
    return pre, acts


def forward(c: Classifier, batch: np.ndarray) -> np.ndarray:
    """Logits for a batch, shape (rows, num_classes)."""
    _, acts = _forward_cached(c, batch)
    return acts[-1]


def predict(c: Classifier, batch: np.ndarray) -> np.ndarray:
    """Predicted labels: argmax over logits, ties to the lowest index."""
    return np.argmax(forward(c, batch), axis=1)


def _check_labels(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D integer vector")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    return labels.astype(np.int64)

def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def _runner_up(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Highest non-true-label logit per row; ties go to the lowest index."""
    masked = logits.copy()
    masked[np.arange(len(labels)), labels] = -np.inf
    return np.argmax(masked, axis=1)


def loss_per_sample(logits: np.ndarray, labels: np.ndarray, kind: LossKind) -> np.ndarray:
    """Per-row loss values for either objective.

    cross_entropy: -log softmax(Z)[y], evaluated via log-sum-exp so logits of
    magnitude up to ~1e3 stay finite.  cw_inf: max(max_{i != y} Z_i - Z_y, -kappa).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = _check_labels(labels, logits.shape[1])
    rows = np.arange(len(labels))
    if kind.tag == "cross_entropy":
        m = np.max(logits, axis=1)
        lse = m + np.log(np.sum(np.exp(logits - m[:, None]), axis=1))
        return lse - logits[rows, labels]
    if logits.shape[1] < 2:
        raise ValueError("cw_inf needs at least two classes")
    r = _runner_up(logits, labels)
    margin = logits[rows, r] - logits[rows, labels]
    return np.maximum(margin, -kind.kappa)


def _loss_grad_logits(logits: np.ndarray, labels: np.ndarray, kind: LossKind) -> np.ndarray:
    """Gradient of the per-sample loss with respect to the logits."""
    rows = np.arange(len(labels))
    if kind.tag == "cross_entropy":
        g = _softmax_rows(logits)
        g[rows, labels] -= 1.0
        return g
    if logits.shape[1] < 2:
        raise ValueError("cw_inf needs at least two classes")
    r = _runner_up(logits, labels)
    margin = logits[rows, r] - logits[rows, labels]
    # Clamp side of max(margin, -kappa): zero gradient once the margin is
    # clipped (margin <= -kappa), the fixed subgradient choice.
    active = margin > -kind.kappa
    g = np.zeros_like(logits)
    g[rows, r] = np.where(active, 1.0, 0.0)
    g[rows, labels] -= np.where(active, 1.0, 0.0)
    return g


def _backprop_to_input(c: Classifier, pre, d_logits: np.ndarray) -> np.ndarray:
    dz = d_logits
    for k in range(len(c.layers) - 1, -1, -1):
        l = c.layers[k]
        if l.activation == "relu":
            dz = dz * (pre[k] > 0.0)
        if k == 0:
            return matmul(dz, l.weights)
        dz = matmul(dz, l.weights)
        # dz is now the gradient w.r.t. the previous layer's activation
    raise AssertionError("unreachable")


def input_gradient(
    c: Classifier, batch: np.ndarray, labels: np.ndarray, kind: LossKind
) -> np.ndarray:
    """Exact gradient of each row's loss with respect to that input row."""
    pre, _ = _forward_cached(c, batch)
    labels = _check_labels(labels, c.num_classes)
    d_logits = _loss_grad_logits(_logits_from(pre, c), labels, kind)
    return _backprop_to_input(c, pre, d_logits)


def _logits_from(pre, c: Classifier) -> np.ndarray:
    last = c.layers[-1]
    z = pre[-1]
    return np.maximum(z, 0.0) if last.activation == "relu" else z


def loss_and_input_gradient(
    c: Classifier, batch: np.ndarray, labels: np.ndarray, kind: LossKind
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample losses and the input gradient from a single forward pass."""
    pre, _ = _forward_cached(c, batch)
    labels = _check_labels(labels, c.num_classes)
    logits = _logits_from(pre, c)
    losses = loss_per_sample(logits, labels, kind)
    d_logits = _loss_grad_logits(logits, labels, kind)
    return losses, _backprop_to_input(c, pre, d_logits)


def parameter_gradient(
    c: Classifier, batch: np.ndarray, labels: np.ndarray, kind: LossKind
) -> np.ndarray:
    """Gradient of the mean loss over the batch w.r.t. the flat parameters.

    Layout matches Classifier.parameter_vector.
    """
    pre, acts = _forward_cached(c, batch)
    labels = _check_labels(labels, c.num_classes)
    n = batch.shape[0]
    dz = _loss_grad_logits(_logits_from(pre, c), labels, kind) / n
    grads = [None] * len(c.layers)
    for k in range(len(c.layers) - 1, -1, -1):
        l = c.layers[k]
        if l.activation == "relu":
            dz = dz * (pre[k] > 0.0)
        dw = np.einsum("no,ni->oi", dz, acts[k], optimize=False)
        db = dz.sum(axis=0)
        grads[k] = (dw, db)
        if k > 0:
            dz = matmul(dz, l.weights)
    chunks = []
    for dw, db in grads:
        chunks.append(dw.ravel())
        chunks.append(db)
    return np.concatenate(chunks)


def batch_stats(
    c: Classifier, batch: np.ndarray, labels: np.ndarray, kind: LossKind
) -> tuple[float, float]:
    """(mean loss, accuracy) of a batch under the given objective."""
    logits = forward(c, batch)
    labels = _check_labels(labels, c.num_classes)
    losses = loss_per_sample(logits, labels, kind)
    acc = float(np.mean(np.argmax(logits, axis=1) == labels))
    return float(np.mean(losses)), acc


# ---------------------------------------------------------------------------
# Checkpoint format: magic "DAAF", u32 version, architecture block, then the
# flat parameter vector as little-endian float64.  Fully specified so that
# save -> load round trips are bit-exact.

_ACT_CODE = {"relu": 0, "identity": 1}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}


def save_checkpoint(c: Classifier, path) -> None:
    params = c.parameter_vector()
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<I", CHECKPOINT_VERSION)
    blob += struct.pack("<I", len(c.layers))
    for l in c.layers:
        blob += struct.pack("<IIB", l.in_dim, l.out_dim, _ACT_CODE[l.activation])
    blob += struct.pack("<Q", params.size)
    blob += params.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_checkpoint(path) -> Classifier:
    with open(path, "rb") as fh:
        data = fh.read()

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise CheckpointTruncatedError(f"file ends inside {what}")
        chunk = data[offset : offset + n]
        offset += n
        return chunk

    offset = 0
    if take(4, "magic") != CHECKPOINT_MAGIC:
        raise CheckpointMagicError(f"{path} is not a classifier checkpoint")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )
    (num_layers,) = struct.unpack("<I", take(4, "layer count"))
    if num_layers == 0:
        raise CheckpointArchitectureError("checkpoint declares zero layers")
    arch = []
    for k in range(num_layers):
        in_dim, out_dim, act = struct.unpack("<IIB", take(9, f"layer {k} header"))
        if act not in _ACT_NAME:
            raise CheckpointArchitectureError(f"unknown activation code {act}")
        arch.append((in_dim, out_dim, _ACT_NAME[act]))
    (declared,) = struct.unpack("<Q", take(8, "parameter count"))
    expected = sum(i * o + o for i, o, _ in arch)
    if declared != expected:
        raise CheckpointArchitectureError(
            f"parameter count {declared} does not match architecture ({expected})"
        )
    raw = take(8 * declared, "parameter block")
    if offset != len(data):
        raise CheckpointArchitectureError(
            f"{len(data) - offset} trailing bytes after parameter block"
        )
    flat = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    layers = []
    pos = 0
    for in_dim, out_dim, act in arch:
        w = flat[pos : pos + in_dim * out_dim].reshape(out_dim, in_dim)
        pos += in_dim * out_dim
        b = flat[pos : pos + out_dim]
        pos += out_dim
        layers.append(DenseLayer(w.copy(), b.copy(), act))
    try:
        return Classifier(layers)
    except ValueError as exc:
        raise CheckpointArchitectureError(str(exc)) from exc
