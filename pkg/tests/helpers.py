"""Shared test utilities: non-degenerate random nets and a smoothness guard
for finite-difference oracles (central differences are only valid away from
relu kinks, runner-up ties, and margin clamps)."""

import numpy as np

from distadv.model import LossKind, _forward_cached, random_classifier
from distadv.numerics import make_rng


def lively_net(dims, seed):
    """He-initialized net with small random biases so relu units are not
    systematically dead at initialization."""
    net = random_classifier(dims, seed=seed)
    rng = make_rng(seed, "test-bias")
    for layer in net.layers:
        layer.bias = rng.uniform(-0.3, 0.3, layer.out_dim)
    return net


def fd_smooth(net, x, y, kind: LossKind, margin=1e-3) -> bool:
    """True when the loss is locally smooth around every row of x, so a
    central-difference bump of ~1e-5 cannot cross a kink."""
    pre, _ = _forward_cached(net, x)
    for k, layer in enumerate(net.layers):
        if layer.activation == "relu" and np.min(np.abs(pre[k])) < margin:
            return False
    if kind.tag == "cw_inf":
        logits = pre[-1] if net.layers[-1].activation == "identity" else np.maximum(pre[-1], 0)
        for i, label in enumerate(np.asarray(y)):
            z = logits[i].copy()
            z[label] = -np.inf
            top2 = np.sort(z)[::-1][:2]
            if top2[0] - top2[1] < margin:  # runner-up could switch
                return False
            if abs((top2[0] - logits[i, label]) + kind.kappa) < margin:  # clamp edge
                return False
    return True


def draw_fd_pairs(dims, n_pairs, kind, seed, batch_rows=1):
    """Yield n_pairs of (net, x, y) on which the FD oracle is valid."""
    rng = np.random.default_rng(seed)
    produced = 0
    attempt = 0
    while produced < n_pairs:
        attempt += 1
        if attempt > 50 * n_pairs:
            raise RuntimeError("could not find enough smooth FD pairs")
        net = lively_net(dims, seed=int(rng.integers(0, 2**31)))
        x = rng.uniform(0.05, 0.95, (batch_rows, dims[0]))
        y = rng.integers(0, dims[-1], batch_rows)
        if fd_smooth(net, x, y, kind):
            produced += 1
            yield net, x, y
