"""Minibatch SGD training, optionally with PGD adversarial examples
substituted for every minibatch (the min-max defense).

Training is a deterministic function of (initial classifier, data, config):
shuffles and inner-attack noise come from streams derived from the config
seed, so the same seed reproduces the final parameters byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .attacks import AttackConfig, pgd
from .model import CROSS_ENTROPY, Classifier, batch_stats, parameter_gradient
from .numerics import derive_seed, make_rng


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 100
    learning_rate: float = 0.1
    lr_decay: float = 1.0  # multiplicative step decay factor
    lr_decay_every: int = 0  # epochs between decays; 0 keeps the rate constant
    optimizer: str = "sgd"  # "sgd" or "sgd_momentum"
    momentum: float = 0.9
    adversarial: bool = False
    attack: AttackConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValueError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.adversarial != (self.attack is not None):
            raise ValueError("attack config must be present iff adversarial=True")


def _epoch_lr(cfg: TrainConfig, epoch: int) -> float:
    if cfg.lr_decay_every <= 0:
        return cfg.learning_rate
    return cfg.learning_rate * cfg.lr_decay ** (epoch // cfg.lr_decay_every)


def _training_loop(classifier, images, labels, cfg: TrainConfig, attack_cfg):
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    n = images.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    c = classifier.copy()
    params = c.parameter_vector()
    velocity = np.zeros_like(params)
    log = []
    for epoch in range(cfg.epochs):
        order = make_rng(cfg.seed, "shuffle", epoch).permutation(n)
        lr = _epoch_lr(cfg, epoch)
        loss_sum = 0.0
        hit_sum = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            bx, by = images[idx], labels[idx]
            if attack_cfg is not None:
                inner = replace(
                    attack_cfg, seed=derive_seed(cfg.seed, "advstep", epoch, b)
                )
                bx = pgd(c, bx, by, inner).adversarial
            mean_loss, acc = batch_stats(c, bx, by, CROSS_ENTROPY)
            if not np.isfinite(mean_loss):
                raise TrainingDivergedError(epoch, mean_loss)
            loss_sum += mean_loss * len(idx)
            hit_sum += acc * len(idx)
            grad = parameter_gradient(c, bx, by, CROSS_ENTROPY)
            if cfg.optimizer == "sgd_momentum":
                velocity = cfg.momentum * velocity + grad
                params = params - lr * velocity
            else:
                params = params - lr * grad
            c.set_parameter_vector(params)
        log.append(
            {
                "epoch": epoch,
                "learning_rate": lr,
                "train_loss": loss_sum / n,
                "train_accuracy": hit_sum / n,
            }
        )
    return c, log


def train(classifier: Classifier, images, labels, cfg: TrainConfig):
    """Standard minibatch training; returns (trained classifier, epoch log)."""
    if cfg.adversarial:
        raise ValueError("use train_pgd_adversarial for adversarial configs")
    return _training_loop(classifier, images, labels, cfg, None)


def train_pgd_adversarial(classifier: Classifier, images, labels, cfg: TrainConfig):
    """Adversarial training: every minibatch is replaced by its PGD attack
    against the current parameters before the update."""
    if not cfg.adversarial:
        raise ValueError("config must set adversarial=True")
    return _training_loop(classifier, images, labels, cfg, cfg.attack)


def format_training_log(log) -> str:
    """Plain-text log, one record per epoch."""
    lines = [
        "epoch {epoch} lr {learning_rate:.6g} loss {train_loss:.6g} "
        "accuracy {train_accuracy:.6g}".format(**rec)
        for rec in log
    ]
    return "\n".join(lines) + ("\n" if lines else "")
