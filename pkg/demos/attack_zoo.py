"""Tour of every attack in the registry on one small trained model.

Trains a dense classifier on separable Gaussian blobs, then runs each
attack at the same l-inf budget and prints how far the accuracy drops.
Everything is seeded; rerunning reproduces the table exactly.
"""

import numpy as np

from distadv import (
    ATTACKS,
    AttackConfig,
    InteractionConfig,
    TrainConfig,
    predict,
    random_classifier,
    run_attack,
    synthetic_gaussians,
    train,
)

ds = synthetic_gaussians(classes=4, dim=12, per_class=60, separation=0.7, seed=1)
order = np.random.default_rng(0).permutation(len(ds))
fit, test = ds.subset(order[:180]), ds.subset(order[180:])

net = random_classifier([12, 32, 4], seed=1)
net, log = train(net, fit.images, fit.labels, TrainConfig(epochs=40, batch_size=20, learning_rate=0.5, seed=1))
clean = float(np.mean(predict(net, test.images) == test.labels))
print(f"trained {len(fit)} samples, clean test accuracy {clean:.3f}\n")

cfg = AttackConfig(
    step_size=0.02,
    bound=0.1,
    total_iters=20,
    rounds=1,
    minibatch=20,
    momentum_decay=0.9,
    random_start=True,
    seed=7,
    interaction=InteractionConfig(c=1.1, lam=1.0, dgf_scale=1.0),
)

print(f"{'attack':<14} {'accuracy':>9} {'drop':>7}")
for name in sorted(ATTACKS):
    res = run_attack(name, net, test.images, test.labels, cfg)
    acc = float(np.mean(~res.success))
    print(f"{name:<14} {acc:>9.3f} {clean - acc:>7.3f}")
