"""Calibration run for the desk-scale ordering experiment (not part of the
package; deleted before delivery)."""

import time

import numpy as np

from distadv.attacks import AttackConfig, worst_case_over_restarts
from distadv.data import augmented_digits
from distadv.evaluate import one_sided_p, paired_t_test
from distadv.kernel import InteractionConfig
from distadv.model import predict, random_classifier
from distadv.training import TrainConfig, train_pgd_adversarial

t0 = time.time()
train_ds, test_ds = augmented_digits(10_000, 1_000, seed=0)
print(f"corpus built in {time.time()-t0:.1f}s")

t0 = time.time()
net = random_classifier([784, 256, 128, 10], seed=0)
inner = AttackConfig(
    step_size=0.075, bound=0.3, total_iters=7, rounds=1,
    random_start=True, seed=0, interaction=InteractionConfig(c=0.0),
)
cfg = TrainConfig(
    epochs=4, batch_size=100, learning_rate=0.1,
    optimizer="sgd_momentum", momentum=0.9,
    adversarial=True, attack=inner, seed=0,
)
model, log = train_pgd_adversarial(net, train_ds.images, train_ds.labels, cfg)
print(f"adv training: {time.time()-t0:.1f}s; last epochs:")
for rec in log[-2:]:
    print("   ", rec)
clean = float(np.mean(predict(model, test_ds.images) == test_ds.labels))
print(f"clean test accuracy: {clean:.4f}")

t0 = time.time()
pgd_accs, daa_accs = [], []
for seed in range(5):
    base = AttackConfig(
        step_size=0.01, bound=0.3, total_iters=40, rounds=1, minibatch=200,
        random_start=True, restarts=1, seed=seed,
        interaction=InteractionConfig(c=1.1, lam=1.0, dgf_scale=1.0),
    )
    rr_p = worst_case_over_restarts(model, test_ds.images, test_ds.labels, base, attack="pgd")
    rr_d = worst_case_over_restarts(model, test_ds.images, test_ds.labels, base, attack="daa_blob")
    pgd_accs.append(rr_p.worst_case_accuracy)
    daa_accs.append(rr_d.worst_case_accuracy)
    print(f"seed {seed}: pgd {rr_p.worst_case_accuracy:.4f}  daa {rr_d.worst_case_accuracy:.4f}")
print(f"attacks: {time.time()-t0:.1f}s")
print(f"means: pgd {np.mean(pgd_accs):.4f}  daa {np.mean(daa_accs):.4f}")
try:
    res = paired_t_test(pgd_accs, daa_accs)
    print(f"t={res.t:.3f}, one-sided p={one_sided_p(res):.4f}")
except Exception as e:
    print("t-test:", e)
