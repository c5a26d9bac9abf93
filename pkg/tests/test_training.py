import numpy as np
import pytest

from distadv.attacks import AttackConfig, pgd
from distadv.data import synthetic_gaussians
from distadv.kernel import InteractionConfig
from distadv.model import (
    CROSS_ENTROPY,
    parameter_gradient,
    predict,
    random_classifier,
    save_checkpoint,
)
from distadv.training import (
    TrainConfig,
    TrainingDivergedError,
    format_training_log,
    train,
    train_pgd_adversarial,
)


def inner_attack(bound, steps=3, step_size=None, seed=0):
    return AttackConfig(
        step_size=step_size or max(bound / 2, 1e-3),
        bound=bound,
        total_iters=steps,
        rounds=1,
        random_start=True,
        seed=seed,
        interaction=InteractionConfig(c=0.0),
    )


@pytest.fixture(scope="module")
def blobs():
    return synthetic_gaussians(classes=2, dim=6, per_class=40, separation=0.9, seed=5)


class TestConfig:
    def test_attack_iff_adversarial(self):
        with pytest.raises(ValueError, match="iff"):
            TrainConfig(adversarial=True, attack=None)
        with pytest.raises(ValueError, match="iff"):
            TrainConfig(adversarial=False, attack=inner_attack(0.1))

    def test_rejects_negative_lr(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-0.1)

    def test_train_rejects_adversarial_config(self, blobs):
        net = random_classifier([6, 8, 2], seed=0)
        cfg = TrainConfig(adversarial=True, attack=inner_attack(0.1), epochs=1)
        with pytest.raises(ValueError, match="adversarial"):
            train(net, blobs.images, blobs.labels, cfg)


class TestStandardTraining:
    def test_separable_data_reaches_high_accuracy(self, blobs):
        net = random_classifier([6, 16, 2], seed=7)
        cfg = TrainConfig(epochs=50, batch_size=20, learning_rate=0.5, seed=7)
        trained, log = train(net, blobs.images, blobs.labels, cfg)
        assert log[-1]["train_accuracy"] >= 0.99
        acc = float(np.mean(predict(trained, blobs.images) == blobs.labels))
        assert acc >= 0.99

    def test_zero_learning_rate_keeps_parameters(self, blobs):
        net = random_classifier([6, 8, 2], seed=1)
        cfg = TrainConfig(epochs=3, batch_size=16, learning_rate=0.0, seed=1)
        trained, _ = train(net, blobs.images, blobs.labels, cfg)
        assert trained.parameter_vector().tobytes() == net.parameter_vector().tobytes()

    def test_single_sample_epoch_is_one_sgd_step(self, blobs):
        net = random_classifier([6, 8, 2], seed=2)
        x, y = blobs.images[:1], blobs.labels[:1]
        cfg = TrainConfig(epochs=1, batch_size=1, learning_rate=0.3, seed=2)
        trained, _ = train(net, x, y, cfg)
        grad = parameter_gradient(net, x, y, CROSS_ENTROPY)
        expected = net.parameter_vector() - 0.3 * grad
        np.testing.assert_array_equal(trained.parameter_vector(), expected)

    def test_reproducible_checkpoints(self, blobs, tmp_path):
        cfg = TrainConfig(epochs=4, batch_size=16, learning_rate=0.2, seed=11)
        paths = []
        for run in range(2):
            net = random_classifier([6, 8, 2], seed=11)
            trained, _ = train(net, blobs.images, blobs.labels, cfg)
            p = tmp_path / f"run{run}.ckpt"
            save_checkpoint(trained, p)
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_divergence_reports_epoch(self, blobs):
        # a linear net keeps gradients alive, so a huge rate genuinely
        # overflows instead of saturating behind dead relus
        from distadv.model import Classifier, DenseLayer
        from distadv.numerics import make_rng

        rng = make_rng(3, "lin")
        net = Classifier(
            [
                DenseLayer(rng.standard_normal((8, 6)), np.zeros(8), "identity"),
                DenseLayer(rng.standard_normal((2, 8)), np.zeros(2), "identity"),
            ]
        )
        cfg = TrainConfig(epochs=30, batch_size=16, learning_rate=1e4, seed=3)
        with np.errstate(all="ignore"):
            with pytest.raises(TrainingDivergedError) as err:
                train(net, blobs.images, blobs.labels, cfg)
        assert err.value.epoch >= 0

    def test_lr_step_decay(self, blobs):
        net = random_classifier([6, 8, 2], seed=4)
        cfg = TrainConfig(
            epochs=4, batch_size=16, learning_rate=0.4, lr_decay=0.5,
            lr_decay_every=2, seed=4,
        )
        _, log = train(net, blobs.images, blobs.labels, cfg)
        assert [rec["learning_rate"] for rec in log] == [0.4, 0.4, 0.2, 0.2]

    def test_momentum_optimizer_trains(self, blobs):
        net = random_classifier([6, 16, 2], seed=8)
        cfg = TrainConfig(
            epochs=20, batch_size=20, learning_rate=0.1,
            optimizer="sgd_momentum", momentum=0.9, seed=8,
        )
        _, log = train(net, blobs.images, blobs.labels, cfg)
        assert log[-1]["train_accuracy"] >= 0.95


class TestAdversarialTraining:
    def test_zero_budget_matches_standard_bitwise(self, blobs):
        seed = 21
        cfg_std = TrainConfig(epochs=3, batch_size=16, learning_rate=0.2, seed=seed)
        cfg_adv = TrainConfig(
            epochs=3, batch_size=16, learning_rate=0.2, seed=seed,
            adversarial=True, attack=inner_attack(0.0, steps=3, step_size=0.01),
        )
        a, _ = train(random_classifier([6, 8, 2], seed=seed), blobs.images, blobs.labels, cfg_std)
        b, _ = train_pgd_adversarial(
            random_classifier([6, 8, 2], seed=seed), blobs.images, blobs.labels, cfg_adv
        )
        assert a.parameter_vector().tobytes() == b.parameter_vector().tobytes()

    def test_adversarial_model_more_robust(self):
        # end-to-end ordering claim at the training budget, on held-out
        # samples from the same blob distribution
        full = synthetic_gaussians(classes=2, dim=6, per_class=80, separation=0.9, seed=5)
        order = np.random.default_rng(0).permutation(len(full))
        fit, holdout = full.subset(order[:80]), full.subset(order[80:])
        bound = 0.12
        seed = 31
        cfg_std = TrainConfig(epochs=40, batch_size=20, learning_rate=0.5, seed=seed)
        cfg_adv = TrainConfig(
            epochs=40, batch_size=20, learning_rate=0.5, seed=seed,
            adversarial=True, attack=inner_attack(bound, steps=5, step_size=0.06),
        )
        std, _ = train(random_classifier([6, 16, 2], seed=seed), fit.images, fit.labels, cfg_std)
        adv, _ = train_pgd_adversarial(
            random_classifier([6, 16, 2], seed=seed), fit.images, fit.labels, cfg_adv
        )
        eval_cfg = AttackConfig(
            step_size=0.03, bound=bound, total_iters=20, random_start=True, seed=1,
            interaction=InteractionConfig(c=0.0),
        )
        rob_std = float(np.mean(~pgd(std, holdout.images, holdout.labels, eval_cfg).success))
        rob_adv = float(np.mean(~pgd(adv, holdout.images, holdout.labels, eval_cfg).success))
        assert rob_adv > rob_std

    def test_fgsm_degenerate_inner(self, blobs):
        # inner L=1 with step == bound is single-step adversarial training
        cfg = TrainConfig(
            epochs=2, batch_size=16, learning_rate=0.2, seed=9,
            adversarial=True,
            attack=inner_attack(0.1, steps=1, step_size=0.1),
        )
        trained, log = train_pgd_adversarial(
            random_classifier([6, 8, 2], seed=9), blobs.images, blobs.labels, cfg
        )
        assert len(log) == 2
        assert np.isfinite(trained.parameter_vector()).all()

    def test_requires_adversarial_flag(self, blobs):
        cfg = TrainConfig(epochs=1, batch_size=16, learning_rate=0.1, seed=0)
        with pytest.raises(ValueError, match="adversarial"):
            train_pgd_adversarial(
                random_classifier([6, 8, 2], seed=0), blobs.images, blobs.labels, cfg
            )


class TestLogFormat:
    def test_one_line_per_epoch(self, blobs):
        net = random_classifier([6, 8, 2], seed=12)
        cfg = TrainConfig(epochs=3, batch_size=16, learning_rate=0.2, seed=12)
        _, log = train(net, blobs.images, blobs.labels, cfg)
        text = format_training_log(log)
        lines = text.strip().split("\n")
        assert len(lines) == 3
        assert lines[0].startswith("epoch 0 ")
