"""Adversarial-robustness toolkit: distributionally adversarial attacks
(DAA-BLOB, DAA-DGF), their first-order baselines (FGSM, Rand+FGSM, PGD,
MI-FGSM, Momentum PGD), PGD adversarial training, and an evaluation harness
with random restarts, accuracy curves, and paired t-tests.
"""

from .attacks import (
    ATTACKS,
    AttackConfig,
    AttackResult,
    ParticleBatch,
    RestartReport,
    daa_blob,
    daa_blob_step,
    daa_dgf,
    daa_dgf_step,
    fgsm,
    mi_fgsm,
    momentum_pgd,
    pgd,
    rand_fgsm,
    run_attack,
    run_daa,
    worst_case_over_restarts,
)
from .data import Dataset, augmented_digits, load_idx_pair, synthetic_gaussians
from .evaluate import (
    AttackReport,
    ExperimentSpec,
    TTestResult,
    evaluate_curve,
    emit_report,
    paired_t_test,
)
from .kernel import (
    InteractionConfig,
    KernelMatrix,
    blob_interaction,
    dgf_interaction,
    median_bandwidth,
    rbf_kernel,
)
from .model import (
    CROSS_ENTROPY,
    CW_INF,
    Classifier,
    DenseLayer,
    LossKind,
    forward,
    input_gradient,
    load_checkpoint,
    loss_per_sample,
    parameter_gradient,
    predict,
    random_classifier,
    save_checkpoint,
)
from .numerics import (
    clip_projection,
    finite_difference_gradient,
    median_pairwise_distance,
    pairwise_sq_distances,
    sign,
    uniform_noise,
)
from .training import TrainConfig, train, train_pgd_adversarial

__version__ = "0.1.0"
