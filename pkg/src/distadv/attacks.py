"""Attack algorithms: FGSM, Rand+FGSM, PGD, MI-FGSM, Momentum PGD, and the
two distributional attacks (DAA-BLOB, DAA-DGF) with their round/permutation/
minibatch scheduler and the random-restart evaluation wrapper.

Conventions shared by every attack:
  * the l-inf budget `bound` is in pixel units of the data range;
  * random starts draw per-sample noise from streams keyed by
    (seed, "noise", row index), so results do not depend on how samples are
    grouped into minibatches;
  * untargeted attacks ascend the loss of the true label, targeted attacks
    descend the loss of the target label passed in place of the true one;
  * every public attack output satisfies the perturbation bound and pixel
    range (an always-on audit raises if an implementation bug ever breaks
    that).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import InteractionConfig, blob_interaction, dgf_interaction
from .model import (
    Classifier,
    LossKind,
    forward,
    loss_and_input_gradient,
    loss_per_sample,
)
from .numerics import clip_projection, derive_seed, make_rng, sign, uniform_noise

PERTURBATION_SLACK = 1e-12


class PerturbationAuditError(AssertionError):
    """An attack produced a sample outside its own constraint set."""


@dataclass(frozen=True)
class AttackConfig:
    """Every knob of the attack family.

    step_size is the per-iteration step (pixel units), bound the final l-inf
    budget.  total_iters must be divisible by rounds; minibatch only matters
    for the distributional attacks.  momentum_decay only matters for
    MI-FGSM / Momentum PGD.
    """

    step_size: float = 0.01
    bound: float = 0.3
    total_iters: int = 40
    rounds: int = 1
    minibatch: int = 200
    interaction: InteractionConfig = field(default_factory=InteractionConfig)
    loss: LossKind = field(default_factory=LossKind)
    momentum_decay: float = 1.0
    random_start: bool = False
    restarts: int = 1
    targeted: bool = False
    pixel_range: tuple[float, float] = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.step_size) and self.step_size > 0):
            raise ValueError(f"step_size must be finite and > 0, got {self.step_size}")
        if not (np.isfinite(self.bound) and self.bound >= 0):
            raise ValueError(f"bound must be finite and >= 0, got {self.bound}")
        if self.total_iters < 1:
            raise ValueError("total_iters must be >= 1")
        if self.rounds < 1 or self.total_iters % self.rounds != 0:
            raise ValueError(
                f"rounds ({self.rounds}) must divide total_iters ({self.total_iters})"
            )
        if self.minibatch < 1:
            raise ValueError("minibatch must be >= 1")
        if not 0.0 <= self.momentum_decay <= 1.0:
            raise ValueError("momentum_decay must lie in [0, 1]")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        lo, hi = self.pixel_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"invalid pixel range [{lo}, {hi}]")
        # A multi-step attack should not overshoot the box in one move; a
        # zero budget is degenerate (projection pins the iterate) and exempt.
        if self.total_iters > 1 and self.bound > 0 and self.step_size > self.bound:
            raise ValueError(
                f"step_size {self.step_size} exceeds bound {self.bound} "
                "for a multi-step attack"
            )


@dataclass
class ParticleBatch:
    """One minibatch of adversarial iterates with their immutable originals."""

    current: np.ndarray
    originals: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if self.current.shape != self.originals.shape:
            raise ValueError("current and originals must have the same shape")
        if len(self.labels) != self.current.shape[0]:
            raise ValueError("labels length must match the particle count")


@dataclass
class AttackResult:
    adversarial: np.ndarray
    success: np.ndarray  # bool per sample
    final_losses: np.ndarray
    loss_trace: np.ndarray  # mean loss at each gradient evaluation


@dataclass
class RestartReport:
    """Bookkeeping of a multi-restart attack.

    adversarial holds, per sample, the first restart's output that fooled
    the model (the restart-0 output if none did).  correct_matrix[r, i]
    records whether sample i was still classified correctly after restart r.
    """

    adversarial: np.ndarray
    success: np.ndarray
    per_restart_accuracy: list[float]
    worst_case_accuracy: float
    correct_matrix: np.ndarray
    loss_traces: list[np.ndarray]


def audit_perturbation(
    adv: np.ndarray, originals: np.ndarray, bound: float, lo: float, hi: float
) -> None:
    if adv.size == 0:
        return
    worst = float(np.max(np.abs(adv - originals)))
    if worst > bound + PERTURBATION_SLACK:
        raise PerturbationAuditError(
            f"perturbation {worst} exceeds bound {bound} + {PERTURBATION_SLACK}"
        )
    if float(adv.min()) < lo or float(adv.max()) > hi:
        raise PerturbationAuditError(
            f"values [{adv.min()}, {adv.max()}] escape pixel range [{lo}, {hi}]"
        )


def _loss_and_grad(classifier, x, labels, cfg: AttackConfig):
    losses, grad = loss_and_input_gradient(classifier, x, labels, cfg.loss)
    if cfg.targeted:
        grad = -grad
    return losses, grad


def _sample_noise_seed(cfg_seed: int, row: np.ndarray) -> int:
    return derive_seed(cfg_seed, "noise", hashlib.sha256(row.tobytes()).hexdigest())


def _initial_iterate(originals: np.ndarray, cfg: AttackConfig) -> np.ndarray:
    """Starting point: the originals, or a uniform point of the budget box.

    Noise streams are keyed by the sample's content, not its position, so a
    sample's random start survives any reordering or re-batching of the
    dataset (identical rows share a start by construction).
    """
    if not cfg.random_start:
        return originals.copy()
    out = originals.copy()
    for row in range(originals.shape[0]):
        out[row] += uniform_noise(
            originals.shape[1:],
            cfg.bound,
            _sample_noise_seed(cfg.seed, originals[row]),
        )
    lo, hi = cfg.pixel_range
    return clip_projection(out, originals, cfg.bound, lo, hi)


def _finish(classifier, adv, labels, cfg: AttackConfig, trace) -> AttackResult:
    logits = forward(classifier, adv)
    preds = np.argmax(logits, axis=1)
    final_losses = loss_per_sample(logits, labels, cfg.loss)
    success = preds == labels if cfg.targeted else preds != labels
    return AttackResult(
        adversarial=adv,
        success=success,
        final_losses=final_losses,
        loss_trace=np.asarray(trace, dtype=np.float64),
    )


def _projected_sign_ascent(grad_fn, originals, x0, cfg: AttackConfig):
    """L iterations of x <- project(x + step * sign(grad)).

    grad_fn maps the current iterate to (per-sample losses, gradient); the
    driver is shared by PGD and reused directly by tests with surrogate
    gradients.
    """
    lo, hi = cfg.pixel_range
    x = x0
    trace = []
    for _ in range(cfg.total_iters):
        losses, g = grad_fn(x)
        trace.append(float(np.mean(losses)))
        x = clip_projection(x + cfg.step_size * sign(g), originals, cfg.bound, lo, hi)
        audit_perturbation(x, originals, cfg.bound, lo, hi)
    return x, trace


def fgsm(classifier: Classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    """Single step of size `bound` along the gradient sign, range-clipped."""
    images = np.asarray(images, dtype=np.float64)
    lo, hi = cfg.pixel_range
    losses, g = _loss_and_grad(classifier, images, labels, cfg)
    adv = np.clip(images + cfg.bound * sign(g), lo, hi)
    audit_perturbation(adv, images, cfg.bound, lo, hi)
    return _finish(classifier, adv, labels, cfg, [float(np.mean(losses))])


def rand_fgsm(classifier: Classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    """Uniform random start in the budget box, one FGSM step of size
    step_size, then projection back to the box and range."""
    images = np.asarray(images, dtype=np.float64)
    lo, hi = cfg.pixel_range
    start = _initial_iterate(images, replace(cfg, random_start=True))
    losses, g = _loss_and_grad(classifier, start, labels, cfg)
    adv = clip_projection(
        start + cfg.step_size * sign(g), images, cfg.bound, lo, hi
    )
    audit_perturbation(adv, images, cfg.bound, lo, hi)
    return _finish(classifier, adv, labels, cfg, [float(np.mean(losses))])


def pgd(classifier: Classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    """Iterated FGSM with projection into the budget box every step."""
    images = np.asarray(images, dtype=np.float64)
    x0 = _initial_iterate(images, cfg)
    adv, trace = _projected_sign_ascent(
        lambda x: _loss_and_grad(classifier, x, labels, cfg), images, x0, cfg
    )
    return _finish(classifier, adv, labels, cfg, trace)


def _momentum_direction(g: np.ndarray, g_acc: np.ndarray, decay: float) -> np.ndarray:
    """Accumulate the l1-normalized gradient; zero-gradient rows contribute
    their raw (zero) gradient unnormalized."""
    n1 = np.abs(g).sum(axis=1, keepdims=True)
    normed = g / np.where(n1 > 0.0, n1, 1.0)
    return decay * g_acc + normed


def mi_fgsm(classifier: Classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    """Momentum iterative FGSM; iterates run unprojected, the final output
    is projected into the budget box and pixel range."""
    images = np.asarray(images, dtype=np.float64)
    lo, hi = cfg.pixel_range
    x = _initial_iterate(images, cfg)
    g_acc = np.zeros_like(x)
    trace = []
    for _ in range(cfg.total_iters):
        losses, g = _loss_and_grad(classifier, x, labels, cfg)
        trace.append(float(np.mean(losses)))
        g_acc = _momentum_direction(g, g_acc, cfg.momentum_decay)
        x = x + cfg.step_size * sign(g_acc)
    adv = clip_projection(x, images, cfg.bound, lo, hi)
    audit_perturbation(adv, images, cfg.bound, lo, hi)
    return _finish(classifier, adv, labels, cfg, trace)


def momentum_pgd(classifier: Classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    """MI-FGSM direction with the PGD per-iteration projection, so it can
    run for more steps than bound/step_size without leaving the box."""
    images = np.asarray(images, dtype=np.float64)
    lo, hi = cfg.pixel_range
    x = _initial_iterate(images, cfg)
    g_acc = np.zeros_like(x)
    trace = []
    for _ in range(cfg.total_iters):
        losses, g = _loss_and_grad(classifier, x, labels, cfg)
        trace.append(float(np.mean(losses)))
        g_acc = _momentum_direction(g, g_acc, cfg.momentum_decay)
        x = clip_projection(
            x + cfg.step_size * sign(g_acc), images, cfg.bound, lo, hi
        )
        audit_perturbation(x, images, cfg.bound, lo, hi)
    return _finish(classifier, x, labels, cfg, trace)


# ---------------------------------------------------------------------------
# Distributional attacks


def _daa_direction(classifier, current, labels, cfg: AttackConfig, method: str):
    """Per-particle ascent direction: the loss gradient plus the method's
    interaction term (skipped entirely when its weight is zero, which makes
    the reduction to PGD exact)."""
    losses, g = _loss_and_grad(classifier, current, labels, cfg)
    kcfg = cfg.interaction
    if method == "blob":
        direction = g + blob_interaction(current, g, kcfg) if kcfg.c != 0 else g
    elif method == "dgf":
        direction = (
            g - dgf_interaction(current, kcfg) if kcfg.dgf_scale != 0 else g
        )
    else:
        raise ValueError(f"unknown DAA method {method!r}")
    return losses, direction


def _daa_minibatch_step(classifier, pb: ParticleBatch, cfg: AttackConfig, method: str):
    if pb.current.shape[0] == 0:
        raise ValueError("empty particle batch")
    lo, hi = cfg.pixel_range
    losses, direction = _daa_direction(classifier, pb.current, pb.labels, cfg, method)
    new = clip_projection(
        pb.current + cfg.step_size * sign(direction), pb.originals, cfg.bound, lo, hi
    )
    audit_perturbation(new, pb.originals, cfg.bound, lo, hi)
    return new, losses


def daa_blob_step(pb: ParticleBatch, classifier: Classifier, cfg: AttackConfig) -> ParticleBatch:
    """One projected update of a particle minibatch with the blob coupling."""
    new, _ = _daa_minibatch_step(classifier, pb, cfg, "blob")
    return replace(pb, current=new)


def daa_dgf_step(pb: ParticleBatch, classifier: Classifier, cfg: AttackConfig) -> ParticleBatch:
    """One projected update with the discrete-gradient-flow coupling."""
    new, _ = _daa_minibatch_step(classifier, pb, cfg, "dgf")
    return replace(pb, current=new)


def round_permutation(seed: int, round_index: int, n: int) -> np.ndarray:
    """The sample permutation used at the start of a given round."""
    return make_rng(seed, "perm", round_index).permutation(n)


def run_daa(
    classifier: Classifier,
    images,
    labels,
    cfg: AttackConfig,
    method: str = "blob",
    schedule_hook=None,
) -> AttackResult:
    """Full distributional attack schedule.

    Optional random start; then `rounds` rounds, each of which permutes the
    samples once and runs total_iters/rounds sweeps; each sweep updates the
    minibatches sequentially.  When minibatch does not divide the sample
    count the last minibatch of a sweep holds the remainder and computes its
    own bandwidth.  The adversarial tensor comes back in dataset order.

    schedule_hook, if given, is called as (round, sweep, indices) for every
    minibatch update; it exists for schedule verification.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    n = images.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    m = min(cfg.minibatch, n)
    sweeps = cfg.total_iters // cfg.rounds
    x = _initial_iterate(images, cfg)
    trace = np.zeros(cfg.total_iters)
    for r in range(cfg.rounds):
        perm = round_permutation(cfg.seed, r, n)
        slices = [perm[s : s + m] for s in range(0, n, m)]
        for k in range(sweeps):
            step_index = r * sweeps + k
            loss_sum = 0.0
            for idx in slices:
                pb = ParticleBatch(x[idx], images[idx], labels[idx], idx)
                new, losses = _daa_minibatch_step(classifier, pb, cfg, method)
                x[idx] = new
                loss_sum += float(losses.sum())
                if schedule_hook is not None:
                    schedule_hook(r, k, idx.copy())
            trace[step_index] = loss_sum / n
    return _finish(classifier, x, labels, cfg, trace)


def daa_blob(classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    return run_daa(classifier, images, labels, cfg, method="blob")


def daa_dgf(classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    return run_daa(classifier, images, labels, cfg, method="dgf")


ATTACKS = {
    "fgsm": fgsm,
    "rand_fgsm": rand_fgsm,
    "pgd": pgd,
    "mi_fgsm": mi_fgsm,
    "momentum_pgd": momentum_pgd,
    "daa_blob": daa_blob,
    "daa_dgf": daa_dgf,
}


def run_attack(name: str, classifier, images, labels, cfg: AttackConfig) -> AttackResult:
    try:
        fn = ATTACKS[name]
    except KeyError:
        raise ValueError(
            f"unknown attack {name!r}; choose from {sorted(ATTACKS)}"
        ) from None
    return fn(classifier, images, labels, cfg)


def worst_case_over_restarts(
    classifier: Classifier, images, labels, cfg: AttackConfig, attack: str = "pgd"
) -> RestartReport:
    """Run an attack from `restarts` independent random starts.

    A sample counts as robust only if it is classified correctly under every
    restart; worst-case accuracy is the fraction of such samples.  Restart r
    runs under the seed derived from (master seed, "restart", r), so each
    restart is reproducible on its own.
    """
    if cfg.restarts > 1 and not cfg.random_start:
        raise ValueError("multiple restarts need random_start=True")
    labels = np.asarray(labels)
    n = len(labels)
    robust = np.ones(n, dtype=bool)
    succeeded = np.zeros(n, dtype=bool)
    adv_out = None
    accs: list[float] = []
    traces: list[np.ndarray] = []
    correct_rows = []
    for r in range(cfg.restarts):
        sub = replace(cfg, seed=derive_seed(cfg.seed, "restart", r), restarts=1)
        res = run_attack(attack, classifier, images, labels, sub)
        correct = ~res.success
        robust &= correct
        accs.append(float(np.mean(correct)))
        traces.append(res.loss_trace)
        correct_rows.append(correct)
        if adv_out is None:
            adv_out = res.adversarial.copy()
        else:
            newly = res.success & ~succeeded
            adv_out[newly] = res.adversarial[newly]
        succeeded |= res.success
    return RestartReport(
        adversarial=adv_out,
        success=succeeded,
        per_restart_accuracy=accs,
        worst_case_accuracy=float(np.mean(robust)),
        correct_matrix=np.asarray(correct_rows),
        loss_traces=traces,
    )
