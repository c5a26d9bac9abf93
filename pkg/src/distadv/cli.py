"""Command-line surface: train / attack / curve / compare / report.

Every command reads a declarative JSON config file; a handful of flags
(--seed, --attack, --alpha, --steps, --restarts, --loss, --out) override the
corresponding config values.  Identical config plus seed reproduces outputs
byte for byte (wall-time fields aside).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from .attacks import ATTACKS, AttackConfig, worst_case_over_restarts
from .data import Dataset, augmented_digits, load_idx_pair, synthetic_gaussians
from .evaluate import (
    AttackReport,
    ExperimentSpec,
    combine_reports,
    config_hash,
    emit_report,
    evaluate_curve,
    model_hash,
    one_sided_p,
    paired_t_test,
    parse_report_json,
    summarize_run,
)
from .kernel import InteractionConfig
from .model import LossKind, load_checkpoint, predict, random_classifier, save_checkpoint
from .training import TrainConfig, format_training_log, train, train_pgd_adversarial

LOSS_FLAGS = {"ce": "cross_entropy", "cw": "cw_inf"}


def _load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _apply_overrides(config: dict, args) -> dict:
    config = json.loads(json.dumps(config))  # deep copy
    if args.seed is not None:
        config["seed"] = args.seed
    attack = config.setdefault("attack", {})
    if getattr(args, "attack", None):
        attack["name"] = args.attack
    if getattr(args, "alpha", None) is not None:
        attack["alpha"] = args.alpha
    if getattr(args, "steps", None) is not None:
        attack["steps"] = args.steps
    if getattr(args, "restarts", None) is not None:
        attack["restarts"] = args.restarts
    if getattr(args, "loss", None):
        attack["loss"] = args.loss
    if args.out is not None:
        config["out"] = args.out
    return config


def _build_dataset(spec: dict, default_split: str = "test") -> Dataset:
    kind = spec.get("kind", "synthetic")
    if kind == "idx":
        ds = load_idx_pair(spec["images"], spec["labels"])
        return Dataset(
            ds.images,
            ds.labels,
            name=spec.get("name", "idx"),
            pixel_range=tuple(spec.get("pixel_range", (0.0, 1.0))),
        )
    if kind == "synthetic":
        return synthetic_gaussians(
            classes=spec.get("classes", 4),
            dim=spec.get("dim", 16),
            per_class=spec.get("per_class", 50),
            separation=spec.get("separation", 0.8),
            seed=spec.get("seed", 0),
            spread=spec.get("spread", 0.1),
        )
    if kind == "digits":
        train_ds, test_ds = augmented_digits(
            n_train=spec.get("train", 2000),
            n_test=spec.get("test", 500),
            seed=spec.get("seed", 0),
        )
        split = spec.get("use", default_split)
        if split not in ("train", "test"):
            raise ValueError(f"digits 'use' must be train or test, got {split!r}")
        return train_ds if split == "train" else test_ds
    raise ValueError(f"unknown dataset kind {kind!r}")


def _attack_config(config: dict) -> tuple[str, AttackConfig]:
    a = config.get("attack", {})
    name = a.get("name", "pgd")
    if name not in ATTACKS:
        raise ValueError(f"unknown attack {name!r}; choose from {sorted(ATTACKS)}")
    loss_tag = LOSS_FLAGS.get(a.get("loss", "ce"), a.get("loss", "cross_entropy"))
    cfg = AttackConfig(
        step_size=a.get("step_size", 0.01),
        bound=a.get("alpha", 0.3),
        total_iters=a.get("steps", 40),
        rounds=a.get("rounds", 1),
        minibatch=a.get("minibatch", 200),
        interaction=InteractionConfig(
            c=a.get("c", 1.1),
            lam=a.get("lam", 1.0),
            dgf_scale=a.get("dgf_scale", 1.0),
        ),
        loss=LossKind(loss_tag, a.get("kappa", 0.0)),
        momentum_decay=a.get("momentum_decay", 1.0),
        random_start=a.get("random_start", True),
        restarts=a.get("restarts", 1),
        targeted=a.get("targeted", False),
        pixel_range=tuple(a.get("pixel_range", (0.0, 1.0))),
        seed=config.get("seed", 0),
    )
    return name, cfg


def _require_out(config: dict) -> str:
    out = config.get("out")
    if not out:
        raise ValueError("an output path is required (config 'out' or --out)")
    return out


def cmd_train(config: dict) -> int:
    ds = _build_dataset(config["dataset"], default_split="train")
    t = config.get("train", {})
    hidden = config.get("model", {}).get("hidden", [256, 128])
    classes = int(ds.labels.max()) + 1
    classifier = random_classifier(
        [ds.images.shape[1], *hidden, classes], seed=config.get("seed", 0)
    )
    adversarial = t.get("adversarial", False)
    inner = None
    if adversarial:
        _, inner = _attack_config(config)
        inner = replace(inner, pixel_range=ds.pixel_range)
        inner = replace(
            inner,
            total_iters=t.get("inner_steps", 7),
            rounds=1,
            step_size=t.get("inner_step_size", inner.step_size),
            random_start=True,
        )
    cfg = TrainConfig(
        epochs=t.get("epochs", 10),
        batch_size=t.get("batch_size", 100),
        learning_rate=t.get("learning_rate", 0.1),
        lr_decay=t.get("lr_decay", 1.0),
        lr_decay_every=t.get("lr_decay_every", 0),
        optimizer=t.get("optimizer", "sgd"),
        momentum=t.get("momentum", 0.9),
        adversarial=adversarial,
        attack=inner,
        seed=config.get("seed", 0),
    )
    run = train_pgd_adversarial if adversarial else train
    trained, log = run(classifier, ds.images, ds.labels, cfg)
    out = _require_out(config)
    save_checkpoint(trained, out)
    with open(out + ".log", "w") as fh:
        fh.write(format_training_log(log))
    if log:
        last = log[-1]
        print(
            f"trained {cfg.epochs} epochs on {ds.name} "
            f"(loss {last['train_loss']:.4f}, accuracy {last['train_accuracy']:.4f}) -> {out}"
        )
    else:
        print(f"saved untrained model -> {out}")
    return 0


def cmd_attack(config: dict) -> int:
    ds = _build_dataset(config["dataset"])
    classifier = load_checkpoint(config["model"]["checkpoint"])
    name, cfg = _attack_config(config)
    cfg = replace(cfg, pixel_range=ds.pixel_range)
    n = len(ds)
    clean_correct = int(np.sum(predict(classifier, ds.images) == ds.labels))
    started = time.perf_counter()
    rr = worst_case_over_restarts(classifier, ds.images, ds.labels, cfg, attack=name)
    elapsed = time.perf_counter() - started
    row = summarize_run(name, cfg, cfg.bound, n, clean_correct, rr, elapsed)
    report = AttackReport(
        rows=[row],
        success=[[bool(s) for s in rr.success]],
        metadata={
            "attack": name,
            "dataset": ds.name,
            "seed": cfg.seed,
            "config_hash": config_hash({"attack": name, "config": config.get("attack", {}), "seed": cfg.seed}),
            "model_hash": model_hash(classifier),
        },
    )
    out = _require_out(config)
    emit_report(report, "json", out + ".json")
    np.save(out + "_adv.npy", rr.adversarial)
    print(
        f"{name} on {ds.name}: clean {row['clean_accuracy']:.4f}, "
        f"adversarial {row['adversarial_accuracy']:.4f}, "
        f"worst-case {row['worst_case_accuracy']:.4f} "
        f"({cfg.restarts} restart(s)) -> {out}.json"
    )
    return 0


def cmd_curve(config: dict) -> int:
    ds = _build_dataset(config["dataset"])
    classifier = load_checkpoint(config["model"]["checkpoint"])
    sweep = config.get("sweep")
    if not sweep:
        raise ValueError("curve needs a nonempty 'sweep' list of budgets")
    name, cfg = _attack_config(config)
    attacks = config.get("attacks", [name])
    losses = config.get("losses", [None])
    reports = []
    for attack in attacks:
        for loss in losses:
            run_cfg = cfg
            if loss is not None:
                tag = LOSS_FLAGS.get(loss, loss)
                run_cfg = replace(cfg, loss=LossKind(tag, cfg.loss.kappa))
            spec = ExperimentSpec(
                model=classifier,
                dataset=ds,
                attack=attack,
                config=run_cfg,
                sweep=sweep,
            )
            reports.append(evaluate_curve(spec))
    report = combine_reports(reports) if len(reports) > 1 else reports[0]
    out = _require_out(config)
    emit_report(report, "json", out + ".json")
    emit_report(report, "csv", out + ".csv")
    for row in report.rows:
        print(
            f"{row['attack']}/{row['loss']} alpha={row['alpha']:g}: "
            f"adversarial {row['adversarial_accuracy']:.4f}, "
            f"worst-case {row['worst_case_accuracy']:.4f}"
        )
    print(f"curve -> {out}.json, {out}.csv")
    return 0


def cmd_compare(config: dict) -> int:
    """Run two attacks across seeds and paired-t-test the accuracies.

    The sampling unit is the per-seed adversarial accuracy pair: each seed
    runs both attacks under the same derived seed.
    """
    ds = _build_dataset(config["dataset"])
    classifier = load_checkpoint(config["model"]["checkpoint"])
    comp = config.get("compare", {})
    pair = comp.get("attacks", ["pgd", "daa_blob"])
    if len(pair) != 2:
        raise ValueError("compare needs exactly two attack names")
    seeds = comp.get("seeds", [0, 1, 2, 3, 4])
    _, cfg = _attack_config(config)
    cfg = replace(cfg, pixel_range=ds.pixel_range)
    accs = {a: [] for a in pair}
    for seed in seeds:
        for attack in pair:
            run_cfg = replace(cfg, seed=int(seed))
            rr = worst_case_over_restarts(
                classifier, ds.images, ds.labels, run_cfg, attack=attack
            )
            accs[attack].append(rr.worst_case_accuracy)
    a, b = pair
    result = paired_t_test(accs[a], accs[b])
    payload = {
        "attacks": pair,
        "seeds": [int(s) for s in seeds],
        "accuracies": accs,
        "mean_accuracy": {k: float(np.mean(v)) for k, v in accs.items()},
        "t": result.t,
        "p_two_sided": result.p,
        "p_one_sided_first_higher": one_sided_p(result),
        "n": result.n,
        "sampling_unit": "per-seed worst-case accuracy pairs",
    }
    out = _require_out(config)
    with open(out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=float)
        fh.write("\n")
    print(
        f"{a} mean {payload['mean_accuracy'][a]:.4f} vs {b} mean "
        f"{payload['mean_accuracy'][b]:.4f}; t={result.t:.3f}, "
        f"two-sided p={result.p:.4g} (n={result.n}) -> {out}"
    )
    return 0


def cmd_report(args) -> int:
    with open(args.input) as fh:
        report = parse_report_json(fh.read())
    emit_report(report, args.format, args.out)
    print(f"rewrote {args.input} as {args.format} -> {args.out}")
    return 0


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="declarative JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--attack", default=None, choices=sorted(ATTACKS))
    p.add_argument("--alpha", type=float, default=None, help="override the l-inf budget")
    p.add_argument("--steps", type=int, default=None, help="override the iteration count")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--loss", default=None, choices=["ce", "cw"])
    p.add_argument("--out", default=None, help="override the output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distadv",
        description="Distributional adversarial attacks, baselines, and PGD adversarial training",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "attack", "curve", "compare"):
        _add_common_flags(sub.add_parser(name))
    rep = sub.add_parser("report", help="re-emit a JSON report as csv or json")
    rep.add_argument("--input", required=True, help="existing JSON report")
    rep.add_argument("--format", required=True, choices=["csv", "json"])
    rep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args)
    config = _apply_overrides(_load_config(args.config), args)
    handlers = {
        "train": cmd_train,
        "attack": cmd_attack,
        "curve": cmd_curve,
        "compare": cmd_compare,
    }
    return handlers[args.command](config)


if __name__ == "__main__":
    sys.exit(main())
