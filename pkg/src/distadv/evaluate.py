"""Experiment orchestration: accuracy-versus-budget curves over attack
sweeps, the paired t-test used to compare attacks across seeds, and report
emission to CSV/JSON.

Reports are canonical: floats are rendered with 6 significant digits, keys
are sorted, and re-emitting a parsed JSON report reproduces it byte for
byte.  Wall-time fields are informational and excluded from reproducibility
comparisons.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .attacks import ATTACKS, AttackConfig, worst_case_over_restarts
from .data import Dataset
from .model import Classifier, load_checkpoint, predict

LOSS_NAMES = {"cross_entropy": "ce", "cw_inf": "cw"}

CSV_COLUMNS = [
    "attack",
    "loss",
    "alpha",
    "steps",
    "restarts",
    "n",
    "clean_correct",
    "clean_accuracy",
    "adv_correct",
    "adversarial_accuracy",
    "worst_correct",
    "worst_case_accuracy",
    "wall_time",
]


class DegenerateTTestError(ValueError):
    """Raised when the paired differences have zero variance."""


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float  # two-sided
    n: int


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on the differences a - b.

    The p-value comes from the t distribution with n-1 degrees of freedom.
    Zero-variance differences make the statistic undefined and raise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length vectors")
    n = a.size
    if n < 2:
        raise ValueError("need at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise DegenerateTTestError("paired differences have zero variance")
    t = float(np.mean(d) / (sd / np.sqrt(n)))
    p = 2.0 * float(stats.t.sf(abs(t), n - 1))
    return TTestResult(t=t, p=p, n=n)


def one_sided_p(result: TTestResult) -> float:
    """P-value for the one-sided alternative mean(a - b) > 0."""
    return float(stats.t.sf(result.t, result.n - 1))


@dataclass
class ExperimentSpec:
    """One curve experiment: a model, a dataset, an attack, a budget sweep."""

    model: Classifier | str
    dataset: Dataset
    attack: str
    config: AttackConfig
    sweep: list[float]
    out: str | None = None

    def __post_init__(self):
        if self.attack not in ATTACKS:
            raise ValueError(
                f"unknown attack {self.attack!r}; choose from {sorted(ATTACKS)}"
            )
        sweep = [float(a) for a in self.sweep]
        if any(a < 0 for a in sweep):
            raise ValueError("sweep values must be nonnegative")
        if sweep != sorted(sweep):
            raise ValueError("sweep values must be ascending")
        self.sweep = sweep


@dataclass
class AttackReport:
    rows: list[dict] = field(default_factory=list)
    success: list[list[bool]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            per_restart = row.get("per_restart_accuracy", [])
            if per_restart and row["worst_case_accuracy"] > min(per_restart):
                raise ValueError(
                    "worst-case accuracy exceeds a per-restart accuracy"
                )


def config_hash(payload) -> str:
    """Stable hash of any JSON-serializable configuration payload."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def model_hash(c: Classifier) -> str:
    h = hashlib.sha256()
    for l in c.layers:
        h.update(l.activation.encode())
        h.update(l.weights.tobytes())
        h.update(l.bias.tobytes())
    return h.hexdigest()[:16]


def _resolve_model(model) -> Classifier:
    return load_checkpoint(model) if isinstance(model, str) else model


def _config_for_alpha(cfg: AttackConfig, alpha: float) -> AttackConfig:
    # Budgets below the configured step shrink the step to the budget so the
    # sweep stays valid; a zero budget keeps the step (projection pins it).
    step = min(cfg.step_size, alpha) if alpha > 0 else cfg.step_size
    return replace(cfg, bound=alpha, step_size=step)


def summarize_run(
    attack: str,
    cfg: AttackConfig,
    alpha: float,
    n: int,
    clean_correct: int,
    report,
    wall_time: float,
) -> dict:
    """Row of an attack report: accuracies as exact counts plus decimals."""
    adv_acc = report.per_restart_accuracy[0]
    return {
        "attack": attack,
        "loss": LOSS_NAMES[cfg.loss.tag],
        "alpha": alpha,
        "steps": cfg.total_iters,
        "restarts": cfg.restarts,
        "n": n,
        "clean_correct": clean_correct,
        "clean_accuracy": clean_correct / n,
        "adv_correct": int(round(adv_acc * n)),
        "adversarial_accuracy": adv_acc,
        "worst_correct": int(round(report.worst_case_accuracy * n)),
        "worst_case_accuracy": report.worst_case_accuracy,
        "per_restart_accuracy": list(report.per_restart_accuracy),
        "wall_time": wall_time,
    }


def evaluate_curve(spec: ExperimentSpec, timer=time.perf_counter) -> AttackReport:
    """Run the attack at every budget in the sweep and tabulate accuracies.

    Each row records the clean accuracy, the single-run adversarial accuracy
    (restart 0), and the worst-case accuracy over all configured restarts,
    as exact correct-counts alongside the decimals.
    """
    classifier = _resolve_model(spec.model)
    ds = spec.dataset
    n = len(ds)
    clean_correct = int(np.sum(predict(classifier, ds.images) == ds.labels))
    rows = []
    success = []
    base_cfg = replace(spec.config, pixel_range=ds.pixel_range)
    for alpha in spec.sweep:
        cfg = _config_for_alpha(base_cfg, alpha)
        started = timer()
        report = worst_case_over_restarts(
            classifier, ds.images, ds.labels, cfg, attack=spec.attack
        )
        elapsed = timer() - started
        rows.append(
            summarize_run(spec.attack, cfg, alpha, n, clean_correct, report, elapsed)
        )
        success.append([bool(s) for s in report.success])
    metadata = {
        "attack": spec.attack,
        "dataset": ds.name,
        "seed": spec.config.seed,
        "config_hash": config_hash(
            {
                "attack": spec.attack,
                "sweep": spec.sweep,
                "config": _config_payload(spec.config),
            }
        ),
        "model_hash": model_hash(classifier),
    }
    return AttackReport(rows=rows, success=success, metadata=metadata)


def combine_reports(reports: list[AttackReport]) -> AttackReport:
    """Concatenate rows of several reports (e.g. one per attack or loss)."""
    if not reports:
        raise ValueError("nothing to combine")
    rows = [row for r in reports for row in r.rows]
    success = [s for r in reports for s in r.success]
    metadata = dict(reports[0].metadata)
    metadata["attack"] = ",".join(
        sorted({r.metadata.get("attack", "?") for r in reports})
    )
    return AttackReport(rows=rows, success=success, metadata=metadata)


def _config_payload(cfg: AttackConfig) -> dict:
    return {
        "step_size": cfg.step_size,
        "bound": cfg.bound,
        "total_iters": cfg.total_iters,
        "rounds": cfg.rounds,
        "minibatch": cfg.minibatch,
        "c": cfg.interaction.c,
        "lam": cfg.interaction.lam,
        "dgf_scale": cfg.interaction.dgf_scale,
        "loss": cfg.loss.tag,
        "kappa": cfg.loss.kappa,
        "momentum_decay": cfg.momentum_decay,
        "random_start": cfg.random_start,
        "restarts": cfg.restarts,
        "targeted": cfg.targeted,
        "pixel_range": list(cfg.pixel_range),
        "seed": cfg.seed,
    }


def _round6(x: float) -> float:
    return float(f"{float(x):.6g}")


def _rounded(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return _round6(value)
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    return value


def report_json(report: AttackReport) -> str:
    payload = {
        "metadata": _rounded(report.metadata),
        "rows": _rounded(report.rows),
        "success": report.success,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def report_csv(report: AttackReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_csv_cell(row[col]) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def parse_report_json(text: str) -> AttackReport:
    payload = json.loads(text)
    return AttackReport(
        rows=payload["rows"],
        success=payload["success"],
        metadata=payload["metadata"],
    )


def emit_report(report: AttackReport, fmt: str, path) -> None:
    """Write the report as 'csv' or 'json' with 6-significant-digit numbers."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)


def strip_wall_time(report_payload: dict) -> dict:
    """Copy of a parsed JSON report with wall-time fields nulled, for
    byte-comparison of reruns."""
    clone = json.loads(json.dumps(report_payload))
    for row in clone.get("rows", []):
        row.pop("wall_time", None)
    return clone
