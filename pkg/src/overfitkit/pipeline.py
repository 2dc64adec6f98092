"""Desk-scale teacher-student training with a supervised overfitting stage.

The harness realizes the two-stage recipe end to end on synthetic data:

1. standard stage: a trainable student learns to reproduce a frozen random
   teacher's features on normal samples;
2. overfitting stage: training continues at exactly one tenth of the
   learning rate while the dual controller watches the overfitting gauge
   (arq) and separability (radi), freezing layers bottom-up when control
   is violated.

Checkpoints land once per epoch in a RunLog; pseudo-anomalies (normal
samples plus Gaussian noise) supply the anomalous class for in-training
radi, and a held-out shifted-blob anomaly set supplies the honest final
evaluation. Everything is seeded through one master seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._validation import as_float_matrix, check_positive
from .controller import (
    AllLayersFrozenError,
    ArqInterval,
    ControllerState,
    Verdict,
    dual_control_step,
    freeze_next_layer,
)
from .metrics import PredictionPair, ScoreSet, auroc, compute_arq, radi_empirical
from .seeding import derive_seed
from .toynet import (
    NoiseSpec,
    ToyNetwork,
    anomaly_map,
    backward_and_step,
    forward,
    inject_gaussian_noise,
    random_network,
)

__all__ = [
    "FEATURE_DIM",
    "RUN_RECORD_KEYS",
    "TrainConfig",
    "SyntheticDataset",
    "RunLog",
    "make_synthetic_dataset",
    "make_teacher_student",
    "anomaly_scores",
    "run_standard_stage",
    "run_overfit_stage",
    "run_training",
    "run_inference",
    "percentile_threshold",
    "read_run_log",
    "write_dataset_csv",
    "read_dataset_csv",
]

# Input dimensionality of the synthetic benchmark.
FEATURE_DIM = 8

# Fixed key order for every JSONL run record.
RUN_RECORD_KEYS = (
    "stage",
    "epoch",
    "step",
    "arq",
    "radi",
    "loss",
    "verdict",
    "gradient",
    "frozen_layer",
    "frozen_layers",
)

_BLOB_COUNT = 3
_BLOB_STD = 0.5


@dataclass(frozen=True)
class TrainConfig:
    """Complete recipe for one training run.

    The overfitting stage always runs at learning_rate / 10; arq_theta and
    arq_delta define the target band [theta - delta, theta + delta] for the
    controller, freeze_threshold is the tolerated violation streak, and
    gradient_window the number of checkpoints in the slope estimate.
    """

    standard_epochs: int = 25
    overfit_epochs: int = 15
    learning_rate: float = 0.05
    batch_size: int = 64
    sigma_noise: float = 1.0
    arq_theta: float = 0.5
    arq_delta: float = 0.45
    freeze_threshold: int = 3
    gradient_window: int = 5
    eval_size: int = 512
    threshold_percentile: float = 99.0
    teacher_hidden: int = 24
    student_hidden: int = 5
    score_kind: str = "l1"
    n_train: int = 512
    n_eval: int = 256
    anomaly_shift: float = 3.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.standard_epochs < 1:
            raise ValueError(
                f"standard_epochs must be at least 1, got {self.standard_epochs}"
            )
        if self.overfit_epochs < 1:
            raise ValueError(
                f"overfit_epochs must be at least 1, got {self.overfit_epochs}"
            )
        check_positive(self.learning_rate, "learning_rate")
        check_positive(self.sigma_noise, "sigma_noise")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.eval_size < 1:
            raise ValueError(f"eval_size must be at least 1, got {self.eval_size}")
        if not 0.0 < self.threshold_percentile <= 100.0:
            raise ValueError(
                "threshold_percentile must be in (0, 100], got "
                f"{self.threshold_percentile}"
            )
        if self.teacher_hidden < 1:
            raise ValueError(
                f"teacher_hidden must be at least 1, got {self.teacher_hidden}"
            )
        if self.student_hidden < 1:
            raise ValueError(
                f"student_hidden must be at least 1, got {self.student_hidden}"
            )
        if self.score_kind not in ("l1", "squared"):
            raise ValueError(
                f"score_kind must be 'l1' or 'squared', got {self.score_kind!r}"
            )
        # Delegated range checks.
        self.arq_interval()
        ControllerState(
            freeze_threshold=self.freeze_threshold, window_size=self.gradient_window
        )

    def arq_interval(self) -> ArqInterval:
        return ArqInterval(theta=self.arq_theta, delta=self.arq_delta)


@dataclass(frozen=True)
class SyntheticDataset:
    """Blob-mixture normal data plus direction-shifted anomalies.

    ``labels`` covers the evaluation split: 0 for each normal_eval row
    followed by 1 for each anomaly_eval row.
    """

    normal_train: np.ndarray
    normal_eval: np.ndarray
    anomaly_eval: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        train = as_float_matrix(self.normal_train, "normal_train", min_rows=1)
        eval_ = as_float_matrix(self.normal_eval, "normal_eval", min_rows=1)
        anom = as_float_matrix(self.anomaly_eval, "anomaly_eval", min_rows=1)
        if not (train.shape[1] == eval_.shape[1] == anom.shape[1]):
            raise ValueError("all splits must share one feature width")
        labels = np.asarray(self.labels)
        if labels.shape != (eval_.shape[0] + anom.shape[0],):
            raise ValueError("labels must cover normal_eval then anomaly_eval rows")
        object.__setattr__(self, "normal_train", train)
        object.__setattr__(self, "normal_eval", eval_)
        object.__setattr__(self, "anomaly_eval", anom)
        object.__setattr__(self, "labels", labels.astype(np.int64))


@dataclass
class RunLog:
    """Per-checkpoint records plus controller decisions and final metrics."""

    records: list[dict] = field(default_factory=list)
    decisions: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_jsonl(self, path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as handle:
            for record in self.records:
                ordered = {key: record[key] for key in RUN_RECORD_KEYS}
                handle.write(json.dumps(ordered) + "\n")

    def write_summary(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.summary, indent=2) + "\n", encoding="utf-8"
        )


def read_run_log(path) -> list[dict]:
    """Parse a JSONL run log back into records."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            missing = [k for k in RUN_RECORD_KEYS if k not in record]
            if missing:
                raise ValueError(f"{path}:{lineno}: missing keys: {', '.join(missing)}")
            records.append(record)
    return records


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def make_synthetic_dataset(
    seed: int,
    n_train: int = 512,
    n_eval: int = 256,
    anomaly_shift: float = 3.0,
) -> SyntheticDataset:
    """Sample the blob-mixture benchmark.

    Normal samples come from a fixed mixture of 3 Gaussian blobs in 8
    dimensions; anomalies are the same mixture translated by
    ``anomaly_shift`` along one random unit direction. Fully determined by
    the seed.
    """
    if n_train < 10 or n_eval < 10:
        raise ValueError(
            f"need at least 10 samples per split, got n_train={n_train}, "
            f"n_eval={n_eval}"
        )
    check_positive(anomaly_shift, "anomaly_shift")
    rng = np.random.default_rng(seed)
    centroids = rng.normal(0.0, 2.0, size=(_BLOB_COUNT, FEATURE_DIM))
    direction = rng.normal(0.0, 1.0, size=FEATURE_DIM)
    direction /= np.linalg.norm(direction)

    def draw_blobs(count: int) -> np.ndarray:
        assignment = rng.integers(0, _BLOB_COUNT, size=count)
        return centroids[assignment] + rng.normal(
            0.0, _BLOB_STD, size=(count, FEATURE_DIM)
        )

    normal_train = draw_blobs(n_train)
    normal_eval = draw_blobs(n_eval)
    anomaly_eval = draw_blobs(n_eval) + anomaly_shift * direction
    labels = np.concatenate(
        [np.zeros(n_eval, dtype=np.int64), np.ones(n_eval, dtype=np.int64)]
    )
    return SyntheticDataset(
        normal_train=normal_train,
        normal_eval=normal_eval,
        anomaly_eval=anomaly_eval,
        labels=labels,
    )


def write_dataset_csv(dataset: SyntheticDataset, path) -> None:
    """Dump all splits as `split,label,x0..` rows for external inspection."""
    path = Path(path)
    width = dataset.normal_train.shape[1]
    header = "split,label," + ",".join(f"x{i}" for i in range(width))
    lines = [header]
    for split, label, rows in (
        ("train", 0, dataset.normal_train),
        ("eval", 0, dataset.normal_eval),
        ("eval", 1, dataset.anomaly_eval),
    ):
        for row in rows:
            lines.append(f"{split},{label}," + ",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset_csv(path) -> SyntheticDataset:
    """Rebuild a dataset from ``write_dataset_csv`` output."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("split,label,"):
        raise ValueError(f"{path}:1: missing dataset header")
    buckets: dict[tuple[str, int], list[list[float]]] = {
        ("train", 0): [],
        ("eval", 0): [],
        ("eval", 1): [],
    }
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 3:
            raise ValueError(f"{path}:{lineno}: malformed row")
        key = (parts[0], int(parts[1]))
        if key not in buckets:
            raise ValueError(f"{path}:{lineno}: unknown split/label {key}")
        buckets[key].append([float(v) for v in parts[2:]])
    n_eval = len(buckets[("eval", 0)])
    n_anom = len(buckets[("eval", 1)])
    labels = np.concatenate(
        [np.zeros(n_eval, dtype=np.int64), np.ones(n_anom, dtype=np.int64)]
    )
    return SyntheticDataset(
        normal_train=np.asarray(buckets[("train", 0)]),
        normal_eval=np.asarray(buckets[("eval", 0)]),
        anomaly_eval=np.asarray(buckets[("eval", 1)]),
        labels=labels,
    )


# ---------------------------------------------------------------------------
# Networks and scoring
# ---------------------------------------------------------------------------


def make_teacher_student(
    config: TrainConfig, input_dim: int = FEATURE_DIM
) -> tuple[ToyNetwork, ToyNetwork]:
    """Build the frozen random teacher and the narrower trainable student.

    The teacher ends in a relu so its feature sums stay positive, which the
    overfitting gauge needs for its denominator; the student ends in an
    identity layer so it can approach those targets smoothly.

    The student is deliberately given fewer hidden units than the teacher.
    A full-capacity student would eventually copy the teacher everywhere,
    shrinking the off-distribution discrepancy that the anomaly score is
    built from; the narrow student can only afford to track the teacher on
    the training distribution, so extra training sharpens the on-manifold
    fit while anomalies keep scoring high.
    """
    teacher = random_network(
        (input_dim, config.teacher_hidden, config.teacher_hidden, input_dim),
        ("tanh", "tanh", "relu"),
        derive_seed(config.seed, "teacher"),
        frozen=True,
    )
    student = random_network(
        (input_dim, config.student_hidden, config.student_hidden, input_dim),
        ("tanh", "tanh", "identity"),
        derive_seed(config.seed, "student"),
    )
    return teacher, student


def anomaly_scores(
    teacher: ToyNetwork, student: ToyNetwork, samples, *, kind: str = "l1"
) -> np.ndarray:
    """Per-sample teacher-student discrepancy scores for a batch."""
    batch = as_float_matrix(samples, "samples", min_rows=1)
    t = forward(teacher, batch)
    s = forward(student, batch)
    if kind == "l1":
        return np.mean(np.abs(t - s), axis=1)
    if kind == "squared":
        return np.mean((t - s) ** 2, axis=1)
    raise ValueError(f"unknown score kind {kind!r}")


def _feature_arq(teacher: ToyNetwork, student: ToyNetwork, samples) -> float:
    # Teacher features act as ground truth, student features as prediction.
    t = forward(teacher, samples).ravel()
    s = forward(student, samples).ravel()
    return compute_arq(PredictionPair(predicted=s, ground_truth=t))


def _checkpoint_radi(
    config: TrainConfig,
    teacher: ToyNetwork,
    student: ToyNetwork,
    eval_rows: np.ndarray,
    noise_seed: int,
) -> float:
    pseudo = inject_gaussian_noise(
        eval_rows, NoiseSpec(sigma_noise=config.sigma_noise, seed=noise_seed)
    )
    normal = anomaly_scores(teacher, student, eval_rows, kind=config.score_kind)
    anomalous = anomaly_scores(teacher, student, pseudo, kind=config.score_kind)
    return radi_empirical(ScoreSet(anomaly=anomalous, normal=normal))


def _train_one_epoch(
    config: TrainConfig,
    teacher: ToyNetwork,
    student: ToyNetwork,
    train_rows: np.ndarray,
    learning_rate: float,
    shuffle_seed: int,
) -> float:
    rng = np.random.default_rng(shuffle_seed)
    order = rng.permutation(train_rows.shape[0])
    losses = []
    for start in range(0, train_rows.shape[0], config.batch_size):
        batch = train_rows[order[start : start + config.batch_size]]
        target = forward(teacher, batch)
        losses.append(backward_and_step(student, batch, target, learning_rate))
    return float(np.mean(losses))


# ---------------------------------------------------------------------------
# Training stages
# ---------------------------------------------------------------------------


def run_standard_stage(
    config: TrainConfig,
    teacher: ToyNetwork,
    student: ToyNetwork,
    data: SyntheticDataset,
    *,
    first_step: int = 0,
) -> RunLog:
    """Stage 1: plain reconstruction training, no controller.

    One checkpoint per epoch records the overfitting gauge on the training
    set, pseudo-anomaly separability on the eval set, and the epoch's mean
    loss. Returns a RunLog fragment.
    """
    arq_rows = data.normal_train[: min(config.eval_size, data.normal_train.shape[0])]
    eval_rows = data.normal_eval[: min(config.eval_size, data.normal_eval.shape[0])]
    log = RunLog()
    for epoch in range(config.standard_epochs):
        loss = _train_one_epoch(
            config,
            teacher,
            student,
            data.normal_train,
            config.learning_rate,
            derive_seed(config.seed, "standard", "shuffle", epoch),
        )
        log.records.append(
            {
                "stage": "standard",
                "epoch": epoch,
                "step": first_step + epoch,
                "arq": _feature_arq(teacher, student, arq_rows),
                "radi": _checkpoint_radi(
                    config,
                    teacher,
                    student,
                    eval_rows,
                    derive_seed(config.seed, "standard", "noise", epoch),
                ),
                "loss": loss,
                "verdict": None,
                "gradient": None,
                "frozen_layer": None,
                "frozen_layers": [],
            }
        )
    return log


def run_overfit_stage(
    config: TrainConfig,
    teacher: ToyNetwork,
    student: ToyNetwork,
    data: SyntheticDataset,
    state: ControllerState,
    *,
    first_step: int = 0,
) -> RunLog:
    """Stage 2: controlled overfitting at exactly learning_rate / 10.

    Each checkpoint feeds the controller; an emitted signal freezes the
    lowest unfrozen student layer. A signal arriving with every layer
    frozen ends the stage early, recorded in the fragment summary.
    """
    learning_rate = config.learning_rate / 10.0
    interval = config.arq_interval()
    arq_rows = data.normal_train[: min(config.eval_size, data.normal_train.shape[0])]
    eval_rows = data.normal_eval[: min(config.eval_size, data.normal_eval.shape[0])]
    log = RunLog()
    early_stop = None
    for epoch in range(config.overfit_epochs):
        loss = _train_one_epoch(
            config,
            teacher,
            student,
            data.normal_train,
            learning_rate,
            derive_seed(config.seed, "overfit", "shuffle", epoch),
        )
        step = first_step + epoch
        arq = _feature_arq(teacher, student, arq_rows)
        radi = _checkpoint_radi(
            config,
            teacher,
            student,
            eval_rows,
            derive_seed(config.seed, "overfit", "noise", epoch),
        )
        decision = dual_control_step(state, arq, radi, interval)
        frozen_layer = None
        if decision.verdict is Verdict.EMIT_FREEZE_SIGNAL:
            try:
                frozen_layer = freeze_next_layer(student.layers, state)
            except AllLayersFrozenError:
                early_stop = "layer_exhaustion"
        log.decisions.append(
            {
                "step": step,
                "arq": arq,
                "radi": radi,
                "gradient": decision.gradient_estimate,
                "verdict": decision.verdict.value,
                "frozen_layer": frozen_layer,
            }
        )
        log.records.append(
            {
                "stage": "overfit",
                "epoch": epoch,
                "step": step,
                "arq": arq,
                "radi": radi,
                "loss": loss,
                "verdict": decision.verdict.value,
                "gradient": decision.gradient_estimate,
                "frozen_layer": frozen_layer,
                "frozen_layers": list(state.frozen_layers),
            }
        )
        if early_stop:
            break
    log.summary["early_stop"] = early_stop
    return log


def run_training(config: TrainConfig) -> RunLog:
    """Full run: synthesize data, train both stages, report final metrics.

    The summary includes separability against the held-out true anomalies
    measured at the end of each stage, so the benefit of the controlled
    stage is visible as ``radi_true_final - radi_true_after_standard``.
    """
    data = make_synthetic_dataset(
        derive_seed(config.seed, "dataset"),
        n_train=config.n_train,
        n_eval=config.n_eval,
        anomaly_shift=config.anomaly_shift,
    )
    teacher, student = make_teacher_student(config)

    log = run_standard_stage(config, teacher, student, data)
    radi_true_after_standard = _true_radi(config, teacher, student, data)

    state = ControllerState(
        freeze_threshold=config.freeze_threshold, window_size=config.gradient_window
    )
    overfit_log = run_overfit_stage(
        config, teacher, student, data, state, first_step=len(log.records)
    )
    log.records.extend(overfit_log.records)
    log.decisions.extend(overfit_log.decisions)

    train_scores = anomaly_scores(
        teacher, student, data.normal_train, kind=config.score_kind
    )
    threshold = percentile_threshold(train_scores, config.threshold_percentile)
    radi_true_final = _true_radi(config, teacher, student, data)
    normal_scores = anomaly_scores(
        teacher, student, data.normal_eval, kind=config.score_kind
    )
    anomaly_scores_final = anomaly_scores(
        teacher, student, data.anomaly_eval, kind=config.score_kind
    )
    final_set = ScoreSet(anomaly=anomaly_scores_final, normal=normal_scores)

    last = log.records[-1]
    log.summary = {
        "config": asdict(config),
        "n_checkpoints": len(log.records),
        "frozen_layers": list(state.frozen_layers),
        "signals_emitted": state.signals_emitted,
        "early_stop": overfit_log.summary["early_stop"],
        "threshold": threshold,
        "arq_final": last["arq"],
        "radi_pseudo_final": last["radi"],
        "radi_true_after_standard": radi_true_after_standard,
        "radi_true_final": radi_true_final,
        "radi_improvement": radi_true_final - radi_true_after_standard,
        "auroc_true_final": auroc(final_set),
    }
    return log


def _true_radi(
    config: TrainConfig,
    teacher: ToyNetwork,
    student: ToyNetwork,
    data: SyntheticDataset,
) -> float:
    normal = anomaly_scores(teacher, student, data.normal_eval, kind=config.score_kind)
    anomalous = anomaly_scores(
        teacher, student, data.anomaly_eval, kind=config.score_kind
    )
    return radi_empirical(ScoreSet(anomaly=anomalous, normal=normal))


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def percentile_threshold(scores, percentile: float = 99.0) -> float:
    """The p-th percentile of normal-training scores, the default verdict line."""
    arr = np.asarray(scores, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot take a percentile of zero scores")
    if not 0.0 < percentile <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    return float(np.percentile(arr, percentile))


def run_inference(
    teacher: ToyNetwork,
    student: ToyNetwork,
    samples,
    threshold: float,
    *,
    kind: str = "l1",
) -> tuple[np.ndarray, np.ndarray]:
    """Score samples and call each one anomalous iff score > threshold.

    Returns (scores, verdicts); threshold may be +/- infinity.
    """
    scores = anomaly_scores(teacher, student, samples, kind=kind)
    return scores, scores > threshold
