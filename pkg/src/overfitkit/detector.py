"""Scikit-learn style wrapper around the two-stage training pipeline.

``ControlledOverfitDetector`` fits on normal data only, like other outlier
detectors: fit(X) trains the teacher-student pair through the standard and
controlled-overfitting stages, using a held-out slice of X plus Gaussian
pseudo-anomalies for the in-training separability checkpoints. Prediction
follows the sklearn outlier convention (+1 inlier, -1 outlier) with the
decision threshold at a percentile of the training scores.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .controller import ControllerState
from .pipeline import (
    RunLog,
    SyntheticDataset,
    TrainConfig,
    anomaly_scores,
    make_teacher_student,
    percentile_threshold,
    run_overfit_stage,
    run_standard_stage,
)
from .seeding import derive_seed
from .toynet import NoiseSpec, inject_gaussian_noise

__all__ = ["ControlledOverfitDetector"]


class ControlledOverfitDetector(BaseEstimator, OutlierMixin):
    """Teacher-student anomaly detector trained with controlled overfitting.

    Parameters mirror TrainConfig; see that class for semantics. X passed to
    ``fit`` is the normal class only. ``eval_fraction`` of the rows is held
    out of gradient updates and used, together with noise-perturbed copies,
    for the controller's checkpoint metrics.

    Attributes after fit:
        teacher_, student_: the trained network pair.
        threshold_: score cut at ``threshold_percentile`` of training scores.
        offset_: ``-threshold_``, sklearn's decision-function shift.
        run_log_: RunLog with per-checkpoint records and controller decisions.
        n_features_in_: feature count seen during fit.
    """

    def __init__(
        self,
        standard_epochs: int = 25,
        overfit_epochs: int = 15,
        learning_rate: float = 0.05,
        batch_size: int = 64,
        sigma_noise: float = 1.0,
        arq_theta: float = 0.5,
        arq_delta: float = 0.45,
        freeze_threshold: int = 3,
        gradient_window: int = 5,
        eval_fraction: float = 0.25,
        threshold_percentile: float = 99.0,
        teacher_hidden: int = 24,
        student_hidden: int = 5,
        score_kind: str = "l1",
        random_state: int = 0,
    ):
        self.standard_epochs = standard_epochs
        self.overfit_epochs = overfit_epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.sigma_noise = sigma_noise
        self.arq_theta = arq_theta
        self.arq_delta = arq_delta
        self.freeze_threshold = freeze_threshold
        self.gradient_window = gradient_window
        self.eval_fraction = eval_fraction
        self.threshold_percentile = threshold_percentile
        self.teacher_hidden = teacher_hidden
        self.student_hidden = student_hidden
        self.score_kind = score_kind
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(
            standard_epochs=self.standard_epochs,
            overfit_epochs=self.overfit_epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            sigma_noise=self.sigma_noise,
            arq_theta=self.arq_theta,
            arq_delta=self.arq_delta,
            freeze_threshold=self.freeze_threshold,
            gradient_window=self.gradient_window,
            eval_size=10**9,  # the eval split is already sized by eval_fraction
            threshold_percentile=self.threshold_percentile,
            teacher_hidden=self.teacher_hidden,
            student_hidden=self.student_hidden,
            score_kind=self.score_kind,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        """Train on normal samples; y is ignored and accepted for API parity."""
        X = check_array(X, dtype=float)
        if X.shape[0] < 8:
            raise ValueError(
                f"need at least 8 normal samples to split off an eval slice, "
                f"got {X.shape[0]}"
            )
        if not 0.0 < self.eval_fraction < 1.0:
            raise ValueError(
                f"eval_fraction must be in (0, 1), got {self.eval_fraction}"
            )
        config = self._config()
        rng = np.random.default_rng(derive_seed(config.seed, "detector", "split"))
        order = rng.permutation(X.shape[0])
        n_eval = max(2, int(round(X.shape[0] * self.eval_fraction)))
        n_eval = min(n_eval, X.shape[0] - 2)
        eval_rows = X[order[:n_eval]]
        train_rows = X[order[n_eval:]]
        # Pseudo-anomalies stand in for the (absent) anomaly class.
        pseudo_eval = inject_gaussian_noise(
            eval_rows,
            NoiseSpec(
                sigma_noise=self.sigma_noise,
                seed=derive_seed(config.seed, "detector", "pseudo"),
            ),
        )
        data = SyntheticDataset(
            normal_train=train_rows,
            normal_eval=eval_rows,
            anomaly_eval=pseudo_eval,
            labels=np.concatenate(
                [np.zeros(n_eval, dtype=np.int64), np.ones(n_eval, dtype=np.int64)]
            ),
        )

        teacher, student = make_teacher_student(config, input_dim=X.shape[1])
        log = run_standard_stage(config, teacher, student, data)
        state = ControllerState(
            freeze_threshold=config.freeze_threshold,
            window_size=config.gradient_window,
        )
        overfit_log = run_overfit_stage(
            config, teacher, student, data, state, first_step=len(log.records)
        )
        log.records.extend(overfit_log.records)
        log.decisions.extend(overfit_log.decisions)

        train_scores = anomaly_scores(teacher, student, train_rows, kind=self.score_kind)
        threshold = percentile_threshold(train_scores, self.threshold_percentile)
        log.summary = {
            "frozen_layers": list(state.frozen_layers),
            "signals_emitted": state.signals_emitted,
            "early_stop": overfit_log.summary["early_stop"],
            "threshold": threshold,
        }

        self.teacher_ = teacher
        self.student_ = student
        self.threshold_ = threshold
        self.offset_ = -threshold
        self.run_log_: RunLog = log
        self.n_features_in_ = X.shape[1]
        return self

    def anomaly_score(self, X) -> np.ndarray:
        """Raw teacher-student discrepancy; higher means more anomalous."""
        check_is_fitted(self, "student_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return anomaly_scores(self.teacher_, self.student_, X, kind=self.score_kind)

    def score_samples(self, X) -> np.ndarray:
        """Negated anomaly score, following the sklearn outlier convention."""
        return -self.anomaly_score(X)

    def decision_function(self, X) -> np.ndarray:
        """Positive for inliers, negative past the fitted threshold."""
        return self.score_samples(X) - self.offset_

    def predict(self, X) -> np.ndarray:
        """+1 for inliers, -1 for samples scoring above the threshold."""
        return np.where(self.decision_function(X) < 0, -1, 1)
