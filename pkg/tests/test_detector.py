from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from overfitkit.detector import ControlledOverfitDetector

FAST = dict(standard_epochs=2, overfit_epochs=2, batch_size=32)


def make_data(seed=0, n=120, dim=6, shift=4.0):
    rng = np.random.default_rng(seed)
    normal = rng.normal(0.0, 1.0, size=(n, dim))
    anomalous = rng.normal(0.0, 1.0, size=(n // 4, dim)) + shift
    return normal, anomalous


def test_get_params_round_trip():
    det = ControlledOverfitDetector(learning_rate=0.01, student_hidden=3)
    params = det.get_params()
    assert params["learning_rate"] == 0.01
    assert params["student_hidden"] == 3
    rebuilt = ControlledOverfitDetector(**params)
    assert rebuilt.get_params() == params


def test_set_params_and_clone():
    det = ControlledOverfitDetector()
    det.set_params(arq_theta=0.06, arq_delta=0.05)
    assert det.arq_theta == 0.06
    cloned = clone(det)
    assert cloned.get_params() == det.get_params()


def test_unfitted_predict_raises():
    det = ControlledOverfitDetector()
    with pytest.raises(NotFittedError):
        det.predict(np.zeros((3, 4)))


def test_fit_sets_attributes():
    normal, _ = make_data()
    det = ControlledOverfitDetector(**FAST).fit(normal)
    assert det.n_features_in_ == normal.shape[1]
    assert np.isfinite(det.threshold_)
    assert det.offset_ == -det.threshold_
    assert len(det.run_log_.records) == 4
    assert det.teacher_.layers[0].frozen
    assert not all(layer.frozen for layer in det.student_.layers)


def test_fit_returns_self():
    normal, _ = make_data()
    det = ControlledOverfitDetector(**FAST)
    assert det.fit(normal) is det


def test_predict_values_and_decision_sign():
    normal, anomalous = make_data()
    det = ControlledOverfitDetector(**FAST).fit(normal)
    pooled = np.vstack([normal[:20], anomalous[:20]])
    predictions = det.predict(pooled)
    assert set(predictions.tolist()) <= {-1, 1}
    decision = det.decision_function(pooled)
    assert np.array_equal(predictions, np.where(decision < 0, -1, 1))


def test_score_samples_is_negated_anomaly_score():
    normal, _ = make_data()
    det = ControlledOverfitDetector(**FAST).fit(normal)
    x = normal[:10]
    assert np.allclose(det.score_samples(x), -det.anomaly_score(x), atol=1e-15)
    assert np.allclose(
        det.decision_function(x),
        det.threshold_ - det.anomaly_score(x),
        atol=1e-12,
    )


def test_most_training_data_is_inlier():
    # 99th-percentile threshold leaves at most a sliver of the training
    # rows on the anomalous side.
    normal, _ = make_data(n=200)
    det = ControlledOverfitDetector(**FAST).fit(normal)
    assert (det.predict(normal) == 1).mean() >= 0.95


def test_detector_separates_shifted_anomalies():
    normal, anomalous = make_data(n=160, shift=6.0)
    det = ControlledOverfitDetector(standard_epochs=10, overfit_epochs=5).fit(normal)
    normal_scores = det.anomaly_score(normal)
    anomaly_scores_ = det.anomaly_score(anomalous)
    assert np.median(anomaly_scores_) > np.median(normal_scores)


def test_feature_count_mismatch_rejected():
    normal, _ = make_data(dim=6)
    det = ControlledOverfitDetector(**FAST).fit(normal)
    with pytest.raises(ValueError, match="features"):
        det.predict(np.zeros((2, 5)))


def test_too_few_rows_rejected():
    det = ControlledOverfitDetector(**FAST)
    with pytest.raises(ValueError, match="at least 8 normal samples"):
        det.fit(np.zeros((5, 4)))


def test_bad_eval_fraction_rejected():
    normal, _ = make_data()
    for bad in (0.0, 1.0, -0.5):
        det = ControlledOverfitDetector(eval_fraction=bad, **FAST)
        with pytest.raises(ValueError, match="eval_fraction"):
            det.fit(normal)


def test_fit_is_deterministic_in_random_state():
    normal, _ = make_data()
    a = ControlledOverfitDetector(**FAST, random_state=5).fit(normal)
    b = ControlledOverfitDetector(**FAST, random_state=5).fit(normal)
    assert a.threshold_ == b.threshold_
    assert np.array_equal(
        a.student_.layers[0].weights, b.student_.layers[0].weights
    )
    c = ControlledOverfitDetector(**FAST, random_state=6).fit(normal)
    assert not np.array_equal(
        a.student_.layers[0].weights, c.student_.layers[0].weights
    )


def test_run_log_carries_controller_decisions():
    normal, _ = make_data()
    det = ControlledOverfitDetector(**FAST).fit(normal)
    assert len(det.run_log_.decisions) == det.overfit_epochs
    assert "threshold" in det.run_log_.summary
    assert "frozen_layers" in det.run_log_.summary


def test_fit_predict_shortcut():
    # OutlierMixin provides fit_predict; it must agree with fit then predict.
    normal, _ = make_data()
    labels = ControlledOverfitDetector(**FAST).fit_predict(normal)
    det = ControlledOverfitDetector(**FAST).fit(normal)
    assert np.array_equal(labels, det.predict(normal))
