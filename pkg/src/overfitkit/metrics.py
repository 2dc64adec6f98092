"""Overfitting retention and class-separability metrics on anomaly scores.

Two quantities drive every downstream decision in this package:

* ARQ, the aberrance retention quotient: summed absolute deviation between
  predictions and ground truth, normalized by the summed ground truth. It
  measures how far a model has drifted toward (or away from) reproducing a
  reference signal, so it acts as the overfitting gauge.
* RADI, the relative anomaly distinguishability index: the probability that
  a randomly drawn anomaly score exceeds a randomly drawn normal score. It
  is the rank statistic underneath AUROC, and the two must agree.

The rest of the module covers score-distribution shape diagnostics: Gaussian
fits, shared-edge histograms, and total variation distance between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._normal import normal_cdf
from ._validation import as_float_vector

__all__ = [
    "GaussianParams",
    "PredictionPair",
    "ScoreSet",
    "Histogram",
    "compute_arq",
    "radi_empirical",
    "auroc",
    "fit_gaussian",
    "histogram",
    "tvd",
    "tvd_to_gaussian",
]

# Histogram masses must sum to 1 within this slack.
_MASS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianParams:
    """Mean and standard deviation of a fitted normal distribution."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu) or not np.isfinite(self.sigma):
            raise ValueError("GaussianParams requires finite mu and sigma")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class PredictionPair:
    """Aligned predicted and ground-truth sequences for ARQ.

    The ground-truth sum serves as the ARQ denominator, so it must be
    strictly positive; both sequences must be finite and equally long.
    """

    predicted: np.ndarray
    ground_truth: np.ndarray

    def __post_init__(self) -> None:
        predicted = as_float_vector(self.predicted, "predicted", min_len=1)
        ground_truth = as_float_vector(self.ground_truth, "ground_truth", min_len=1)
        if predicted.size != ground_truth.size:
            raise ValueError(
                "length mismatch: predicted has "
                f"{predicted.size} values, ground_truth has {ground_truth.size}"
            )
        if ground_truth.sum() <= 0:
            raise ValueError(
                "sum of ground-truth values (the ARQ denominator) must be "
                f"strictly positive, got {ground_truth.sum()}"
            )
        object.__setattr__(self, "predicted", predicted)
        object.__setattr__(self, "ground_truth", ground_truth)


@dataclass(frozen=True)
class ScoreSet:
    """Anomaly-class and normal-class score samples.

    Construction only requires finite values; separation metrics reject
    empty classes at call time.
    """

    anomaly: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "anomaly", as_float_vector(self.anomaly, "anomaly"))
        object.__setattr__(self, "normal", as_float_vector(self.normal, "normal"))


@dataclass(frozen=True)
class Histogram:
    """Probability masses over strictly increasing bin edges."""

    edges: np.ndarray
    masses: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        edges = as_float_vector(self.edges, "edges", min_len=2)
        masses = as_float_vector(self.masses, "masses")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if masses.size != edges.size - 1:
            raise ValueError(
                f"expected {edges.size - 1} masses for {edges.size} edges, "
                f"got {masses.size}"
            )
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        total = masses.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"masses must sum to 1, got {total!r}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)

    @property
    def n_bins(self) -> int:
        return self.masses.size


# ---------------------------------------------------------------------------
# Overfitting gauge
# ---------------------------------------------------------------------------


def compute_arq(pair: PredictionPair) -> float:
    """Aberrance retention quotient: sum|predicted - truth| / sum(truth)."""
    deviation = float(np.abs(pair.predicted - pair.ground_truth).sum())
    return deviation / float(pair.ground_truth.sum())


# ---------------------------------------------------------------------------
# Separability
# ---------------------------------------------------------------------------


def _tied_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their block's mean rank."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    block_start = np.empty(values.size, dtype=bool)
    block_start[0] = True
    block_start[1:] = sorted_vals[1:] != sorted_vals[:-1]
    starts = np.flatnonzero(block_start)
    counts = np.diff(np.append(starts, values.size))
    # Block occupying 0-based slots [s, s + c) holds ranks s+1 .. s+c,
    # whose mean s + (c + 1) / 2 is an exact half-integer in binary.
    mean_ranks = starts + (counts + 1) / 2.0
    ranks = np.empty(values.size, dtype=float)
    ranks[order] = np.repeat(mean_ranks, counts)
    return ranks


def radi_empirical(scores: ScoreSet) -> float:
    """Probability that an anomaly score exceeds a normal score.

    Ties contribute half a win per pair. Computed through tied ranks of the
    pooled sample in O(n log n); the rank sum identity makes the result equal
    to explicit pair counting, not merely close to it.

    Args:
        scores: non-empty anomaly and normal score samples.

    Returns:
        Value in [0, 1]; 0.5 means the classes are indistinguishable.
    """
    n_anomaly = scores.anomaly.size
    n_normal = scores.normal.size
    if n_anomaly == 0:
        raise ValueError("anomaly class is empty")
    if n_normal == 0:
        raise ValueError("normal class is empty")
    pooled = np.concatenate([scores.anomaly, scores.normal])
    ranks = _tied_ranks(pooled)
    anomaly_rank_sum = float(ranks[:n_anomaly].sum())
    wins = anomaly_rank_sum - n_anomaly * (n_anomaly + 1) / 2.0
    return wins / (n_anomaly * n_normal)


def auroc(scores: ScoreSet) -> float:
    """Area under the ROC curve by explicit threshold sweep.

    Walks distinct pooled scores from high to low, accumulating true and
    false positive counts, then integrates the curve trapezoidally. This is
    a deliberately separate code path from ``radi_empirical``; the two agree
    to floating-point accuracy because the trapezoids cut tie blocks along
    their diagonal, which is exactly the half-credit convention.

    Args:
        scores: non-empty anomaly and normal score samples.

    Returns:
        Area in [0, 1].
    """
    n_anomaly = scores.anomaly.size
    n_normal = scores.normal.size
    if n_anomaly == 0:
        raise ValueError("anomaly class is empty")
    if n_normal == 0:
        raise ValueError("normal class is empty")
    pooled = np.concatenate([scores.anomaly, scores.normal])
    labels = np.concatenate(
        [np.ones(n_anomaly, dtype=np.int64), np.zeros(n_normal, dtype=np.int64)]
    )
    order = np.argsort(-pooled, kind="mergesort")
    pooled = pooled[order]
    labels = labels[order]
    # Keep only the last pooled index of each tie block: one ROC vertex per
    # distinct threshold.
    distinct = np.flatnonzero(np.append(pooled[1:] != pooled[:-1], True))
    tps = np.cumsum(labels)[distinct]
    fps = (distinct + 1) - tps
    tpr = np.concatenate([[0.0], tps / n_anomaly])
    fpr = np.concatenate([[0.0], fps / n_normal])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


# ---------------------------------------------------------------------------
# Distribution shape
# ---------------------------------------------------------------------------


def fit_gaussian(samples) -> GaussianParams:
    """Maximum-likelihood Gaussian fit (biased, divide-by-N standard deviation)."""
    arr = as_float_vector(samples, "samples", min_len=2)
    return GaussianParams(mu=float(arr.mean()), sigma=float(arr.std()))


def histogram(samples, edges) -> Histogram:
    """Empirical probability masses of ``samples`` over ``edges``.

    Samples outside the edge range are clipped into the first or last bin,
    so the masses always sum to 1.
    """
    arr = as_float_vector(samples, "samples", min_len=1)
    edge_arr = as_float_vector(edges, "edges", min_len=2)
    if np.any(np.diff(edge_arr) <= 0):
        raise ValueError("edges must be strictly increasing")
    idx = np.searchsorted(edge_arr, arr, side="right") - 1
    idx = np.clip(idx, 0, edge_arr.size - 2)
    counts = np.bincount(idx, minlength=edge_arr.size - 1)
    return Histogram(edges=edge_arr, masses=counts / arr.size)


def tvd(p: Histogram, q: Histogram) -> float:
    """Total variation distance, 0.5 * L1, between shared-edge histograms."""
    if p.edges.size != q.edges.size or not np.array_equal(p.edges, q.edges):
        raise ValueError("histograms must share identical bin edges")
    return float(0.5 * np.abs(p.masses - q.masses).sum())


def tvd_to_gaussian(samples, bins: int) -> tuple[GaussianParams, float]:
    """Distance between a sample and its own Gaussian fit.

    Fits a Gaussian by maximum likelihood, bins the sample into ``bins``
    equal-width bins spanning its range, discretizes the fitted density over
    the same edges by CDF differences renormalized to the spanned range, and
    reports the total variation distance between the two mass vectors.

    Args:
        samples: at least 2 values with non-zero spread.
        bins: number of histogram bins, at least 1.

    Returns:
        (fitted parameters, total variation distance).
    """
    arr = as_float_vector(samples, "samples", min_len=2)
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    params = fit_gaussian(arr)
    if params.sigma <= 0:
        raise ValueError(
            "degenerate sample: zero variance, no Gaussian shape to compare against"
        )
    edges = np.linspace(arr.min(), arr.max(), bins + 1)
    empirical = histogram(arr, edges)
    cdf = np.array([normal_cdf((e - params.mu) / params.sigma) for e in edges])
    span = cdf[-1] - cdf[0]
    if span <= 0:
        raise ValueError("degenerate sample: fitted Gaussian has no mass on the range")
    model = Histogram(edges=edges, masses=np.diff(cdf) / span)
    return params, tvd(empirical, model)
