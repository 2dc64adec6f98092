"""Parametric model of how anomaly-score distributions move with overfitting.

Normal-class scores are modeled as N(mu_n, sigma_n(theta)^2) where theta is
the overfitting level and sigma_n follows an exponential-decay-plus-noise
law: memorization shrinks the variance while, past an onset level theta_0,
training noise injects variance back. Anomaly-class scores stay at
N(mu_a, sigma_a^2). Under this model the separability index RADI has a
closed form, an analytic gradient in theta, and an interior optimum
theta_star where sigma_n bottoms out.

The optimum is computed three ways on purpose: a closed form re-derived
from d(sigma_n)/d(theta) = 0, a second closed form that circulates with the
opposite sign on the h*theta_0 term, and a numeric golden-section argmin
that serves as the arbiter between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from ._normal import normal_cdf, normal_pdf
from ._validation import (
    as_float_vector,
    check_finite_scalar,
    check_nonnegative,
    check_positive,
)
from .metrics import ScoreSet

__all__ = [
    "DistributionModel",
    "RadiGradient",
    "ThetaStarResult",
    "ThetaSweep",
    "NoInteriorOptimumError",
    "MODEL_CONFIG_KEYS",
    "demo_model",
    "sigma_n",
    "radi_closed_form",
    "radi_gradient",
    "theta_star",
    "sample_scores",
    "sweep",
    "read_sweep_csv",
    "load_model_config",
    "save_model_config",
]

SWEEP_CSV_HEADER = "theta,sigma_n,radi"

# Flat key=value config surface, one key per model field.
MODEL_CONFIG_KEYS = (
    "mu_n",
    "mu_a",
    "sigma_a",
    "sigma_n0",
    "k",
    "sigma_max",
    "h",
    "theta_0",
)


class NoInteriorOptimumError(ValueError):
    """The variance law has no interior minimum on the searched bracket."""


@dataclass(frozen=True)
class DistributionModel:
    """Parameters of the two score distributions and the variance law.

    Fields:
        mu_n, mu_a: class means (anomaly mean need not exceed normal mean).
        sigma_a: anomaly-class standard deviation, constant in theta.
        sigma_n0: normal-class standard deviation at theta = 0.
        k: exponential decay rate of the memorization term.
        sigma_max: asymptotic scale of the noise term (0 disables it).
        h: growth rate of the noise term past onset.
        theta_0: overfitting level where noise variance switches on.
    """

    mu_n: float
    mu_a: float
    sigma_a: float
    sigma_n0: float
    k: float
    sigma_max: float
    h: float
    theta_0: float

    def __post_init__(self) -> None:
        check_finite_scalar(self.mu_n, "mu_n")
        check_finite_scalar(self.mu_a, "mu_a")
        check_positive(self.sigma_a, "sigma_a")
        check_positive(self.sigma_n0, "sigma_n0")
        check_positive(self.k, "k")
        check_nonnegative(self.sigma_max, "sigma_max")
        check_positive(self.h, "h")
        check_nonnegative(self.theta_0, "theta_0")
        if self.k == self.h:
            raise ValueError(
                "k and h must differ: k - h is the closed-form optimum's "
                f"denominator and it vanishes at k == h == {self.k}"
            )


class RadiGradient(NamedTuple):
    """Analytic d(RADI)/d(theta) plus a flag for the onset kink.

    At theta == theta_0 with sigma_max > 0 the variance law is continuous
    but not differentiable; ``value`` then holds the right-hand derivative
    and ``at_kink`` is True.
    """

    value: float
    at_kink: bool


@dataclass(frozen=True)
class ThetaStarResult:
    """Optimal overfitting level by three routes plus the verdict.

    ``matches`` records which closed form the numeric argmin confirms:
    "derived", "paper", "both" (they coincide when theta_0 = 0), or
    "neither".
    """

    derived_form: float
    paper_form: float
    numeric: float
    matches: str


@dataclass(frozen=True)
class ThetaSweep:
    """RADI and sigma_n evaluated over an increasing theta grid."""

    thetas: np.ndarray
    sigma_n_values: np.ndarray
    radi_values: np.ndarray

    def __post_init__(self) -> None:
        thetas = as_float_vector(self.thetas, "thetas", min_len=1)
        sig = as_float_vector(self.sigma_n_values, "sigma_n_values")
        radi = as_float_vector(self.radi_values, "radi_values")
        if np.any(np.diff(thetas) <= 0):
            raise ValueError("thetas must be strictly increasing")
        if sig.size != thetas.size or radi.size != thetas.size:
            raise ValueError("sweep columns must have equal length")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "sigma_n_values", sig)
        object.__setattr__(self, "radi_values", radi)

    def write_csv(self, path) -> None:
        path = Path(path)
        rows = [SWEEP_CSV_HEADER]
        for t, s, r in zip(self.thetas, self.sigma_n_values, self.radi_values):
            rows.append(f"{float(t)!r},{float(s)!r},{float(r)!r}")
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def demo_model() -> DistributionModel:
    """Small well-separated model with an interior optimum, used by the CLI."""
    return DistributionModel(
        mu_n=0.0,
        mu_a=2.0,
        sigma_a=1.0,
        sigma_n0=1.5,
        k=2.0,
        sigma_max=0.8,
        h=0.7,
        theta_0=0.5,
    )


# ---------------------------------------------------------------------------
# Variance law
# ---------------------------------------------------------------------------


def sigma_n(model: DistributionModel, theta: float) -> float:
    """Normal-class standard deviation at overfitting level theta.

    Decay term sigma_n0 * exp(-k * theta) plus, for theta > theta_0, the
    noise term sigma_max * (1 - exp(-h * (theta - theta_0))). Continuous at
    theta_0 where the noise term vanishes.
    """
    theta = _check_theta(theta)
    value = model.sigma_n0 * math.exp(-model.k * theta)
    if theta > model.theta_0:
        value += model.sigma_max * (1.0 - math.exp(-model.h * (theta - model.theta_0)))
    return value


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta < 0:
        raise ValueError(f"theta must be finite and non-negative, got {theta}")
    return theta


def _sigma_n_prime(model: DistributionModel, theta: float) -> float:
    # Right-hand derivative at the theta_0 kink.
    value = -model.k * model.sigma_n0 * math.exp(-model.k * theta)
    if theta >= model.theta_0 and model.sigma_max > 0:
        value += model.sigma_max * model.h * math.exp(-model.h * (theta - model.theta_0))
    return value


# ---------------------------------------------------------------------------
# Closed-form separability and its gradient
# ---------------------------------------------------------------------------


def radi_closed_form(model: DistributionModel, theta: float) -> float:
    """P(anomaly score > normal score) when both classes are Gaussian.

    Phi((mu_a - mu_n) / sqrt(sigma_n(theta)^2 + sigma_a^2)), strictly inside
    (0, 1) for finite parameters.
    """
    s = sigma_n(model, theta)
    z = (model.mu_a - model.mu_n) / math.hypot(s, model.sigma_a)
    return normal_cdf(z)


def radi_gradient(model: DistributionModel, theta: float) -> RadiGradient:
    """Analytic derivative of ``radi_closed_form`` in theta.

    Chain rule through z(theta) = (mu_a - mu_n) / sqrt(sigma_n^2 + sigma_a^2):
    the derivative is phi(z) * dz/dtheta with
    dz/dtheta = -(mu_a - mu_n) * sigma_n * sigma_n' / (sigma_n^2 + sigma_a^2)^1.5.
    Sign is therefore opposite to sigma_n' whenever mu_a > mu_n: separability
    improves exactly while memorization still shrinks the normal variance.
    """
    theta = _check_theta(theta)
    s = sigma_n(model, theta)
    sp = _sigma_n_prime(model, theta)
    variance_sum = s * s + model.sigma_a * model.sigma_a
    z = (model.mu_a - model.mu_n) / math.sqrt(variance_sum)
    dz = -(model.mu_a - model.mu_n) * s * sp / variance_sum**1.5
    at_kink = theta == model.theta_0 and model.sigma_max > 0
    return RadiGradient(value=normal_pdf(z) * dz, at_kink=at_kink)


# ---------------------------------------------------------------------------
# Optimal overfitting level
# ---------------------------------------------------------------------------


def _golden_section_argmin(fn, lo: float, hi: float, tol: float) -> float:
    # Classic golden-section bracket shrink; fn must be unimodal on [lo, hi].
    gr = (math.sqrt(5.0) + 1.0) / 2.0
    c = hi - (hi - lo) / gr
    d = lo + (hi - lo) / gr
    while abs(hi - lo) > tol:
        if fn(c) < fn(d):
            hi = d
        else:
            lo = c
        c = hi - (hi - lo) / gr
        d = lo + (hi - lo) / gr
    return (lo + hi) / 2.0


def theta_star(
    model: DistributionModel,
    *,
    bracket_width: float | None = None,
    tol: float = 1e-9,
    match_tol: float = 1e-6,
) -> ThetaStarResult:
    """Overfitting level that minimizes sigma_n, hence maximizes RADI.

    Solving d(sigma_n)/d(theta) = 0 gives the derived closed form

        [ln(k * sigma_n0) - ln(h * sigma_max) - h * theta_0] / (k - h).

    A variant with ``+ h * theta_0`` in the numerator is also in
    circulation; both are computed, and a golden-section argmin of sigma_n
    over [theta_0, theta_0 + bracket_width] decides which one is right
    (``matches``). The two coincide when theta_0 = 0.

    Raises:
        ValueError: sigma_max == 0, so sigma_n is monotone and no interior
            optimum exists.
        NoInteriorOptimumError: the numeric argmin lands on a bracket edge.
    """
    if model.sigma_max <= 0:
        raise ValueError(
            "sigma_max must be strictly positive: without a noise term "
            "sigma_n decays monotonically and has no interior optimum"
        )
    log_ratio = math.log(model.k * model.sigma_n0) - math.log(
        model.h * model.sigma_max
    )
    derived = (log_ratio - model.h * model.theta_0) / (model.k - model.h)
    paper = (log_ratio + model.h * model.theta_0) / (model.k - model.h)

    if bracket_width is None:
        bracket_width = 20.0 / min(model.k, model.h)
    check_positive(bracket_width, "bracket_width")
    check_positive(tol, "tol")
    lo = model.theta_0
    hi = model.theta_0 + bracket_width
    numeric = _golden_section_argmin(lambda t: sigma_n(model, t), lo, hi, tol)
    edge_tol = max(1e-6 * bracket_width, 10.0 * tol)
    if numeric - lo < edge_tol or hi - numeric < edge_tol:
        raise NoInteriorOptimumError(
            f"sigma_n has no interior minimum on [{lo}, {hi}]: "
            f"argmin {numeric} sits on the bracket edge"
        )

    derived_ok = abs(derived - numeric) <= match_tol
    paper_ok = abs(paper - numeric) <= match_tol
    if derived_ok and paper_ok:
        matches = "both"
    elif derived_ok:
        matches = "derived"
    elif paper_ok:
        matches = "paper"
    else:
        matches = "neither"
    return ThetaStarResult(
        derived_form=derived, paper_form=paper, numeric=numeric, matches=matches
    )


# ---------------------------------------------------------------------------
# Sampling and sweeps
# ---------------------------------------------------------------------------


def sample_scores(
    model: DistributionModel,
    theta: float,
    n_normal: int,
    n_anomaly: int,
    seed: int,
) -> ScoreSet:
    """Draw score samples from both classes at overfitting level theta.

    Deterministic for a given seed; the normal class is drawn first from a
    fresh generator, then the anomaly class.
    """
    if n_normal < 1 or n_anomaly < 1:
        raise ValueError(
            f"need at least one sample per class, got {n_normal} normal "
            f"and {n_anomaly} anomaly"
        )
    rng = np.random.default_rng(seed)
    normal = rng.normal(model.mu_n, sigma_n(model, theta), size=n_normal)
    anomaly = rng.normal(model.mu_a, model.sigma_a, size=n_anomaly)
    return ScoreSet(anomaly=anomaly, normal=normal)


def sweep(model: DistributionModel, thetas: Sequence[float]) -> ThetaSweep:
    """Evaluate sigma_n and closed-form RADI over a theta grid."""
    grid = as_float_vector(thetas, "thetas", min_len=1)
    sig = np.array([sigma_n(model, t) for t in grid])
    radi = np.array([radi_closed_form(model, t) for t in grid])
    return ThetaSweep(thetas=grid, sigma_n_values=sig, radi_values=radi)


def read_sweep_csv(path) -> ThetaSweep:
    """Parse a sweep CSV written by ``ThetaSweep.write_csv``."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != SWEEP_CSV_HEADER:
        raise ValueError(
            f"{path}:1: expected header {SWEEP_CSV_HEADER!r}, "
            f"got {lines[0]!r}" if lines else f"{path}: empty file"
        )
    thetas, sig, radi = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
        try:
            t, s, r = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from None
        thetas.append(t)
        sig.append(s)
        radi.append(r)
    return ThetaSweep(
        thetas=np.asarray(thetas),
        sigma_n_values=np.asarray(sig),
        radi_values=np.asarray(radi),
    )


# ---------------------------------------------------------------------------
# Flat key=value model configs
# ---------------------------------------------------------------------------


def load_model_config(path) -> DistributionModel:
    """Read a model from a flat key=value file.

    Exactly the keys in MODEL_CONFIG_KEYS are allowed and all are required;
    unknown or duplicate keys are rejected with their line number.
    """
    path = Path(path)
    values: dict[str, float] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in MODEL_CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = float(text.strip())
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: value for {key!r} is not a number: "
                    f"{text.strip()!r}"
                ) from None
    missing = [key for key in MODEL_CONFIG_KEYS if key not in values]
    if missing:
        raise ValueError(f"{path}: missing keys: {', '.join(missing)}")
    return DistributionModel(**values)


def save_model_config(model: DistributionModel, path) -> None:
    """Write a model as a flat key=value file readable by load_model_config."""
    path = Path(path)
    lines = [f"{key}={float(getattr(model, key))!r}" for key in MODEL_CONFIG_KEYS]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
