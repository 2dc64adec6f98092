"""Independent reference implementations used to check the package.

Everything here is deliberately naive: quadratic pair counting, dense grid
searches, dumb state-machine loops. The production code must agree with
these, never the other way around.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from overfitkit.distmodel import radi_closed_form, sigma_n


def pairwise_radi(anomaly, normal) -> float:
    """O(|A|*|N|) pair count: wins + half-credit ties over all pairs."""
    anomaly = np.asarray(anomaly, dtype=float)
    normal = np.asarray(normal, dtype=float)
    wins = 0.0
    for a in anomaly:
        for n in normal:
            if a > n:
                wins += 1.0
            elif a == n:
                wins += 0.5
    return wins / (anomaly.size * normal.size)


def reference_verdicts(violations, c_thr: int) -> list[str]:
    """Dumb loop over a violation string, mirroring the counter rule.

    The counter tolerates c_thr consecutive violations; the next one emits
    and resets. Any non-violation resets.
    """
    counter = 0
    verdicts = []
    for violated in violations:
        if violated:
            counter += 1
            if counter > c_thr:
                counter = 0
                verdicts.append("emit_freeze_signal")
            else:
                verdicts.append("increment_counter")
        else:
            counter = 0
            verdicts.append("continue")
    return verdicts


def fd_radi_gradient(model, theta: float, step: float = 1e-6) -> float:
    """Central finite difference of the closed-form separability."""
    lo = max(theta - step, 0.0)
    hi = theta + step
    return (radi_closed_form(model, hi) - radi_closed_form(model, lo)) / (hi - lo)


def brent_argmin_sigma_n(model, lo: float, hi: float) -> float:
    """Bounded Brent minimizer of sigma_n, cross-checked on a dense grid."""
    result = minimize_scalar(
        lambda t: sigma_n(model, t),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    grid = np.linspace(lo, hi, 20_001)
    coarse = grid[int(np.argmin([sigma_n(model, t) for t in grid]))]
    spacing = grid[1] - grid[0]
    assert abs(coarse - result.x) <= 2 * spacing, (
        f"Brent landed at {result.x} but the grid minimum is near {coarse}; "
        "sigma_n is not unimodal on this bracket"
    )
    return float(result.x)


def brute_histogram_masses(samples, edges) -> np.ndarray:
    """Per-bin fractions by explicit loop, clipping strays into end bins."""
    samples = np.asarray(samples, dtype=float)
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros(edges.size - 1)
    for value in samples:
        placed = False
        for b in range(edges.size - 1):
            if edges[b] <= value < edges[b + 1]:
                counts[b] += 1
                placed = True
                break
        if not placed:
            counts[0 if value < edges[0] else -1] += 1
    return counts / samples.size


def lstsq_slope(xs, ys) -> float:
    """Degree-1 polyfit slope, an independent least-squares route."""
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])
