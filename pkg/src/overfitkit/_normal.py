"""Standard normal CDF and PDF in double precision via the error function.

No lookup tables; ``math.erfc`` keeps the lower tail accurate far beyond
the point where ``0.5 * (1 + erf(z / sqrt(2)))`` would round to 0 or 1.
"""

from __future__ import annotations

import math

__all__ = ["normal_cdf", "normal_pdf"]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Smallest positive double and largest double below 1, used to keep
# probabilities strictly inside (0, 1) when erfc saturates.
_TINY = 5e-324
_ALMOST_ONE = math.nextafter(1.0, 0.0)


def normal_cdf(z: float) -> float:
    """P(Z <= z) for Z ~ N(0, 1), clamped to the open interval (0, 1)."""
    p = 0.5 * math.erfc(-z / _SQRT2)
    if p <= 0.0:
        return _TINY
    if p >= 1.0:
        return _ALMOST_ONE
    return p


def normal_pdf(z: float) -> float:
    """Density of N(0, 1) at z."""
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)
