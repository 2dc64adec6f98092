from __future__ import annotations

from hypothesis import HealthCheck, settings

# Some properties sort 10^4-element arrays or run tiny training loops per
# example; wall-clock deadlines only add flakiness there.
settings.register_profile(
    "package",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("package")
