"""Dual-control supervision of an overfitting training stage.

Each checkpoint reports the current overfitting gauge (arq) and
separability (radi). A checkpoint violates control when arq leaves its
target interval or when the estimated gradient of radi against arq turns
negative. Consecutive violations accumulate in a counter; once the counter
exceeds its threshold a freeze signal fires and the next unfrozen network
layer (lowest index first) is frozen, one layer per signal.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

__all__ = [
    "ArqInterval",
    "Verdict",
    "ControlDecision",
    "ControllerState",
    "AllLayersFrozenError",
    "arq_in_interval",
    "estimate_radi_gradient",
    "dual_control_step",
    "freeze_next_layer",
    "write_decision_log",
    "read_decision_log",
    "DECISION_LOG_KEYS",
]

DECISION_LOG_KEYS = ("step", "arq", "radi", "gradient", "verdict", "frozen_layer")


class AllLayersFrozenError(RuntimeError):
    """Raised when a freeze signal arrives with no unfrozen layer left."""


@dataclass(frozen=True)
class ArqInterval:
    """Target band [theta - delta, theta + delta] for the overfitting gauge."""

    theta: float
    delta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.delta)):
            raise ValueError("interval parameters must be finite")
        if self.delta <= 0:
            raise ValueError(f"delta must be strictly positive, got {self.delta}")
        if self.theta - self.delta < 0:
            raise ValueError(
                f"interval lower bound theta - delta = {self.theta - self.delta} "
                "must be non-negative"
            )

    @property
    def lower(self) -> float:
        return self.theta - self.delta

    @property
    def upper(self) -> float:
        return self.theta + self.delta


class Verdict(enum.Enum):
    CONTINUE = "continue"
    INCREMENT_COUNTER = "increment_counter"
    EMIT_FREEZE_SIGNAL = "emit_freeze_signal"


@dataclass(frozen=True)
class ControlDecision:
    """Verdict for one checkpoint plus the evidence behind it."""

    verdict: Verdict
    arq_out_of_interval: bool
    radi_gradient_negative: bool
    gradient_estimate: float


@dataclass
class ControllerState:
    """Mutable control-loop state carried across checkpoints.

    freeze_threshold is the count of tolerated consecutive violations; the
    signal fires on the violation after that, so threshold 3 means the 4th
    consecutive violation emits. window_size bounds the (arq, radi) history
    used for the gradient estimate.
    """

    freeze_threshold: int = 3
    window_size: int = 5
    freeze_counter: int = 0
    signals_emitted: int = 0
    frozen_layers: list[int] = field(default_factory=list)
    history: deque = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.freeze_threshold < 1:
            raise ValueError(
                f"freeze_threshold must be at least 1, got {self.freeze_threshold}"
            )
        if self.window_size < 2:
            raise ValueError(f"window_size must be at least 2, got {self.window_size}")
        self.history = deque(maxlen=self.window_size)


def arq_in_interval(arq: float, interval: ArqInterval) -> bool:
    """Inclusive membership test, both boundaries count as inside."""
    if not math.isfinite(arq):
        raise ValueError(f"arq must be finite, got {arq}")
    return interval.lower <= arq <= interval.upper


def estimate_radi_gradient(window: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of radi against arq over an observation window.

    Discrete stand-in for the continuous derivative of separability with
    respect to the overfitting gauge. Fewer than 2 observations, or a window
    where every arq is identical, has no defined slope and estimates 0.
    """
    if len(window) < 2:
        return 0.0
    arqs = [float(a) for a, _ in window]
    radis = [float(r) for _, r in window]
    mean_a = sum(arqs) / len(arqs)
    mean_r = sum(radis) / len(radis)
    sxx = sum((a - mean_a) ** 2 for a in arqs)
    if sxx == 0.0:
        return 0.0
    sxy = sum((a - mean_a) * (r - mean_r) for a, r in zip(arqs, radis))
    return sxy / sxx


def dual_control_step(
    state: ControllerState, arq: float, radi: float, interval: ArqInterval
) -> ControlDecision:
    """Record one checkpoint and decide whether to continue, count, or freeze.

    A violation is arq outside the interval OR a negative gradient estimate.
    Violations increment the counter; a non-violation resets it. When the
    counter exceeds the threshold the verdict is EMIT_FREEZE_SIGNAL and the
    counter resets (the caller is expected to freeze a layer).
    """
    if not math.isfinite(radi):
        raise ValueError(f"radi must be finite, got {radi}")
    state.history.append((float(arq), float(radi)))
    gradient = estimate_radi_gradient(state.history)
    inside = arq_in_interval(arq, interval)
    gradient_negative = gradient < 0
    if not inside or gradient_negative:
        state.freeze_counter += 1
        if state.freeze_counter > state.freeze_threshold:
            state.freeze_counter = 0
            state.signals_emitted += 1
            verdict = Verdict.EMIT_FREEZE_SIGNAL
        else:
            verdict = Verdict.INCREMENT_COUNTER
    else:
        state.freeze_counter = 0
        verdict = Verdict.CONTINUE
    return ControlDecision(
        verdict=verdict,
        arq_out_of_interval=not inside,
        radi_gradient_negative=gradient_negative,
        gradient_estimate=gradient,
    )


def freeze_next_layer(network_layers: Sequence, state: ControllerState) -> int:
    """Freeze the lowest-index unfrozen layer and reset the counter.

    ``network_layers`` is any ordered sequence of objects with a mutable
    ``frozen`` attribute. Returns the frozen index.

    Raises:
        AllLayersFrozenError: every layer is already frozen.
    """
    for index, layer in enumerate(network_layers):
        if not layer.frozen:
            layer.frozen = True
            state.frozen_layers.append(index)
            state.freeze_counter = 0
            return index
    raise AllLayersFrozenError(
        f"all {len(network_layers)} layers are already frozen"
    )


# ---------------------------------------------------------------------------
# Decision log persistence (JSON lines)
# ---------------------------------------------------------------------------


def write_decision_log(path, records: Sequence[dict]) -> None:
    """Write one JSON object per line with a fixed key order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for i, record in enumerate(records):
            missing = [k for k in DECISION_LOG_KEYS if k not in record]
            if missing:
                raise ValueError(f"record {i} is missing keys: {', '.join(missing)}")
            ordered = {key: record[key] for key in DECISION_LOG_KEYS}
            handle.write(json.dumps(ordered) + "\n")


def read_decision_log(path) -> list[dict]:
    """Parse a decision log written by ``write_decision_log``."""
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
            missing = [k for k in DECISION_LOG_KEYS if k not in record]
            if missing:
                raise ValueError(
                    f"{path}:{lineno}: missing keys: {', '.join(missing)}"
                )
            records.append(record)
    return records
