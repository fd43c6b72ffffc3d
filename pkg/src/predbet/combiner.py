"""Convex combination of concurrent e-values with learned weights.

A convex mix of e-values is again an e-value as long as the weights are
chosen before the round.  Weights follow the exponentiated-gradient
portfolio update; cumulative evidence is tracked in log-wealth with a
permanent record of the first threshold crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import DomainError

__all__ = [
    "SimplexWeights",
    "EProcessState",
    "combine",
    "eg_update",
    "wealth_update",
    "check_rejection",
]

SIMPLEX_ATOL = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """Nonnegative weights summing to one."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.ndim != 1 or len(w) < 1:
            raise DomainError("weights must form a nonempty vector")
        if np.any(w < 0.0):
            raise DomainError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > SIMPLEX_ATOL:
            raise DomainError(f"weights sum to {w.sum()!r}, expected 1")

    @classmethod
    def uniform(cls, k: int) -> "SimplexWeights":
        return cls(np.full(k, 1.0 / k))

    def __len__(self) -> int:
        return len(self.w)


@dataclass(frozen=True)
class EProcessState:
    """Cumulative log-wealth of one e-process with its stopping record.

    stopped_at is the first step whose running wealth reached 1/alpha;
    once set it never changes, though wealth keeps accumulating so power
    curves can be read off at any horizon.
    """

    alpha: float
    log_wealth: float = 0.0
    step: int = 0
    stopped_at: int | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        if not math.isfinite(self.log_wealth):
            raise DomainError("log-wealth must stay finite")


def combine(evalues, weights: SimplexWeights) -> float:
    """Weighted average of concurrent e-values."""
    evalues = np.asarray(evalues, dtype=float)
    if evalues.shape != weights.w.shape:
        raise DomainError("e-values and weights must have matching length")
    return float(np.dot(weights.w, evalues))


def eg_update(weights: SimplexWeights, evalues, eta: float) -> SimplexWeights:
    """Exponentiated-gradient step toward the better-paying experts.

    Each weight is multiplied by exp(eta * e_i / combined) and the vector
    renormalized; a zero combined value leaves the weights unchanged.
    """
    if eta <= 0.0:
        raise DomainError("eta must be positive")
    evalues = np.asarray(evalues, dtype=float)
    total = combine(evalues, weights)
    if total == 0.0:
        return weights
    scaled = eta * evalues / total
    raw = weights.w * np.exp(scaled - scaled.max())
    return SimplexWeights(raw / raw.sum())


def wealth_update(state: EProcessState, e: float) -> EProcessState:
    """Multiply wealth by one e-value and record a first threshold crossing."""
    if e < 0.0:
        raise DomainError("e-values must be nonnegative")
    log_wealth = state.log_wealth + math.log(max(e, LOG_FLOOR))
    step = state.step + 1
    stopped_at = state.stopped_at
    if stopped_at is None and log_wealth >= math.log(1.0 / state.alpha):
        stopped_at = step
    return replace(state, log_wealth=log_wealth, step=step, stopped_at=stopped_at)


def check_rejection(state: EProcessState) -> bool:
    """Whether the process has ever crossed its rejection threshold."""
    return state.stopped_at is not None
