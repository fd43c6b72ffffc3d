"""Approximated-null workflow: null estimation and type-I inflation bounds.

When null datasets are resampled from an estimated rather than exact null,
the anytime type-I error inflates by at most the total-variation distance
between the true and estimated product laws over the horizon.  The bound
here is a closed-form high-probability envelope driven by how many fresh
null samples feed the estimate each step; it is reported, never enforced
at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, JointBernoulli, ShiftRegime

__all__ = [
    "TvBoundInputs",
    "tv_categorical",
    "step_tv_bound",
    "sequence_tv_bound",
    "NullEstimationPool",
    "estimate_null_from_data",
]


@dataclass(frozen=True)
class TvBoundInputs:
    """Horizon, batch sizes, per-step null sample counts, and confidence."""

    t: int
    n: int
    N: int
    m1: int
    m2: int
    delta: float

    def __post_init__(self):
        for name in ("t", "n", "N", "m1", "m2"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise DomainError("delta must lie in (0, 1)")


def tv_categorical(p, q) -> float:
    """Total variation distance between two laws on the same finite support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError("distributions must share a support")
    for name, table in (("p", p), ("q", q)):
        if np.any(table < 0.0) or abs(float(table.sum()) - 1.0) > 1e-9:
            raise DomainError(f"{name} is not a probability table")
    return 0.5 * float(np.abs(p - q).sum())


def step_tv_bound(n: int, N: int, tv_xy: float, tv_x: float) -> float:
    """Subadditive bound on one step's product-law TV distance."""
    for name, tv in (("tv_xy", tv_xy), ("tv_x", tv_x)):
        if not (0.0 <= tv <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1]")
    return n * tv_xy + N * tv_x


def sequence_tv_bound(inp: TvBoundInputs) -> float:
    """High-probability TV envelope over the whole horizon.

    2 sqrt(t) ( sqrt(n^2 Kxy / (2 m1)) + sqrt(N^2 Kx / (2 m2)) ) with the
    concentration constants Kxy = 4 ln 2 + ln(2t/delta) and
    Kx = 2 ln 2 + ln(2t/delta).
    """
    log_term = math.log(2.0 * inp.t / inp.delta)
    k_xy = 4.0 * math.log(2.0) + log_term
    k_x = 2.0 * math.log(2.0) + log_term
    return 2.0 * math.sqrt(inp.t) * (
        math.sqrt(inp.n**2 * k_xy / (2.0 * inp.m1))
        + math.sqrt(inp.N**2 * k_x / (2.0 * inp.m2))
    )


class NullEstimationPool:
    """Accumulates null samples across steps and re-estimates the null law."""

    def __init__(self, regime: ShiftRegime):
        self.regime = regime
        self.cells = np.zeros(4, dtype=np.int64)  # (1,1),(1,0),(0,1),(0,0)
        self.unlabeled_ones = 0
        self.unlabeled_total = 0

    def add_labeled(self, x: np.ndarray, y: np.ndarray) -> None:
        x = np.asarray(x)
        y = np.asarray(y)
        self.cells[0] += int(np.sum((x == 1) & (y == 1)))
        self.cells[1] += int(np.sum((x == 1) & (y == 0)))
        self.cells[2] += int(np.sum((x == 0) & (y == 1)))
        self.cells[3] += int(np.sum((x == 0) & (y == 0)))

    def add_unlabeled(self, x: np.ndarray) -> None:
        x = np.asarray(x)
        self.unlabeled_ones += int(np.sum(x == 1))
        self.unlabeled_total += len(x)

    def estimate(self) -> JointBernoulli:
        """Add-1 smoothed estimate reassembled along the regime's decomposition."""
        c11, c10, c01, c00 = (int(v) for v in self.cells)
        n_labeled = c11 + c10 + c01 + c00
        if n_labeled == 0:
            raise DomainError("cannot estimate a null from an empty labeled pool")
        if self.regime is ShiftRegime.LABEL_SHIFT:
            theta_y = (c11 + c01 + 1) / (n_labeled + 2)
            q0 = (c10 + 1) / (c10 + c00 + 2)
            q1 = (c11 + 1) / (c11 + c01 + 2)
            return JointBernoulli(
                p11=theta_y * q1,
                p01=theta_y * (1.0 - q1),
                p10=(1.0 - theta_y) * q0,
                p00=(1.0 - theta_y) * (1.0 - q0),
            )
        ones = c11 + c10 + self.unlabeled_ones
        total = n_labeled + self.unlabeled_total
        theta_x = (ones + 1) / (total + 2)
        r0 = (c01 + 1) / (c01 + c00 + 2)
        r1 = (c11 + 1) / (c11 + c10 + 2)
        return JointBernoulli(
            p11=theta_x * r1,
            p10=theta_x * (1.0 - r1),
            p01=(1.0 - theta_x) * r0,
            p00=(1.0 - theta_x) * (1.0 - r0),
        )


def estimate_null_from_data(labeled_pairs, unlabeled_xs, regime: ShiftRegime) -> JointBernoulli:
    """Estimate the null joint law from raw null samples.

    Label shift rebuilds the table from the empirical label frequency and
    conditional covariate frequencies (labeled pairs only); concept shift
    pools labeled and unlabeled covariates for the marginal of X and takes
    conditional label frequencies from the pairs.  Counts carry add-1
    smoothing so every cell stays positive.
    """
    pairs = list(labeled_pairs)
    if not pairs:
        raise DomainError("labeled sample must be nonempty")
    pool = NullEstimationPool(regime)
    arr = np.asarray(pairs, dtype=np.int64)
    pool.add_labeled(arr[:, 0], arr[:, 1])
    xs = np.asarray(list(unlabeled_xs), dtype=np.int64)
    if len(xs):
        pool.add_unlabeled(xs)
    return pool.estimate()
