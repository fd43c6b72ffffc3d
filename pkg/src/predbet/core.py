"""Binary joint distributions, shift regimes, and seeded batch sampling.

Everything downstream works with a 2x2 contingency law for a pair of
binary variables (X, Y).  The joint table is immutable and validated at
construction; sampling is driven by counter-based Philox streams so that
parallel trials are reproducible independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DomainError",
    "EnumerationSizeError",
    "UndefinedCorrelationError",
    "ShiftRegime",
    "RngHandle",
    "JointBernoulli",
    "LabeledBatch",
    "UnlabeledBatch",
    "joint_from_label_shift",
    "joint_from_concept_shift",
    "sample_labeled",
    "sample_unlabeled",
    "phi_correlation",
]

PROB_ATOL = 1e-12


class DomainError(ValueError):
    """An argument is outside its mathematical domain."""


class EnumerationSizeError(DomainError):
    """A brute-force enumeration would exceed its size budget."""


class UndefinedCorrelationError(DomainError):
    """Correlation requested for a table with a degenerate marginal."""


class ShiftRegime(Enum):
    """Which part of the joint law is held fixed between null and alternative.

    LABEL_SHIFT fixes P(X|Y), so a distribution shift must be attributed
    to the marginal of Y.  CONCEPT_SHIFT fixes P(X), attributing any
    shift to the conditional of Y given X.
    """

    LABEL_SHIFT = "label_shift"
    CONCEPT_SHIFT = "concept_shift"


@dataclass(frozen=True)
class RngHandle:
    """Addressable randomness: (seed, stream) plus an optional branch path.

    The same handle always yields the same draws; distinct streams (or
    branches) are statistically independent Philox counter streams, so
    work can be farmed out in any order without changing results.
    """

    seed: int
    stream: int = 0
    branch: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this handle's stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.branch))
        return np.random.Generator(np.random.Philox(ss))

    def split(self, *ids: int) -> "RngHandle":
        """Derive an independent child handle; deterministic in the ids."""
        return RngHandle(self.seed, self.stream, self.branch + ids)


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class JointBernoulli:
    """Full joint law of binary (X, Y) as the four cell probabilities.

    Cell p_xy is P(X=x, Y=y).  The table must sum to one; marginal and
    conditional accessors are derived views of the same table.
    """

    p11: float
    p10: float
    p01: float
    p00: float

    def __post_init__(self):
        for name in ("p11", "p10", "p01", "p00"):
            _check_prob(name, getattr(self, name))
        total = self.p11 + self.p10 + self.p01 + self.p00
        if abs(total - 1.0) > PROB_ATOL:
            raise DomainError(f"cell probabilities sum to {total!r}, expected 1")

    @property
    def theta_y(self) -> float:
        """P(Y=1)."""
        return self.p11 + self.p01

    @property
    def theta_x(self) -> float:
        """P(X=1)."""
        return self.p11 + self.p10

    def p_x1_given_y(self, y: int) -> float:
        """P(X=1 | Y=y); undefined when P(Y=y) is zero."""
        mass = self.theta_y if y == 1 else 1.0 - self.theta_y
        if mass <= 0.0:
            raise DomainError(f"P(Y={y}) is zero; conditional undefined")
        cell = self.p11 if y == 1 else self.p10
        return cell / mass

    def p_y1_given_x(self, x: int) -> float:
        """P(Y=1 | X=x); undefined when P(X=x) is zero."""
        mass = self.theta_x if x == 1 else 1.0 - self.theta_x
        if mass <= 0.0:
            raise DomainError(f"P(X={x}) is zero; conditional undefined")
        cell = self.p11 if x == 1 else self.p01
        return cell / mass

    def cells(self) -> np.ndarray:
        """Cell probabilities ordered (x=1,y=1), (1,0), (0,1), (0,0)."""
        return np.array([self.p11, self.p10, self.p01, self.p00])


# Cell order used by cells() and by the samplers.
_CELL_X = np.array([1, 1, 0, 0], dtype=np.int8)
_CELL_Y = np.array([1, 0, 1, 0], dtype=np.int8)


@dataclass(frozen=True, eq=False)
class LabeledBatch:
    """One step's labeled sample: paired bit arrays of equal length n >= 1."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.int8))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.int8))
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise DomainError("x and y must be 1-d arrays of equal length")
        if len(self.x) < 1:
            raise DomainError("labeled batch must contain at least one pair")

    def __len__(self) -> int:
        return len(self.x)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.x.tolist(), self.y.tolist()))


@dataclass(frozen=True, eq=False)
class UnlabeledBatch:
    """One step's unlabeled sample: a bit array of length N >= 1."""

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.int8))
        if self.x.ndim != 1:
            raise DomainError("x must be a 1-d array")
        if len(self.x) < 1:
            raise DomainError("unlabeled batch must contain at least one point")

    def __len__(self) -> int:
        return len(self.x)


def joint_from_label_shift(
    theta_y: float, p_x1_given_y0: float, p_x1_given_y1: float
) -> JointBernoulli:
    """Assemble the joint table from P(Y) and P(X|Y) (label-shift parameters)."""
    theta_y = _check_prob("theta_y", theta_y)
    q0 = _check_prob("p_x1_given_y0", p_x1_given_y0)
    q1 = _check_prob("p_x1_given_y1", p_x1_given_y1)
    return JointBernoulli(
        p11=theta_y * q1,
        p01=theta_y * (1.0 - q1),
        p10=(1.0 - theta_y) * q0,
        p00=(1.0 - theta_y) * (1.0 - q0),
    )


def joint_from_concept_shift(
    theta_x: float, theta_y_given_x0: float, theta_y_given_x1: float
) -> JointBernoulli:
    """Assemble the joint table from P(X) and P(Y|X) (concept-shift parameters)."""
    theta_x = _check_prob("theta_x", theta_x)
    r0 = _check_prob("theta_y_given_x0", theta_y_given_x0)
    r1 = _check_prob("theta_y_given_x1", theta_y_given_x1)
    return JointBernoulli(
        p11=theta_x * r1,
        p10=theta_x * (1.0 - r1),
        p01=(1.0 - theta_x) * r0,
        p00=(1.0 - theta_x) * (1.0 - r0),
    )


def sample_labeled(dist: JointBernoulli, n: int, rng: RngHandle) -> LabeledBatch:
    """Draw n i.i.d. (x, y) pairs from the joint table."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    g = rng.generator()
    cells = g.choice(4, size=n, p=dist.cells())
    return LabeledBatch(x=_CELL_X[cells], y=_CELL_Y[cells])


def sample_unlabeled(dist: JointBernoulli, size: int, rng: RngHandle) -> UnlabeledBatch:
    """Draw `size` i.i.d. x bits from the marginal of X."""
    if size < 1:
        raise DomainError(f"size must be >= 1, got {size}")
    g = rng.generator()
    return UnlabeledBatch(x=(g.random(size) < dist.theta_x).astype(np.int8))


def phi_correlation(dist: JointBernoulli) -> float:
    """Phi coefficient of the table: the Pearson correlation of two bits."""
    vx = dist.theta_x * (1.0 - dist.theta_x)
    vy = dist.theta_y * (1.0 - dist.theta_y)
    if vx <= 0.0 or vy <= 0.0:
        raise UndefinedCorrelationError("phi undefined for a degenerate marginal")
    return (dist.p11 * dist.p00 - dist.p10 * dist.p01) / math.sqrt(vx * vy)
