"""The two prediction rules fitted per labeled batch.

Both rules reduce to a posterior table P(Y=1|X=x) for x in {0, 1}:

* the threshold rule derives the posterior from the batch's empirical
  label frequency combined with class-conditional estimates of X given Y
  (maintained from null data), and predicts 1 when the posterior clears
  a threshold tau;
* the randomized posterior ("Bayes") rule estimates the posterior as the
  per-x empirical label frequency in the batch and predicts by drawing a
  Bernoulli with that probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import DomainError, LabeledBatch, RngHandle, _check_prob

__all__ = [
    "ClassifierKind",
    "ConditionalEstimates",
    "NullConditionalCounts",
    "ClassifierModel",
    "fit_threshold",
    "fit_bayes",
    "predict",
    "predict_batch",
]


class ClassifierKind(Enum):
    THRESHOLD = "threshold"
    BAYES = "bayes"


@dataclass(frozen=True)
class ConditionalEstimates:
    """Estimates of P(X=1|Y=y) with the supporting sample counts per y."""

    p_x1_given_y0_hat: float
    p_x1_given_y1_hat: float
    y0_count: int = 0
    y1_count: int = 0

    def __post_init__(self):
        _check_prob("p_x1_given_y0_hat", self.p_x1_given_y0_hat)
        _check_prob("p_x1_given_y1_hat", self.p_x1_given_y1_hat)
        if self.y0_count < 0 or self.y1_count < 0:
            raise DomainError("support counts must be nonnegative")

    def p_x_given_y(self, x: int, y: int) -> float:
        p1 = self.p_x1_given_y1_hat if y == 1 else self.p_x1_given_y0_hat
        return p1 if x == 1 else 1.0 - p1


class NullConditionalCounts:
    """Running pooled counts of null-labeled data, smoothed into estimates.

    Counts accumulate across steps (never within a step, which would break
    the exchangeability of the step's datasets) and convert to
    probabilities with add-1 smoothing, so estimates are always interior.
    """

    def __init__(self):
        self.x1_given_y0 = 0
        self.x1_given_y1 = 0
        self.y0_total = 0
        self.y1_total = 0

    def add_pairs(self, x: np.ndarray, y: np.ndarray) -> None:
        x = np.asarray(x)
        y = np.asarray(y)
        self.x1_given_y1 += int(np.sum((x == 1) & (y == 1)))
        self.x1_given_y0 += int(np.sum((x == 1) & (y == 0)))
        self.y1_total += int(np.sum(y == 1))
        self.y0_total += int(np.sum(y == 0))

    def estimates(self) -> ConditionalEstimates:
        return ConditionalEstimates(
            p_x1_given_y0_hat=(self.x1_given_y0 + 1) / (self.y0_total + 2),
            p_x1_given_y1_hat=(self.x1_given_y1 + 1) / (self.y1_total + 2),
            y0_count=self.y0_total,
            y1_count=self.y1_total,
        )


@dataclass(frozen=True)
class ClassifierModel:
    """A fitted predictor: posterior table plus the prediction rule.

    posterior[x] is the fitted P(Y=1|X=x).  THRESHOLD predicts
    1{posterior[x] > tau} deterministically; BAYES draws a Bernoulli
    with success probability posterior[x].
    """

    kind: ClassifierKind
    posterior: tuple[float, float]
    tau: float | None = None

    def __post_init__(self):
        _check_prob("posterior[0]", self.posterior[0])
        _check_prob("posterior[1]", self.posterior[1])
        if self.kind is ClassifierKind.THRESHOLD:
            if self.tau is None or not (0.0 < self.tau < 1.0):
                raise DomainError("threshold rule requires tau in (0, 1)")

    def mean_prediction(self, x: int) -> float:
        """Expected value of the prediction at x (deterministic view)."""
        p = self.posterior[x]
        if self.kind is ClassifierKind.THRESHOLD:
            return 1.0 if p > self.tau else 0.0
        return p


def threshold_posterior(p_y1: float, cond: ConditionalEstimates, x: int) -> float:
    """Posterior P(Y=1|x) from a label prior and class-conditional estimates.

    A zero denominator (both class-conditional likelihoods vanish) resolves
    to posterior 0, keeping the predictor total.
    """
    num = p_y1 * cond.p_x_given_y(x, 1)
    den = num + (1.0 - p_y1) * cond.p_x_given_y(x, 0)
    if den <= 0.0:
        return 0.0
    return num / den


def fit_threshold(
    batch: LabeledBatch, cond: ConditionalEstimates, tau: float = 0.5
) -> ClassifierModel:
    """Fit the threshold rule from the batch label frequency and `cond`."""
    if not (0.0 < tau < 1.0):
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    p_y1 = float(np.mean(batch.y))
    posterior = (
        threshold_posterior(p_y1, cond, 0),
        threshold_posterior(p_y1, cond, 1),
    )
    return ClassifierModel(ClassifierKind.THRESHOLD, posterior, tau)


def fit_bayes(batch: LabeledBatch) -> ClassifierModel:
    """Fit the randomized posterior rule from per-x label frequencies.

    An x value unseen in the batch gets posterior 0.
    """
    posterior = []
    for x in (0, 1):
        mask = batch.x == x
        count = int(np.sum(mask))
        posterior.append(float(np.sum(batch.y[mask])) / count if count else 0.0)
    return ClassifierModel(ClassifierKind.BAYES, (posterior[0], posterior[1]))


def predict(model: ClassifierModel, x: int, rng: RngHandle | None = None) -> int:
    """Predict the label of one covariate bit.

    The THRESHOLD rule ignores rng; BAYES requires it for the posterior draw.
    """
    p = model.posterior[x]
    if model.kind is ClassifierKind.THRESHOLD:
        return int(p > model.tau)
    if rng is None:
        raise DomainError("randomized rule needs an rng handle")
    return int(rng.generator().random() < p)


def predict_batch(
    model: ClassifierModel, xs: np.ndarray, rng: RngHandle | None = None
) -> np.ndarray:
    """Vectorized predict() over a bit array; one rng stream for all draws."""
    xs = np.asarray(xs)
    p = np.where(xs == 1, model.posterior[1], model.posterior[0])
    if model.kind is ClassifierKind.THRESHOLD:
        return (p > model.tau).astype(np.int8)
    if rng is None:
        raise DomainError("randomized rule needs an rng handle")
    return (rng.generator().random(len(xs)) < p).astype(np.int8)
