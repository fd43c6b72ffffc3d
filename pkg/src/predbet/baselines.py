"""Baseline e-processes: sequential likelihood ratios and PPI betting.

The likelihood-ratio processes bet the smoothed empirical-Bernoulli
predictive (add-1/2) against a fixed null probability, one observation at
a time.  The PPI process bets a wealth fraction lambda on a debiased mean
estimate that combines each labeled point with model predictions on a
disjoint slice of the unlabeled batch; lambda follows an online Newton
step and the debiasing weight epsilon is chosen to shrink the estimate's
variance from history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .classifiers import (
    ClassifierKind,
    ClassifierModel,
    ConditionalEstimates,
    threshold_posterior,
)
from .core import (
    DomainError,
    EnumerationSizeError,
    JointBernoulli,
    LabeledBatch,
    UnlabeledBatch,
)

__all__ = [
    "KTEstimator",
    "lr_step",
    "MarginalLrProcess",
    "ConditionalLrProcess",
    "PpiState",
    "ppi_epsilon",
    "ppi_w",
    "ppi_payoff",
    "ons_update",
    "ppi_refit",
    "ppi_step",
    "PpiProcess",
    "ppi_expected_payoff_enum",
]

# Online Newton step scaling from the standard wealth-growth analysis.
ONS_COEF = 2.0 / (2.0 - math.log(3.0))


@dataclass(frozen=True)
class KTEstimator:
    """Add-1/2 Bernoulli predictive: interior for every count state."""

    ones: int = 0
    total: int = 0

    def __post_init__(self):
        if not (0 <= self.ones <= self.total):
            raise DomainError("need 0 <= ones <= total")

    @property
    def predictive_mean(self) -> float:
        return (self.ones + 0.5) / (self.total + 1.0)

    def updated(self, bit: int) -> "KTEstimator":
        return KTEstimator(self.ones + int(bit), self.total + 1)


def lr_step(y_batch, theta_null: float, est: KTEstimator) -> tuple[float, KTEstimator]:
    """Product of predictive-vs-null likelihood ratios over a bit batch.

    Each bit is scored with the predictive mean fitted on everything
    before it, then absorbed into the estimator.
    """
    if not (0.0 < theta_null < 1.0):
        raise DomainError("theta_null must lie strictly inside (0, 1)")
    e = 1.0
    for y in np.asarray(y_batch).tolist():
        q = est.predictive_mean if y else 1.0 - est.predictive_mean
        p = theta_null if y else 1.0 - theta_null
        e *= q / p
        est = est.updated(y)
    return e, est


class MarginalLrProcess:
    """Sequential likelihood ratio for the marginal of one bit variable."""

    def __init__(self, theta_null: float):
        if not (0.0 < theta_null < 1.0):
            raise DomainError("theta_null must lie strictly inside (0, 1)")
        self.theta_null = theta_null
        self.est = KTEstimator()

    def step(self, bits) -> float:
        e, self.est = lr_step(bits, self.theta_null, self.est)
        return e


class ConditionalLrProcess:
    """Sequential likelihood ratio for Y given X: one estimator per x value."""

    def __init__(self, theta_null_given_x: tuple[float, float]):
        for v in theta_null_given_x:
            if not (0.0 < v < 1.0):
                raise DomainError("conditional nulls must lie inside (0, 1)")
        self.theta_null = theta_null_given_x
        self.ests = {0: KTEstimator(), 1: KTEstimator()}

    def step(self, x_bits, y_bits) -> float:
        e = 1.0
        for x, y in zip(np.asarray(x_bits).tolist(), np.asarray(y_bits).tolist()):
            step_e, self.ests[x] = lr_step([y], self.theta_null[x], self.ests[x])
            e *= step_e
        return e


_CONSTANT_ZERO = ClassifierModel(ClassifierKind.BAYES, (0.0, 0.0))


@dataclass(frozen=True)
class PpiState:
    """Betting state: fraction, Newton curvature, debias weight, predictor.

    History is carried as sufficient statistics over past labeled pairs
    (the predictor input is a single bit, so per-x counts are exact).
    """

    lam: float = 0.0
    a: float = 1.0
    epsilon: float = 0.0
    f_hat: ClassifierModel = _CONSTANT_ZERO
    lam_lo: float = -0.5
    centered: bool = True
    hist_n0: int = 0
    hist_n1: int = 0
    hist_y0: int = 0
    hist_y1: int = 0

    def __post_init__(self):
        if not (-0.5 <= self.lam_lo <= 0.0):
            raise DomainError("lam_lo must lie in [-1/2, 0]")
        if not (self.lam_lo - 1e-12 <= self.lam <= 0.5 + 1e-12):
            raise DomainError(f"lambda {self.lam} outside [{self.lam_lo}, 1/2]")
        if not (-1.0 <= self.epsilon <= 1.0):
            raise DomainError("epsilon must lie in [-1, 1]")
        if self.a <= 0.0:
            raise DomainError("curvature must be positive")

    @property
    def history_size(self) -> int:
        return self.hist_n0 + self.hist_n1


def ppi_epsilon(y_hist, fx_hist, n_unlabeled: int) -> float:
    """Variance-minimizing debias weight from past (label, prediction) pairs.

    Cov(Y, f(X)) / ((1 + 1/N) Var(f(X))), clamped to [-1, 1]; zero when the
    history is shorter than two points or the predictions are constant.
    """
    y = np.asarray(y_hist, dtype=float)
    f = np.asarray(fx_hist, dtype=float)
    if y.shape != f.shape or y.ndim != 1:
        raise DomainError("history arrays must be 1-d and equal length")
    if len(y) < 2:
        return 0.0
    var = float(np.var(f, ddof=1))
    if var <= 0.0:
        return 0.0
    cov = float(np.cov(y, f, ddof=1)[0, 1])
    eps = cov / ((1.0 + 1.0 / n_unlabeled) * var)
    return min(max(eps, -1.0), 1.0)


def _epsilon_from_counts(
    n0: int, n1: int, y0: int, y1: int, f0: float, f1: float, n_unlabeled: int
) -> float:
    """ppi_epsilon specialized to binary-x count statistics."""
    m = n0 + n1
    if m < 2:
        return 0.0
    sum_f = n0 * f0 + n1 * f1
    sum_f2 = n0 * f0 * f0 + n1 * f1 * f1
    var = (sum_f2 - sum_f * sum_f / m) / (m - 1)
    if var <= 0.0:
        return 0.0
    sum_y = y0 + y1
    sum_yf = f0 * y0 + f1 * y1
    cov = (sum_yf - sum_y * sum_f / m) / (m - 1)
    eps = cov / ((1.0 + 1.0 / n_unlabeled) * var)
    return min(max(eps, -1.0), 1.0)


def ppi_w(y: int, x: int, unlabeled_slice, state: PpiState) -> float:
    """Debiased mean estimate from one labeled point and its slice."""
    xs = np.asarray(unlabeled_slice)
    if xs.size == 0:
        raise DomainError("unlabeled slice must be nonempty")
    f0 = state.f_hat.mean_prediction(0)
    f1 = state.f_hat.mean_prediction(1)
    f_bar = float(np.mean(np.where(xs == 1, f1, f0)))
    fx = f1 if x == 1 else f0
    return float(y) + state.epsilon * (f_bar - fx)


def ppi_payoff(
    y: int, x: int, unlabeled_slice, state: PpiState, theta_null: float
) -> float:
    """Betting payoff 1 + lambda (w - theta_null); nonnegative by the clamps."""
    w = ppi_w(y, x, unlabeled_slice, state)
    return 1.0 + state.lam * (w - theta_null)


def ons_update(state: PpiState, w: float, theta_null: float) -> PpiState:
    """Online Newton step on the betting fraction after observing w."""
    d = w - theta_null
    denom = 1.0 + state.lam * d
    assert denom > 0.0, "payoff construction guarantees a positive denominator"
    if state.centered:
        g = d / denom
    else:
        lit = 1.0 + w * state.lam
        g = w / lit if lit > 0.0 else 0.0
    a = state.a + g * g
    lam = min(max(state.lam + ONS_COEF * g / a, state.lam_lo), 0.5)
    return replace(state, lam=lam, a=a)


def ppi_refit(
    state: PpiState,
    classifier: ClassifierKind,
    cond: ConditionalEstimates | None,
    tau: float,
    n_unlabeled: int,
) -> PpiState:
    """Refit the predictor and debias weight from history, before a batch."""
    n0, n1 = state.hist_n0, state.hist_n1
    y0, y1 = state.hist_y0, state.hist_y1
    m = n0 + n1
    if m == 0:
        return replace(state, f_hat=_CONSTANT_ZERO, epsilon=0.0)
    if classifier is ClassifierKind.THRESHOLD:
        if cond is None:
            raise DomainError("threshold predictor requires conditional estimates")
        p_y1 = (y0 + y1) / m
        f_hat = ClassifierModel(
            ClassifierKind.THRESHOLD,
            (threshold_posterior(p_y1, cond, 0), threshold_posterior(p_y1, cond, 1)),
            tau,
        )
    else:
        f_hat = ClassifierModel(
            ClassifierKind.BAYES,
            (y0 / n0 if n0 else 0.0, y1 / n1 if n1 else 0.0),
        )
    eps = _epsilon_from_counts(
        n0, n1, y0, y1, f_hat.mean_prediction(0), f_hat.mean_prediction(1), n_unlabeled
    )
    return replace(state, f_hat=f_hat, epsilon=eps)


def _slices(n: int, size: int) -> list[slice]:
    """n disjoint slices of floor(size/n) with the remainder on the last."""
    width = size // n
    bounds = [i * width for i in range(n)] + [size]
    return [slice(bounds[i], bounds[i + 1]) for i in range(n)]


def ppi_step(
    labeled: LabeledBatch,
    unlabeled: UnlabeledBatch,
    state: PpiState,
    theta_null: float,
    w_sink: list | None = None,
) -> tuple[float, PpiState]:
    """One batch of PPI bets: payoff with the current fraction, then update.

    The unlabeled batch is split into disjoint per-point slices so each
    payoff stays conditionally fair; the predictor and epsilon are used
    as-is (refit belongs before the batch).  When there are fewer
    unlabeled than labeled points, the first len(unlabeled) labeled points
    get one unlabeled point each and the rest see the full batch.
    """
    n = len(labeled)
    size = len(unlabeled)
    if size >= n:
        slices = _slices(n, size)
    else:
        slices = [slice(i, i + 1) for i in range(size)]
        slices += [slice(0, size)] * (n - size)
    e = 1.0
    for i in range(n):
        y = int(labeled.y[i])
        x = int(labeled.x[i])
        chunk = unlabeled.x[slices[i]]
        w = ppi_w(y, x, chunk, state)
        if w_sink is not None:
            w_sink.append(w)
        e *= 1.0 + state.lam * (w - theta_null)
        state = ons_update(state, w, theta_null)
    state = replace(
        state,
        hist_n0=state.hist_n0 + int(np.sum(labeled.x == 0)),
        hist_n1=state.hist_n1 + int(np.sum(labeled.x == 1)),
        hist_y0=state.hist_y0 + int(np.sum(labeled.y[labeled.x == 0])),
        hist_y1=state.hist_y1 + int(np.sum(labeled.y[labeled.x == 1])),
    )
    return e, state


class PpiProcess:
    """Sequential PPI e-process over batches: refit, bet, absorb history."""

    def __init__(
        self,
        theta_null: float,
        classifier: ClassifierKind,
        tau: float = 0.5,
        one_sided: bool = False,
        centered: bool = True,
        force_epsilon_zero: bool = False,
    ):
        if not (0.0 < theta_null < 1.0):
            raise DomainError("theta_null must lie strictly inside (0, 1)")
        self.theta_null = theta_null
        self.classifier = classifier
        self.tau = tau
        self.force_epsilon_zero = force_epsilon_zero
        self.state = PpiState(lam_lo=0.0 if one_sided else -0.5, centered=centered)

    def step(
        self,
        labeled: LabeledBatch,
        unlabeled: UnlabeledBatch,
        cond: ConditionalEstimates | None = None,
        w_sink: list | None = None,
    ) -> float:
        self.state = ppi_refit(
            self.state, self.classifier, cond, self.tau, len(unlabeled)
        )
        if self.force_epsilon_zero:
            self.state = replace(self.state, epsilon=0.0)
        e, self.state = ppi_step(
            labeled, unlabeled, self.state, self.theta_null, w_sink
        )
        return e


def ppi_expected_payoff_enum(
    state: PpiState,
    null_dist: JointBernoulli,
    theta_null: float,
    slice_size: int = 1,
) -> float:
    """Exact null expectation of one PPI payoff by exhaustive enumeration.

    Enumerates the labeled point and its unlabeled slice with the betting
    state held fixed; equals 1 whenever theta_null is the null mean of Y.
    """
    if slice_size < 1:
        raise DomainError("slice_size must be >= 1")
    if 2 + slice_size > 12:
        raise EnumerationSizeError("slice too large for exhaustive enumeration")
    cell_p = null_dist.cells()
    cell_x = (1, 1, 0, 0)
    cell_y = (1, 0, 1, 0)
    theta_x = null_dist.theta_x
    total = 0.0
    for c in range(4):
        if cell_p[c] == 0.0:
            continue
        for xs in product((0, 1), repeat=slice_size):
            p_u = math.prod(theta_x if b else 1.0 - theta_x for b in xs)
            if p_u == 0.0:
                continue
            payoff = ppi_payoff(cell_y[c], cell_x[c], np.array(xs), state, theta_null)
            total += cell_p[c] * p_u * payoff
    return total
