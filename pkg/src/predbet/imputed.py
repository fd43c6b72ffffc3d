"""Imputed e-statistic with null-dataset resampling and online gamma tuning.

One step compares an exponential score of predicted labels on the observed
unlabeled batch against the same score computed on M datasets freshly
resampled from the null: the e-value is the observed score's share of the
total, scaled by M+1 (a smoothed rank).  The score's sharpness parameter
gamma is tuned across steps by AdaGrad ascent on the per-step log e-value,
always using data from strictly earlier steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .classifiers import (
    ClassifierKind,
    ConditionalEstimates,
    fit_bayes,
    fit_threshold,
)
from .core import (
    DomainError,
    EnumerationSizeError,
    JointBernoulli,
    LabeledBatch,
    RngHandle,
    ShiftRegime,
    UnlabeledBatch,
    _CELL_X,
    _CELL_Y,
)

__all__ = [
    "ScoreParams",
    "ImputedConfig",
    "GammaTunerState",
    "ImputedStepDiagnostics",
    "score_K",
    "soft_rank_e",
    "soft_rank_e_all",
    "imputed_e_step",
    "grad_log_e_gamma",
    "adagrad_update",
    "exact_conditionals",
    "dataset_score_support",
    "expected_K_bruteforce",
    "ImputedEProcess",
]

ADAGRAD_EPS = 1e-12
ENUMERATION_BIT_BUDGET = 12


@dataclass(frozen=True)
class ScoreParams:
    """Sharpness gamma of the exponential score, boxed away from zero."""

    gamma: float = 1.0
    gamma_min: float = 0.01
    gamma_max: float = 10.0

    def __post_init__(self):
        if self.gamma_min <= 0.0:
            raise DomainError("gamma_min must be positive")
        if not (self.gamma_min <= self.gamma <= self.gamma_max):
            raise DomainError(
                f"gamma {self.gamma} outside [{self.gamma_min}, {self.gamma_max}]"
            )


@dataclass(frozen=True)
class ImputedConfig:
    """Shape of one imputed e-value computation.

    m_null is the number of null-resampled datasets (0 degenerates the
    statistic to the constant 1).  The classifier is refit independently
    on each of the m_null + 1 labeled datasets every step.
    """

    m_null: int
    regime: ShiftRegime
    null_dist: JointBernoulli
    classifier: ClassifierKind
    n: int
    N: int
    tau: float = 0.5

    def __post_init__(self):
        if self.m_null < 0:
            raise DomainError("m_null must be >= 0")
        if self.n < 1 or self.N < 1:
            raise DomainError("batch sizes must be >= 1")


@dataclass(frozen=True)
class GammaTunerState:
    """AdaGrad state for gamma: iterate, accumulated squared gradient, rate."""

    gamma: float = 1.0
    accum_sq_grad: float = 0.0
    learning_rate: float = 0.1
    gamma_min: float = 0.01
    gamma_max: float = 10.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise DomainError("learning_rate must be positive")
        if self.accum_sq_grad < 0.0:
            raise DomainError("accumulated squared gradient must be >= 0")
        ScoreParams(self.gamma, self.gamma_min, self.gamma_max)

    def params(self) -> ScoreParams:
        return ScoreParams(self.gamma, self.gamma_min, self.gamma_max)


@dataclass(frozen=True, eq=False)
class ImputedStepDiagnostics:
    """Per-step internals: scores and one-counts of all m+1 prediction vectors.

    Row 0 is the observed dataset.  The sampled null labeled pairs are
    included so callers can pool them into conditional estimates for
    later steps.
    """

    scores: np.ndarray
    ones: np.ndarray
    gamma: float
    null_labeled_x: np.ndarray
    null_labeled_y: np.ndarray


def score_K(predictions, gamma: float) -> float:
    """Exponential-sum score: #zeros + #ones * exp(gamma); strictly positive."""
    predictions = np.asarray(predictions)
    if predictions.size == 0:
        raise DomainError("predictions must be nonempty")
    if gamma <= 0.0:
        raise DomainError("gamma must be positive")
    c1 = int(np.sum(predictions))
    return (predictions.size - c1) + c1 * math.exp(gamma)


def soft_rank_e(scores) -> float:
    """Smoothed-rank e-value of score 0 among exchangeable scores.

    Returns (m+1) * scores[0] / sum(scores), or 1 when every score is zero.
    """
    scores = np.asarray(scores, dtype=float)
    total = float(np.sum(scores))
    if total == 0.0:
        return 1.0
    return len(scores) * float(scores[0]) / total


def soft_rank_e_all(scores) -> np.ndarray:
    """Every leave-one-in e-value; they sum to m+1 exactly."""
    scores = np.asarray(scores, dtype=float)
    total = float(np.sum(scores))
    if total == 0.0:
        return np.ones(len(scores))
    return len(scores) * scores / total


def _fit_posteriors_many(
    xs_l: np.ndarray,
    ys_l: np.ndarray,
    classifier: ClassifierKind,
    cond: ConditionalEstimates | None,
    tau: float,
) -> np.ndarray:
    """Posterior tables, shape (rows, 2), one refit per labeled dataset row."""
    if classifier is ClassifierKind.THRESHOLD:
        if cond is None:
            raise DomainError("threshold rule requires conditional estimates")
        p_y1 = ys_l.mean(axis=1)
        post = np.empty((len(p_y1), 2))
        for x in (0, 1):
            num = p_y1 * cond.p_x_given_y(x, 1)
            den = num + (1.0 - p_y1) * cond.p_x_given_y(x, 0)
            post[:, x] = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return post
    counts1 = (xs_l == 1).sum(axis=1)
    sums1 = (ys_l * (xs_l == 1)).sum(axis=1)
    counts0 = xs_l.shape[1] - counts1
    sums0 = ys_l.sum(axis=1) - sums1
    post = np.empty((xs_l.shape[0], 2))
    post[:, 0] = np.divide(sums0, counts0, out=np.zeros(len(sums0)), where=counts0 > 0)
    post[:, 1] = np.divide(sums1, counts1, out=np.zeros(len(sums1)), where=counts1 > 0)
    return post


def _predict_many(
    posteriors: np.ndarray,
    xs_u: np.ndarray,
    classifier: ClassifierKind,
    tau: float,
    rng: RngHandle,
) -> np.ndarray:
    """Predictions, shape like xs_u, row i using row i's posterior table."""
    p = np.take_along_axis(posteriors, xs_u.astype(np.intp), axis=1)
    if classifier is ClassifierKind.THRESHOLD:
        return (p > tau).astype(np.int8)
    draws = rng.generator().random(xs_u.shape)
    return (draws < p).astype(np.int8)


def imputed_e_step(
    labeled: LabeledBatch,
    unlabeled: UnlabeledBatch,
    cfg: ImputedConfig,
    params: ScoreParams,
    cond: ConditionalEstimates | None,
    rng: RngHandle,
    null_dist: JointBernoulli | None = None,
) -> tuple[float, ImputedStepDiagnostics]:
    """One imputed e-value from a shared observed batch.

    Draws cfg.m_null fresh datasets from the null, refits the classifier
    independently on each labeled dataset (observed included), scores every
    prediction vector, and returns the smoothed rank of the observed score.
    `null_dist` overrides cfg.null_dist (used by estimated-null workflows);
    the statistic itself is unchanged.
    """
    if len(labeled) != cfg.n or len(unlabeled) != cfg.N:
        raise DomainError("batch sizes do not match the configuration")
    dist = cfg.null_dist if null_dist is None else null_dist
    m = cfg.m_null

    g_null = rng.split(0).generator()
    cells = g_null.choice(4, size=(m, cfg.n), p=dist.cells())
    null_x = _CELL_X[cells]
    null_y = _CELL_Y[cells]
    null_u = (g_null.random((m, cfg.N)) < dist.theta_x).astype(np.int8)

    xs_l = np.vstack([labeled.x[None, :], null_x])
    ys_l = np.vstack([labeled.y[None, :], null_y])
    xs_u = np.vstack([unlabeled.x[None, :], null_u])

    posteriors = _fit_posteriors_many(xs_l, ys_l, cfg.classifier, cond, cfg.tau)
    predictions = _predict_many(posteriors, xs_u, cfg.classifier, cfg.tau, rng.split(1))

    ones = predictions.sum(axis=1).astype(float)
    scores = (cfg.N - ones) + ones * math.exp(params.gamma)
    e = soft_rank_e(scores)
    # Strictly positive scores pin e inside (0, m+1); only m=0 attains m+1.
    assert e > 0.0 and (m == 0 or e < m + 1)
    diag = ImputedStepDiagnostics(
        scores=scores,
        ones=ones,
        gamma=params.gamma,
        null_labeled_x=null_x,
        null_labeled_y=null_y,
    )
    return e, diag


def grad_log_e_gamma(ones, n_unlabeled: int, gamma: float) -> float:
    """Exact d/dgamma of the log e-value, from the one-counts of each vector.

    With K_j = (N - c_j) + c_j * exp(gamma), the derivative of
    log K_0 - log sum_j K_j is c_0 e^g / K_0 - (sum_j c_j) e^g / sum_j K_j.
    """
    if gamma <= 0.0:
        raise DomainError("gamma must be positive")
    ones = np.asarray(ones, dtype=float)
    eg = math.exp(gamma)
    scores = (n_unlabeled - ones) + ones * eg
    return float(ones[0] * eg / scores[0] - ones.sum() * eg / scores.sum())


def adagrad_update(state: GammaTunerState, grad: float) -> GammaTunerState:
    """Ascent step on gamma with per-coordinate AdaGrad scaling, then clamp."""
    accum = state.accum_sq_grad + grad * grad
    step = state.learning_rate * grad / math.sqrt(accum + ADAGRAD_EPS)
    gamma = min(max(state.gamma + step, state.gamma_min), state.gamma_max)
    return replace(state, gamma=gamma, accum_sq_grad=accum)


def exact_conditionals(dist: JointBernoulli) -> ConditionalEstimates:
    """Population P(X=1|Y=y) of a table, for oracles; 1/2 where Y=y has no mass."""
    try:
        q0 = dist.p_x1_given_y(0)
    except DomainError:
        q0 = 0.5
    try:
        q1 = dist.p_x1_given_y(1)
    except DomainError:
        q1 = 0.5
    return ConditionalEstimates(q0, q1)


def _enumeration_bits(n: int, N: int, classifier: ClassifierKind) -> int:
    return 2 * n + N + (N if classifier is ClassifierKind.BAYES else 0)


def dataset_score_support(
    dist: JointBernoulli,
    n: int,
    N: int,
    classifier: ClassifierKind,
    gamma: float,
    cond: ConditionalEstimates | None = None,
    tau: float = 0.5,
) -> list[tuple[float, float]]:
    """Exhaustive (probability, score) support of one dataset draw.

    Enumerates every labeled outcome, every unlabeled outcome, and (for the
    randomized rule) every prediction vector, weighting each by its exact
    probability.  Refuses instances beyond the enumeration budget.
    """
    if _enumeration_bits(n, N, classifier) > ENUMERATION_BIT_BUDGET:
        raise EnumerationSizeError(
            f"instance n={n}, N={N} exceeds the enumeration budget"
        )
    if classifier is ClassifierKind.THRESHOLD and cond is None:
        cond = exact_conditionals(dist)
    cell_p = dist.cells()
    theta_x = dist.theta_x
    eg = math.exp(gamma)
    support: list[tuple[float, float]] = []
    for labeled_cells in product(range(4), repeat=n):
        p_l = math.prod(cell_p[c] for c in labeled_cells)
        if p_l == 0.0:
            continue
        batch = LabeledBatch(
            x=_CELL_X[list(labeled_cells)], y=_CELL_Y[list(labeled_cells)]
        )
        if classifier is ClassifierKind.THRESHOLD:
            model = fit_threshold(batch, cond, tau)
        else:
            model = fit_bayes(batch)
        for xu in product((0, 1), repeat=N):
            p_u = math.prod(theta_x if b else 1.0 - theta_x for b in xu)
            if p_u == 0.0:
                continue
            post = [model.posterior[b] for b in xu]
            if classifier is ClassifierKind.THRESHOLD:
                c1 = sum(1 for q in post if q > tau)
                support.append((p_l * p_u, (N - c1) + c1 * eg))
            else:
                for preds in product((0, 1), repeat=N):
                    p_r = math.prod(
                        q if b else 1.0 - q for q, b in zip(post, preds)
                    )
                    if p_r == 0.0:
                        continue
                    c1 = sum(preds)
                    support.append((p_l * p_u * p_r, (N - c1) + c1 * eg))
    return support


def expected_K_bruteforce(
    cfg: ImputedConfig,
    gamma: float,
    cond: ConditionalEstimates | None = None,
) -> float:
    """Exact null expectation of the score by exhaustive enumeration."""
    support = dataset_score_support(
        cfg.null_dist, cfg.n, cfg.N, cfg.classifier, gamma, cond, cfg.tau
    )
    total_p = math.fsum(p for p, _ in support)
    if abs(total_p - 1.0) > 1e-9:
        raise DomainError(f"enumerated probabilities sum to {total_p!r}")
    return math.fsum(p * k for p, k in support)


class ImputedEProcess:
    """Sequential imputed e-process: fixed-gamma step, then tuner update.

    The gamma used at step t is fully determined by steps before t; the
    gradient computed from step t's diagnostics only shapes gamma for
    step t+1.
    """

    def __init__(self, cfg: ImputedConfig, tuner: GammaTunerState | None = None):
        self.cfg = cfg
        self.tuner = tuner if tuner is not None else GammaTunerState()
        self.last_diagnostics: ImputedStepDiagnostics | None = None

    def step(
        self,
        labeled: LabeledBatch,
        unlabeled: UnlabeledBatch,
        cond: ConditionalEstimates | None,
        rng: RngHandle,
        null_dist: JointBernoulli | None = None,
    ) -> float:
        params = self.tuner.params()
        e, diag = imputed_e_step(
            labeled, unlabeled, self.cfg, params, cond, rng, null_dist
        )
        grad = grad_log_e_gamma(diag.ones, self.cfg.N, params.gamma)
        self.tuner = adagrad_update(self.tuner, grad)
        self.last_diagnostics = diag
        return e
