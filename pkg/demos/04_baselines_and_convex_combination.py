"""The baseline e-processes and the learned convex combination.

Three families of bets run alongside the imputed process: sequential
likelihood ratios (for the marginals of Y and X and the conditional Y|X),
and a prediction-powered bet whose debiased mean estimate leans on model
predictions over unlabeled data.  Since no single bet dominates in every
setting, a convex combination with exponentiated-gradient weights learns
where the evidence is coming from.
"""

import numpy as np

from predbet import (
    ClassifierKind,
    KTEstimator,
    MarginalLrProcess,
    PpiProcess,
    RngHandle,
    SimplexWeights,
    combine,
    eg_update,
    joint_from_label_shift,
    lr_step,
    sample_labeled,
    sample_unlabeled,
)
from predbet.imputed import exact_conditionals

null = joint_from_label_shift(0.5, 0.35, 0.65)
alt = joint_from_label_shift(0.56, 0.35, 0.65)
cond = exact_conditionals(null)

# --- likelihood ratio, one point at a time ------------------------------
# The add-1/2 predictive starts agnostic and sharpens with data; each
# payoff is the predictive probability over the null probability.
est = KTEstimator()
print("first LR payoffs on a run of ones against a fair null:")
for _ in range(4):
    e, est = lr_step([1], 0.5, est)
    print(f"  predictive was {(est.ones - 1 + 0.5) / (est.total - 1 + 1):.3f}"
          f" -> payoff {e:.3f}")
print()

# --- PPI with online Newton steps ---------------------------------------
# The bet fraction lambda adapts to the centered payoffs; epsilon decides
# how much of the unlabeled prediction signal enters the mean estimate.
ppi = PpiProcess(theta_null=0.5, classifier=ClassifierKind.THRESHOLD)
rng = RngHandle(3)
wealth = 1.0
for t in range(120):
    labeled = sample_labeled(alt, 10, rng.split(t, 0))
    unlabeled = sample_unlabeled(alt, 30, rng.split(t, 1))
    wealth *= ppi.step(labeled, unlabeled, cond)
print(f"PPI after 120 alternative batches: wealth = {wealth:.1f}, "
      f"lambda = {ppi.state.lam:.3f}, epsilon = {ppi.state.epsilon:.3f}")
print()

# --- combining concurrent e-values ---------------------------------------
# Expert 0 pays nothing special; expert 1 is consistently informative.
# EG shifts weight toward it, and the combined per-step e-value climbs
# toward the better expert's.
weights = SimplexWeights.uniform(2)
rng_e = np.random.default_rng(0)
for t in range(400):
    evals = np.array([1.0, 1.25 * float(rng_e.uniform(0.9, 1.1))])
    if t % 100 == 0:
        print(f"step {t:3d}: weights = {np.round(weights.w, 3)}, "
              f"combined e = {combine(evals, weights):.3f}")
    weights = eg_update(weights, evals, eta=0.1)
print(f"final weights after 400 steps: {np.round(weights.w, 3)}")

# A vertex weight recovers a single expert exactly.
vertex = SimplexWeights(np.array([0.0, 1.0]))
print(f"vertex weight selects expert 1 exactly: {combine([3.0, 7.0], vertex)}")

# Two marginal LR processes on the same stream, for contrast: under this
# label-shift alternative the y-signal is strong and the x-signal faint.
lr_y = MarginalLrProcess(null.theta_y)
lr_x = MarginalLrProcess(null.theta_x)
wy = wx = 1.0
rng = RngHandle(9)
for t in range(120):
    labeled = sample_labeled(alt, 10, rng.split(t, 0))
    unlabeled = sample_unlabeled(alt, 30, rng.split(t, 1))
    wy *= lr_y.step(labeled.y)
    wx *= lr_x.step(np.concatenate([labeled.x, unlabeled.x]))
print(f"\nafter 120 batches: lr_y wealth = {wy:.2f}, lr_x wealth = {wx:.2f}")
