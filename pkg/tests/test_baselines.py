"""Tests for the likelihood-ratio and PPI betting baselines."""

import math

import numpy as np
import pytest

from predbet.baselines import (
    ConditionalLrProcess,
    KTEstimator,
    MarginalLrProcess,
    ONS_COEF,
    PpiProcess,
    PpiState,
    lr_step,
    ons_update,
    ppi_epsilon,
    ppi_expected_payoff_enum,
    ppi_payoff,
    ppi_refit,
    ppi_step,
    ppi_w,
)
from predbet.classifiers import ClassifierKind, ClassifierModel, ConditionalEstimates
from predbet.core import (
    DomainError,
    LabeledBatch,
    RngHandle,
    UnlabeledBatch,
    joint_from_label_shift,
    sample_labeled,
    sample_unlabeled,
)

IDENTITY_F = ClassifierModel(ClassifierKind.BAYES, (0.0, 1.0))


class TestKTEstimator:
    def test_fresh_estimator_matches_fair_null(self):
        e, est = lr_step([1], 0.5, KTEstimator())
        assert e == pytest.approx(1.0, abs=1e-15)
        assert (est.ones, est.total) == (1, 1)

    def test_worked_ratio(self):
        # predictive mean (3 + 1/2) / (4 + 1) = 0.7, against null 0.5
        e, _ = lr_step([1], 0.5, KTEstimator(ones=3, total=4))
        assert e == pytest.approx(1.4, abs=1e-12)

    def test_predictive_mean_always_interior(self):
        rng = np.random.default_rng(0)
        est = KTEstimator()
        for _ in range(500):
            assert 0.0 < est.predictive_mean < 1.0
            est = est.updated(int(rng.integers(0, 2)))

    def test_invalid_counts(self):
        with pytest.raises(DomainError):
            KTEstimator(ones=3, total=2)


class TestLrStep:
    def test_batch_equals_pointwise_product(self):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, size=25)
        whole, est_whole = lr_step(bits, 0.4, KTEstimator())
        prod, est = 1.0, KTEstimator()
        for b in bits:
            e, est = lr_step([int(b)], 0.4, est)
            prod *= e
        assert whole == pytest.approx(prod, rel=1e-12)
        assert est_whole == est

    def test_degenerate_null_rejected(self):
        with pytest.raises(DomainError):
            lr_step([1], 0.0, KTEstimator())
        with pytest.raises(DomainError):
            lr_step([1], 1.0, KTEstimator())

    def test_payoffs_positive(self):
        rng = np.random.default_rng(2)
        est = KTEstimator()
        for _ in range(200):
            e, est = lr_step([int(rng.integers(0, 2))], 0.3, est)
            assert 0.0 < e < math.inf

    def test_conditional_payoff_is_exactly_mean_one(self):
        # For any estimator state, sum_y p_null(y) * q(y)/p_null(y) = 1.
        rng = np.random.default_rng(3)
        for _ in range(200):
            total = int(rng.integers(0, 30))
            est = KTEstimator(ones=int(rng.integers(0, total + 1)), total=total)
            theta = float(rng.uniform(0.05, 0.95))
            mean = sum(
                (theta if y else 1.0 - theta)
                * lr_step([y], theta, est)[0]
                for y in (0, 1)
            )
            assert mean == pytest.approx(1.0, abs=1e-12)

    def test_null_wealth_is_mean_one_at_short_prefixes(self):
        # The product over a correct null is a mean-one martingale; its
        # Monte-Carlo mean is testable at short prefixes before the
        # heavy upper tail dominates.
        rng = np.random.default_rng(3)
        reps, depth = 8000, 5
        wealth = np.ones((reps, depth))
        for r in range(reps):
            est = KTEstimator()
            w = 1.0
            for t in range(depth):
                e, est = lr_step([int(rng.integers(0, 2))], 0.5, est)
                w *= e
                wealth[r, t] = w
        for t in range(depth):
            mean = wealth[:, t].mean()
            se = wealth[:, t].std(ddof=1) / math.sqrt(reps)
            assert abs(mean - 1.0) < 3 * max(se, 1e-12)

    def test_conditional_router_tracks_per_x_estimators(self):
        proc = ConditionalLrProcess((0.4, 0.7))
        xs = [0, 1, 0, 1, 1]
        ys = [1, 0, 0, 1, 1]
        e = proc.step(xs, ys)
        manual = 1.0
        ests = {0: KTEstimator(), 1: KTEstimator()}
        for x, y in zip(xs, ys):
            step_e, ests[x] = lr_step([y], (0.4, 0.7)[x], ests[x])
            manual *= step_e
        assert e == pytest.approx(manual, rel=1e-12)
        assert proc.ests[0].total == 2 and proc.ests[1].total == 3


class TestPpiEpsilon:
    def test_constant_predictions_give_zero(self):
        assert ppi_epsilon([0, 1, 0, 1], [1, 1, 1, 1], 10) == 0.0

    def test_short_history_gives_zero(self):
        assert ppi_epsilon([1], [1], 10) == 0.0

    def test_perfect_correlation_hits_n_over_n_plus_one(self):
        rng = np.random.default_rng(4)
        f = rng.integers(0, 2, size=60).astype(float)
        big_n = 9
        eps = ppi_epsilon(f, f, big_n)
        assert eps == pytest.approx(big_n / (big_n + 1), abs=1e-12)

    def test_anticorrelation_is_negative_and_clamped(self):
        rng = np.random.default_rng(5)
        f = rng.integers(0, 2, size=60).astype(float)
        eps = ppi_epsilon(1.0 - f, f, 9)
        assert -1.0 <= eps < 0.0

    def test_matches_counts_shortcut(self):
        from predbet.baselines import _epsilon_from_counts

        rng = np.random.default_rng(6)
        for _ in range(100):
            m = int(rng.integers(2, 40))
            xs = rng.integers(0, 2, size=m)
            ys = rng.integers(0, 2, size=m)
            f0, f1 = rng.random(2)
            fx = np.where(xs == 1, f1, f0)
            big_n = int(rng.integers(1, 20))
            direct = ppi_epsilon(ys, fx, big_n)
            n1 = int(xs.sum())
            shortcut = _epsilon_from_counts(
                m - n1, n1,
                int(ys[xs == 0].sum()), int(ys[xs == 1].sum()),
                f0, f1, big_n,
            )
            assert shortcut == pytest.approx(direct, abs=1e-12)


class TestPpiPayoff:
    def test_no_bet_pays_one(self):
        state = PpiState(lam=0.0, epsilon=0.5, f_hat=IDENTITY_F)
        assert ppi_payoff(1, 0, [1, 0], state, 0.5) == pytest.approx(1.0)

    def test_max_bet_on_positive_label(self):
        state = PpiState(lam=0.5, epsilon=0.0)
        assert ppi_payoff(1, 0, [0], state, 0.5) == pytest.approx(1.25, abs=1e-12)

    def test_correction_vanishes_when_slice_mean_matches(self):
        state_eps = PpiState(lam=0.3, epsilon=1.0, f_hat=IDENTITY_F)
        state_zero = PpiState(lam=0.3, epsilon=0.0, f_hat=IDENTITY_F)
        # slice of all-x matches f(x): the debias term cancels.
        assert ppi_payoff(1, 1, [1, 1], state_eps, 0.5) == pytest.approx(
            ppi_payoff(1, 1, [1, 1], state_zero, 0.5), abs=1e-15
        )

    def test_empty_slice_rejected(self):
        with pytest.raises(DomainError):
            ppi_w(1, 0, [], PpiState())

    def test_payoffs_nonnegative_over_random_states(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            state = PpiState(
                lam=float(rng.uniform(-0.5, 0.5)),
                epsilon=float(rng.uniform(-1, 1)),
                f_hat=ClassifierModel(
                    ClassifierKind.BAYES, (float(rng.random()), float(rng.random()))
                ),
            )
            y, x = int(rng.integers(0, 2)), int(rng.integers(0, 2))
            chunk = rng.integers(0, 2, size=int(rng.integers(1, 6)))
            theta = float(rng.uniform(0.05, 0.95))
            assert ppi_payoff(y, x, chunk, state, theta) >= 0.0


class TestOnsUpdate:
    def test_on_target_payoff_keeps_lambda(self):
        state = PpiState(lam=0.2, a=2.0)
        new = ons_update(state, 0.5, 0.5)
        assert new.lam == pytest.approx(0.2)
        assert new.a == pytest.approx(2.0)

    def test_worked_first_update_clamps(self):
        state = PpiState(lam=0.0, a=1.0)
        new = ons_update(state, 1.0, 0.5)
        g = 0.5
        raw = 0.0 + ONS_COEF * g / (1.0 + g * g)
        assert new.a == pytest.approx(1.25)
        assert new.lam == pytest.approx(min(raw, 0.5), abs=1e-12)
        assert raw > 0.5  # this instance does clamp

    def test_one_sided_never_goes_negative(self):
        state = PpiState(lam=0.0, lam_lo=0.0)
        for _ in range(50):
            state = ons_update(state, 0.0, 0.9)  # persistently negative signal
            assert state.lam == 0.0

    def test_bounds_after_random_streams(self):
        rng = np.random.default_rng(8)
        for lam_lo in (-0.5, 0.0):
            state = PpiState(lam_lo=lam_lo)
            for _ in range(2000):
                w = float(rng.uniform(-1, 2))
                state = ons_update(state, w, 0.5)
                assert lam_lo <= state.lam <= 0.5

    def test_literal_gradient_mode(self):
        state = PpiState(lam=0.1, centered=False)
        new = ons_update(state, 0.8, 0.5)
        g = 0.8 / (1.0 + 0.8 * 0.1)
        assert new.a == pytest.approx(1.0 + g * g, abs=1e-12)


class TestPpiStep:
    def make_batches(self, seed=0, n=4, big_n=8, dist=None):
        dist = dist or joint_from_label_shift(0.5, 0.35, 0.65)
        labeled = sample_labeled(dist, n, RngHandle(seed, 0))
        unlabeled = sample_unlabeled(dist, big_n, RngHandle(seed, 1))
        return labeled, unlabeled

    def test_zero_lambda_throughout_pays_one(self):
        # One-sided state on all-zero labels: lambda pinned at 0.
        labeled = LabeledBatch(np.array([1, 0, 1]), np.zeros(3, dtype=np.int8))
        unlabeled = UnlabeledBatch(np.array([0, 1, 0], dtype=np.int8))
        state = PpiState(lam=0.0, lam_lo=0.0, epsilon=0.0)
        e, out = ppi_step(labeled, unlabeled, state, 0.5)
        assert e == pytest.approx(1.0, abs=1e-15)
        assert out.lam == 0.0

    def test_single_point_matches_manual_recursion(self):
        labeled = LabeledBatch(np.array([1]), np.array([1]))
        unlabeled = UnlabeledBatch(np.array([0, 1], dtype=np.int8))
        state = PpiState(lam=0.25, epsilon=0.5, f_hat=IDENTITY_F)
        e, out = ppi_step(labeled, unlabeled, state, 0.5)
        w = ppi_w(1, 1, unlabeled.x, state)
        assert e == pytest.approx(1.0 + 0.25 * (w - 0.5), abs=1e-15)
        manual = ons_update(state, w, 0.5)
        assert out.lam == pytest.approx(manual.lam)
        assert out.a == pytest.approx(manual.a)

    def test_slices_are_disjoint_and_exhaustive(self):
        from predbet.baselines import _slices

        got = _slices(4, 11)
        covered = []
        for s in got:
            covered.extend(range(11)[s])
        assert covered == list(range(11))
        widths = [s.stop - s.start for s in got]
        assert widths == [2, 2, 2, 5]  # floor(11/4) with remainder at the end

    def test_fewer_unlabeled_than_labeled(self):
        labeled = LabeledBatch(np.array([1, 0, 1, 0]), np.array([1, 1, 0, 0]))
        unlabeled = UnlabeledBatch(np.array([1, 0], dtype=np.int8))
        state = PpiState(lam=0.1, epsilon=0.3, f_hat=IDENTITY_F)
        e, _ = ppi_step(labeled, unlabeled, state, 0.5)
        assert e > 0.0

    def test_history_absorbed_after_batch(self):
        labeled, unlabeled = self.make_batches()
        state = PpiState()
        _, out = ppi_step(labeled, unlabeled, state, 0.5)
        assert out.history_size == len(labeled)
        assert out.hist_y1 == int(labeled.y[labeled.x == 1].sum())

    def test_null_expected_payoff_is_one_by_enumeration(self):
        dist = joint_from_label_shift(0.5, 0.35, 0.65)
        for slice_size in (1, 2, 3):
            state = PpiState(lam=0.3, epsilon=0.7, f_hat=IDENTITY_F, a=2.0)
            val = ppi_expected_payoff_enum(
                state, dist, theta_null=dist.theta_y, slice_size=slice_size
            )
            assert val == pytest.approx(1.0, abs=1e-10)

    def test_enum_detects_alternative(self):
        # theta above the null mean with a positive bet: expectation > 1.
        dist = joint_from_label_shift(0.6, 0.35, 0.65)
        state = PpiState(lam=0.3, epsilon=0.0)
        val = ppi_expected_payoff_enum(state, dist, theta_null=0.5, slice_size=1)
        assert val > 1.0


class TestPpiRefit:
    def test_empty_history_gives_neutral_model(self):
        state = ppi_refit(PpiState(), ClassifierKind.BAYES, None, 0.5, 8)
        assert state.epsilon == 0.0
        assert state.f_hat.mean_prediction(0) == 0.0

    def test_threshold_refit_uses_history_mean(self):
        cond = ConditionalEstimates(0.35, 0.65)
        state = PpiState(hist_n0=4, hist_n1=4, hist_y0=2, hist_y1=2)
        out = ppi_refit(state, ClassifierKind.THRESHOLD, cond, 0.5, 8)
        assert out.f_hat.kind is ClassifierKind.THRESHOLD
        # history mean 0.5 with the balanced conditionals: posterior = cond
        assert out.f_hat.posterior[1] == pytest.approx(0.65, abs=1e-12)

    def test_refit_never_mixes_into_batch(self):
        # ppi_step leaves f_hat and epsilon untouched.
        labeled = LabeledBatch(np.array([1, 0]), np.array([1, 0]))
        unlabeled = UnlabeledBatch(np.array([1, 0], dtype=np.int8))
        state = PpiState(epsilon=0.4, f_hat=IDENTITY_F)
        _, out = ppi_step(labeled, unlabeled, state, 0.5)
        assert out.epsilon == 0.4
        assert out.f_hat is state.f_hat


class TestPpiProcess:
    def run_process(self, proc, dist, steps=60, n=6, big_n=12, seed=0):
        cond = ConditionalEstimates(dist.p_x1_given_y(0), dist.p_x1_given_y(1))
        ws = []
        wealth = 1.0
        for t in range(steps):
            labeled = sample_labeled(dist, n, RngHandle(seed, t, (0,)))
            unlabeled = sample_unlabeled(dist, big_n, RngHandle(seed, t, (1,)))
            wealth *= proc.step(labeled, unlabeled, cond, w_sink=ws)
        return wealth, np.array(ws)

    def test_one_sided_lambda_stays_nonnegative(self):
        dist = joint_from_label_shift(0.5, 0.35, 0.65)
        proc = PpiProcess(0.5, ClassifierKind.THRESHOLD, one_sided=True)
        self.run_process(proc, dist, seed=3)
        assert proc.state.lam >= 0.0
        assert proc.state.lam_lo == 0.0

    def test_variance_reduction_under_high_correlation(self):
        dist = joint_from_label_shift(0.5, 0.2, 0.9)  # phi ~ 0.7
        tuned = PpiProcess(0.5, ClassifierKind.THRESHOLD)
        fixed = PpiProcess(0.5, ClassifierKind.THRESHOLD, force_epsilon_zero=True)
        _, ws_tuned = self.run_process(tuned, dist, steps=120, seed=5)
        _, ws_fixed = self.run_process(fixed, dist, steps=120, seed=5)
        assert ws_tuned.var(ddof=1) <= ws_fixed.var(ddof=1)

    def test_identical_streams_are_deterministic(self):
        dist = joint_from_label_shift(0.5, 0.35, 0.65)
        a = PpiProcess(0.5, ClassifierKind.THRESHOLD)
        b = PpiProcess(0.5, ClassifierKind.THRESHOLD)
        wa, _ = self.run_process(a, dist, seed=9)
        wb, _ = self.run_process(b, dist, seed=9)
        assert wa == wb
