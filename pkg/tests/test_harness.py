"""Tests for experiment configs, trial execution, aggregation, and oracles."""

import json
import math

import numpy as np
import pytest

from predbet.classifiers import ClassifierKind
from predbet.core import (
    DomainError,
    EnumerationSizeError,
    JointBernoulli,
    RngHandle,
    ShiftRegime,
    joint_from_concept_shift,
    joint_from_label_shift,
    phi_correlation,
    _CELL_X,
    _CELL_Y,
)
from predbet.harness import (
    ExperimentConfig,
    PowerCurve,
    brute_force_mean_e,
    builtin_scenarios,
    run_experiment,
    run_trial,
    write_power_curve,
    write_trace_csv,
)
from predbet.imputed import _fit_posteriors_many, _predict_many, exact_conditionals

LS_NULL = joint_from_label_shift(0.5, 0.35, 0.65)
LS_ALT = joint_from_label_shift(0.52, 0.35, 0.65)


def tiny_cfg(**kw):
    base = dict(
        regime=ShiftRegime.LABEL_SHIFT,
        null_dist=LS_NULL,
        alt_dist=LS_ALT,
        n=4,
        N=6,
        M=3,
        steps=12,
        trials=4,
        seed=7,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfigValidation:
    def test_label_shift_requires_fixed_conditionals(self):
        with pytest.raises(DomainError):
            tiny_cfg(alt_dist=joint_from_label_shift(0.52, 0.30, 0.65))

    def test_concept_shift_requires_fixed_x_marginal(self):
        with pytest.raises(DomainError):
            ExperimentConfig(
                regime=ShiftRegime.CONCEPT_SHIFT,
                null_dist=joint_from_concept_shift(0.5, 0.4, 0.7),
                alt_dist=joint_from_concept_shift(0.55, 0.42, 0.72),
                processes=("imputed",),
            )

    def test_unknown_process_rejected(self):
        with pytest.raises(DomainError):
            tiny_cfg(processes=("imputed", "mystery"))

    def test_conv_all_needs_imputed(self):
        with pytest.raises(DomainError):
            tiny_cfg(processes=("lr_y", "conv_all"))

    def test_conv_baselines_needs_members(self):
        with pytest.raises(DomainError):
            tiny_cfg(processes=("imputed", "conv_baselines"))

    def test_estimated_mode_needs_samples(self):
        with pytest.raises(DomainError):
            tiny_cfg(null_mode="estimated", m1=0)

    def test_interior_null_required_for_marginal_processes(self):
        degenerate = JointBernoulli(0.5, 0.5, 0.0, 0.0)  # theta_y = 0.5, theta_x = 1
        with pytest.raises(DomainError):
            ExperimentConfig(
                regime=ShiftRegime.LABEL_SHIFT,
                null_dist=degenerate,
                alt_dist=degenerate,
                processes=("lr_x",),
            )

    def test_round_trip_through_dict(self):
        cfg = tiny_cfg(processes=("imputed", "lr_y", "ppi", "conv_baselines", "conv_all"))
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()

    def test_from_dict_accepts_parametric_distributions(self):
        cfg = ExperimentConfig.from_dict(
            {
                "regime": "label_shift",
                "null": {"theta_y": 0.5, "p_x1_given_y0": 0.35, "p_x1_given_y1": 0.65},
                "alt": {"theta_y": 0.52, "p_x1_given_y0": 0.35, "p_x1_given_y1": 0.65},
                "processes": ["imputed"],
            }
        )
        assert cfg.null_dist.theta_x == pytest.approx(0.5)

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(DomainError):
            ExperimentConfig.from_dict(
                {
                    "regime": "label_shift",
                    "null": {"p11": 0.25, "p10": 0.25, "p01": 0.25, "p00": 0.25},
                    "alt": {"p11": 0.25, "p10": 0.25, "p01": 0.25, "p00": 0.25},
                    "bogus_key": 3,
                }
            )


class TestRunTrial:
    def test_deterministic_given_config_seed_index(self):
        cfg = tiny_cfg()
        a = run_trial(cfg, 2)
        b = run_trial(cfg, 2)
        for name in cfg.processes:
            np.testing.assert_array_equal(a.evalues[name], b.evalues[name])
            assert a.stop_time[name] == b.stop_time[name]

    def test_distinct_trials_differ(self):
        cfg = tiny_cfg()
        a = run_trial(cfg, 0)
        b = run_trial(cfg, 1)
        assert not np.array_equal(a.evalues["imputed"], b.evalues["imputed"])

    def test_wealth_is_cumulative_log_evalue(self):
        cfg = tiny_cfg()
        trace = run_trial(cfg, 0)
        for name in cfg.processes:
            np.testing.assert_allclose(
                trace.log_wealth[name],
                np.cumsum(np.log(trace.evalues[name])),
                atol=1e-12,
            )

    def test_process_traces_isolated_from_flag_choices(self):
        # The lr_y stream must be identical whether or not everything else runs.
        full = tiny_cfg(
            processes=(
                "imputed",
                "lr_y",
                "lr_x",
                "lr_y_given_x",
                "ppi",
                "ppi_one_sided",
                "conv_baselines",
                "conv_all",
            )
        )
        solo = tiny_cfg(processes=("lr_y",))
        np.testing.assert_array_equal(
            run_trial(full, 1).evalues["lr_y"], run_trial(solo, 1).evalues["lr_y"]
        )

    def test_conv_weights_start_uniform_and_stay_on_simplex(self):
        cfg = tiny_cfg(
            processes=("imputed", "lr_y", "ppi", "conv_baselines", "conv_all")
        )
        trace = run_trial(cfg, 0)
        w_all = trace.weights["conv_all"]
        assert w_all.shape == (cfg.steps, 3)  # lr_y, ppi, imputed
        np.testing.assert_allclose(w_all[0], 1 / 3)
        np.testing.assert_allclose(w_all.sum(axis=1), 1.0, atol=1e-12)

    def test_null_run_average_evalue_near_one(self):
        cfg = tiny_cfg(alt_dist=LS_NULL, steps=10, trials=1, M=8)
        means = []
        for i in range(60):
            trace = run_trial(cfg, i)
            means.append(trace.evalues["imputed"].mean())
        means = np.array(means)
        sem = means.std(ddof=1) / math.sqrt(len(means))
        assert abs(means.mean() - 1.0) < 4 * sem

    def test_gamma_path_recorded_and_bounded(self):
        cfg = tiny_cfg()
        trace = run_trial(cfg, 0)
        assert trace.gamma_path.shape == (cfg.steps,)
        assert trace.gamma_path[0] == cfg.gamma_init
        assert np.all(trace.gamma_path >= cfg.gamma_min)
        assert np.all(trace.gamma_path <= cfg.gamma_max)

    def test_estimated_null_mode_runs(self):
        cfg = tiny_cfg(null_mode="estimated", m1=50, m2=50, alt_dist=LS_NULL)
        trace = run_trial(cfg, 0)
        assert np.all(trace.evalues["imputed"] > 0.0)


class TestRunExperiment:
    def test_single_trial_curve_is_stop_indicator(self):
        cfg = tiny_cfg(trials=1, steps=20, alpha=0.3)
        curve = run_experiment(cfg)
        trace = run_trial(cfg, 0)
        for name in cfg.processes:
            stop = trace.stop_time[name]
            expected = np.zeros(cfg.steps)
            if stop is not None:
                expected[stop - 1 :] = 1.0
            np.testing.assert_array_equal(curve.rejection_rate[name], expected)

    def test_rates_nondecreasing_with_binomial_se(self):
        cfg = tiny_cfg(trials=6, steps=15, alpha=0.2)
        curve = run_experiment(cfg)
        for name in cfg.processes:
            rate = curve.rejection_rate[name]
            assert np.all(np.diff(rate) >= 0.0)
            np.testing.assert_allclose(
                curve.std_err[name],
                np.sqrt(rate * (1 - rate) / cfg.trials),
                atol=1e-15,
            )

    def test_worker_count_does_not_change_results(self):
        cfg = tiny_cfg(trials=4, steps=8)
        one = run_experiment(cfg, workers=1)
        two = run_experiment(cfg, workers=2)
        for name in cfg.processes:
            np.testing.assert_array_equal(
                one.rejection_rate[name], two.rejection_rate[name]
            )

    def test_concept_shift_null_run_respects_envelope(self):
        # Regime-level validity spot check; the full-scale version runs in
        # the acceptance suite for the label-shift regime.
        null = joint_from_concept_shift(0.5, 0.4, 0.7)
        cfg = ExperimentConfig(
            regime=ShiftRegime.CONCEPT_SHIFT,
            null_dist=null,
            alt_dist=null,
            n=8,
            N=20,
            M=8,
            steps=150,
            trials=60,
            classifier=ClassifierKind.BAYES,
            processes=(
                "imputed",
                "lr_y",
                "lr_y_given_x",
                "ppi",
                "ppi_one_sided",
                "conv_baselines",
                "conv_all",
            ),
            seed=314,
        )
        curve = run_experiment(cfg, workers=2)
        envelope = cfg.alpha + 2 * math.sqrt(cfg.alpha * (1 - cfg.alpha) / cfg.trials)
        for name in cfg.processes:
            assert curve.rejection_rate[name][-1] <= envelope


def monte_carlo_mean_e(dist, classifier, gamma, draws, seed):
    """Production-path Monte Carlo of the n=N=1, M=1 imputed e-value mean."""
    h = RngHandle(seed)
    g = h.generator()
    cond = exact_conditionals(dist)
    scores = []
    for row in range(2):
        cells = g.choice(4, size=(draws, 1), p=dist.cells())
        xs_u = (g.random((draws, 1)) < dist.theta_x).astype(np.int8)
        post = _fit_posteriors_many(
            _CELL_X[cells], _CELL_Y[cells], classifier, cond, 0.5
        )
        preds = _predict_many(post, xs_u, classifier, 0.5, h.split(row))
        ones = preds.sum(axis=1)
        scores.append((1 - ones) + ones * math.exp(gamma))
    e = 2.0 * scores[0] / (scores[0] + scores[1])
    return float(e.mean()), float(e.std(ddof=1) / math.sqrt(draws))


class TestBruteForceMeanE:
    @pytest.mark.parametrize(
        "null",
        [joint_from_label_shift(0.5, 0.35, 0.65), joint_from_concept_shift(0.5, 0.4, 0.7)],
        ids=["label_shift", "concept_shift"],
    )
    @pytest.mark.parametrize("kind", [ClassifierKind.THRESHOLD, ClassifierKind.BAYES])
    def test_mean_one_under_the_null(self, null, kind):
        regime = (
            ShiftRegime.LABEL_SHIFT
            if null.theta_y == pytest.approx(0.5)
            else ShiftRegime.CONCEPT_SHIFT
        )
        value = brute_force_mean_e(regime, null, kind, gamma=1.0)
        assert abs(value - 1.0) <= 1e-10

    def test_degenerate_null_trivially_one(self):
        dist = joint_from_label_shift(1.0, 0.3, 0.6)
        value = brute_force_mean_e(
            ShiftRegime.LABEL_SHIFT, dist, ClassifierKind.THRESHOLD, gamma=1.0
        )
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_matches_monte_carlo(self):
        exact = brute_force_mean_e(
            ShiftRegime.LABEL_SHIFT, LS_NULL, ClassifierKind.THRESHOLD, gamma=1.0
        )
        mc, se = monte_carlo_mean_e(LS_NULL, ClassifierKind.THRESHOLD, 1.0, 10**6, 17)
        assert abs(exact - mc) < 3 * se

    def test_budget_enforced(self):
        with pytest.raises(EnumerationSizeError):
            brute_force_mean_e(
                ShiftRegime.LABEL_SHIFT,
                LS_NULL,
                ClassifierKind.BAYES,
                gamma=1.0,
                n=2,
                N=4,
                M=6,
            )


class TestScenarioCatalog:
    def test_catalog_contents(self):
        scenarios = builtin_scenarios()
        assert set(scenarios) == {
            "label_shift_low_corr_n30",
            "label_shift_low_corr_n135",
            "label_shift_high_corr_n30",
            "label_shift_high_corr_n135",
            "concept_shift_low_corr",
            "concept_shift_high_corr",
            "concept_shift_non_monotone_low_corr",
            "concept_shift_non_monotone_high_corr",
        }

    def test_correlation_labels(self):
        scenarios = builtin_scenarios()
        low = scenarios["label_shift_low_corr_n30"]
        high = scenarios["label_shift_high_corr_n30"]
        assert phi_correlation(low.null_dist) == pytest.approx(0.3, abs=1e-12)
        assert round(phi_correlation(high.null_dist), 1) == 0.7

    def test_concept_shift_alternative_conditionals(self):
        alt = builtin_scenarios()["concept_shift_low_corr"].alt_dist
        assert alt.p_y1_given_x(0) == pytest.approx(0.42, abs=1e-12)
        assert alt.p_y1_given_x(1) == pytest.approx(0.72, abs=1e-12)

    def test_non_monotone_moves_conditionals_in_opposite_directions(self):
        alt = builtin_scenarios()["concept_shift_non_monotone_low_corr"].alt_dist
        assert alt.p_y1_given_x(0) == pytest.approx(0.42, abs=1e-12)
        assert alt.p_y1_given_x(1) == pytest.approx(0.68, abs=1e-12)

    def test_scales(self):
        desk = builtin_scenarios("desk")["label_shift_low_corr_n30"]
        full = builtin_scenarios("full")["label_shift_low_corr_n30"]
        assert (desk.trials, desk.steps, desk.M) == (200, 300, 32)
        assert (full.trials, full.steps, full.M) == (500, 500, 128)

    def test_label_shift_sizes_and_classifiers(self):
        scenarios = builtin_scenarios()
        assert scenarios["label_shift_low_corr_n135"].N == 135
        assert scenarios["label_shift_low_corr_n30"].classifier is ClassifierKind.THRESHOLD
        assert scenarios["concept_shift_low_corr"].classifier is ClassifierKind.BAYES
        assert scenarios["concept_shift_low_corr"].N == 135


class TestOutputs:
    def test_power_curve_files_and_manifest(self, tmp_path):
        cfg = tiny_cfg(trials=2, steps=5)
        curve = run_experiment(cfg)
        written = write_power_curve(curve, tmp_path)
        names = {p.name for p in written}
        assert "manifest.json" in names
        for proc in cfg.processes:
            path = tmp_path / f"{proc}.csv"
            assert path.exists()
            lines = path.read_text().strip().split("\n")
            assert lines[0] == "step,rejection_rate,std_err"
            assert len(lines) == cfg.steps + 1
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["seed"] == cfg.seed
        assert manifest["config_hash"] == cfg.config_hash()

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tiny_cfg(trials=2, steps=5)
        write_power_curve(run_experiment(cfg), tmp_path / "a")
        write_power_curve(run_experiment(cfg), tmp_path / "b")
        for proc in cfg.processes:
            assert (tmp_path / "a" / f"{proc}.csv").read_bytes() == (
                tmp_path / "b" / f"{proc}.csv"
            ).read_bytes()

    def test_trace_csv(self, tmp_path):
        cfg = tiny_cfg(trials=1, steps=4)
        trace = run_trial(cfg, 0)
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        lines = path.read_text().strip().split("\n")
        assert len(lines) == cfg.steps + 1
        assert lines[0].startswith("step,imputed_evalue,imputed_log_wealth")
