"""Anytime-valid sequential testing by betting on predictions.

Given per-step batches of n labeled pairs and N unlabeled covariates, the
imputed e-process scores predicted labels on the unlabeled batch against
the same score on datasets resampled from the null, accumulating wealth
that rejects the null whenever it crosses 1/alpha.  Likelihood-ratio and
prediction-powered baselines, a learned convex combination, robustness
bounds for estimated nulls, and a Monte-Carlo harness round out the kit.
"""

from .core import (
    DomainError,
    EnumerationSizeError,
    JointBernoulli,
    LabeledBatch,
    RngHandle,
    ShiftRegime,
    UnlabeledBatch,
    UndefinedCorrelationError,
    joint_from_concept_shift,
    joint_from_label_shift,
    phi_correlation,
    sample_labeled,
    sample_unlabeled,
)
from .classifiers import (
    ClassifierKind,
    ClassifierModel,
    ConditionalEstimates,
    NullConditionalCounts,
    fit_bayes,
    fit_threshold,
    predict,
    predict_batch,
)
from .imputed import (
    GammaTunerState,
    ImputedConfig,
    ImputedEProcess,
    ScoreParams,
    adagrad_update,
    expected_K_bruteforce,
    grad_log_e_gamma,
    imputed_e_step,
    score_K,
    soft_rank_e,
    soft_rank_e_all,
)
from .baselines import (
    ConditionalLrProcess,
    KTEstimator,
    MarginalLrProcess,
    PpiProcess,
    PpiState,
    lr_step,
    ons_update,
    ppi_epsilon,
    ppi_expected_payoff_enum,
    ppi_payoff,
    ppi_step,
    ppi_w,
)
from .combiner import (
    EProcessState,
    SimplexWeights,
    check_rejection,
    combine,
    eg_update,
    wealth_update,
)
from .robustness import (
    TvBoundInputs,
    estimate_null_from_data,
    sequence_tv_bound,
    step_tv_bound,
    tv_categorical,
)
from .harness import (
    ExperimentConfig,
    PowerCurve,
    TrialTrace,
    brute_force_mean_e,
    builtin_scenarios,
    run_experiment,
    run_trial,
    write_power_curve,
    write_trace_csv,
)

__version__ = "0.1.0"
