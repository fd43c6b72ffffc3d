"""Experiment configuration, Monte-Carlo execution, and validity oracles.

A trial is one full sequential run: per step, a shared labeled/unlabeled
batch is drawn and every enabled e-process consumes that same batch, so
power comparisons are paired.  Trials own independent random streams
keyed by trial index, which makes aggregate output identical no matter
how the work is scheduled.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product, repeat
from pathlib import Path

import numpy as np

from .baselines import ConditionalLrProcess, MarginalLrProcess, PpiProcess
from .classifiers import ClassifierKind, NullConditionalCounts
from .combiner import EProcessState, SimplexWeights, combine, eg_update, wealth_update
from .core import (
    DomainError,
    EnumerationSizeError,
    JointBernoulli,
    RngHandle,
    ShiftRegime,
    joint_from_concept_shift,
    joint_from_label_shift,
    sample_labeled,
    sample_unlabeled,
)
from .imputed import (
    GammaTunerState,
    ImputedConfig,
    ImputedEProcess,
    dataset_score_support,
)
from .robustness import NullEstimationPool

__all__ = [
    "PROCESSES",
    "BASELINE_PROCESSES",
    "ExperimentConfig",
    "TrialTrace",
    "PowerCurve",
    "run_trial",
    "run_experiment",
    "brute_force_mean_e",
    "builtin_scenarios",
    "write_power_curve",
    "write_trace_csv",
]

PROCESSES = (
    "imputed",
    "lr_y",
    "lr_x",
    "lr_y_given_x",
    "ppi",
    "ppi_one_sided",
    "conv_baselines",
    "conv_all",
)
# Baselines eligible for the convex combinations, in weight order.
BASELINE_PROCESSES = ("lr_y", "lr_x", "lr_y_given_x", "ppi")

# Branch roles under each step's handle, so enabling one process never
# perturbs another's draws.
_ROLE_OBSERVED = 0
_ROLE_IMPUTED = 1
_ROLE_NULL_EST = 2


def _conditionals_match(a: JointBernoulli, b: JointBernoulli) -> bool:
    for y in (0, 1):
        mass_a = a.theta_y if y == 1 else 1.0 - a.theta_y
        mass_b = b.theta_y if y == 1 else 1.0 - b.theta_y
        if mass_a <= 0.0 or mass_b <= 0.0:
            continue  # conditional unconstrained where a class has no mass
        if abs(a.p_x1_given_y(y) - b.p_x1_given_y(y)) > 1e-9:
            return False
    return True


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation scenario: distributions, sizes, processes, seeds.

    null_mode "estimated" replaces the exact null law fed to the imputed
    process with a running add-1 estimate built from m1 labeled and m2
    unlabeled fresh null samples per step; the statistic is unchanged.
    composite_null documents that the one-sided composite hypothesis is
    being tested at its boundary; it does not alter any computation.
    """

    regime: ShiftRegime
    null_dist: JointBernoulli
    alt_dist: JointBernoulli
    n: int = 15
    N: int = 30
    M: int = 32
    steps: int = 300
    trials: int = 200
    alpha: float = 0.05
    processes: tuple[str, ...] = (
        "imputed",
        "lr_y",
        "lr_x",
        "ppi",
        "conv_baselines",
        "conv_all",
    )
    classifier: ClassifierKind = ClassifierKind.THRESHOLD
    tau: float = 0.5
    gamma_init: float = 1.0
    gamma_min: float = 0.01
    gamma_max: float = 10.0
    adagrad_lr: float = 0.1
    eg_eta: float = 0.1
    seed: int = 0
    null_mode: str = "exact"
    m1: int = 200
    m2: int = 200
    ons_centered: bool = True
    composite_null: bool = False

    def __post_init__(self):
        if self.steps < 1 or self.trials < 1:
            raise DomainError("steps and trials must be >= 1")
        if self.n < 1 or self.N < 1 or self.M < 0:
            raise DomainError("n, N must be >= 1 and M >= 0")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        if self.null_mode not in ("exact", "estimated"):
            raise DomainError("null_mode must be 'exact' or 'estimated'")
        if self.null_mode == "estimated" and (self.m1 < 1 or self.m2 < 1):
            raise DomainError("estimated null mode needs m1, m2 >= 1")
        unknown = set(self.processes) - set(PROCESSES)
        if unknown:
            raise DomainError(f"unknown processes: {sorted(unknown)}")
        if len(set(self.processes)) != len(self.processes):
            raise DomainError("duplicate process names")
        if self.regime is ShiftRegime.LABEL_SHIFT:
            if not _conditionals_match(self.null_dist, self.alt_dist):
                raise DomainError(
                    "label shift requires identical P(X|Y) in null and alternative"
                )
        else:
            if abs(self.null_dist.theta_x - self.alt_dist.theta_x) > 1e-9:
                raise DomainError(
                    "concept shift requires identical P(X) in null and alternative"
                )
        has = set(self.processes)
        if "conv_baselines" in has and not (has & set(BASELINE_PROCESSES)):
            raise DomainError("conv_baselines needs at least one baseline process")
        if "conv_all" in has and "imputed" not in has:
            raise DomainError("conv_all needs the imputed process")
        if has & {"ppi", "ppi_one_sided", "lr_y"}:
            if not (0.0 < self.null_dist.theta_y < 1.0):
                raise DomainError("marginal-Y processes need an interior null")
        if "lr_x" in has and not (0.0 < self.null_dist.theta_x < 1.0):
            raise DomainError("lr_x needs an interior null marginal of X")
        if "lr_y_given_x" in has:
            for x in (0, 1):
                if not (0.0 < self.null_dist.p_y1_given_x(x) < 1.0):
                    raise DomainError("lr_y_given_x needs interior conditionals")

    def baseline_members(self) -> tuple[str, ...]:
        return tuple(p for p in BASELINE_PROCESSES if p in self.processes)

    def imputed_config(self) -> ImputedConfig:
        return ImputedConfig(
            m_null=self.M,
            regime=self.regime,
            null_dist=self.null_dist,
            classifier=self.classifier,
            n=self.n,
            N=self.N,
            tau=self.tau,
        )

    def to_dict(self) -> dict:
        def cells(d: JointBernoulli) -> dict:
            return {"p11": d.p11, "p10": d.p10, "p01": d.p01, "p00": d.p00}

        return {
            "regime": self.regime.value,
            "null": cells(self.null_dist),
            "alt": cells(self.alt_dist),
            "n": self.n,
            "N": self.N,
            "M": self.M,
            "steps": self.steps,
            "trials": self.trials,
            "alpha": self.alpha,
            "processes": list(self.processes),
            "classifier": self.classifier.value,
            "tau": self.tau,
            "gamma_init": self.gamma_init,
            "gamma_min": self.gamma_min,
            "gamma_max": self.gamma_max,
            "adagrad_lr": self.adagrad_lr,
            "eg_eta": self.eg_eta,
            "seed": self.seed,
            "null_mode": self.null_mode,
            "m1": self.m1,
            "m2": self.m2,
            "ons_centered": self.ons_centered,
            "composite_null": self.composite_null,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        try:
            regime = ShiftRegime(data.pop("regime"))
            null_dist = _dist_from_dict(data.pop("null"))
            alt_dist = _dist_from_dict(data.pop("alt"))
            classifier = ClassifierKind(data.pop("classifier", "threshold"))
            if "processes" in data:
                data["processes"] = tuple(data["processes"])
            return cls(
                regime=regime,
                null_dist=null_dist,
                alt_dist=alt_dist,
                classifier=classifier,
                **data,
            )
        except TypeError as exc:
            raise DomainError(f"bad configuration: {exc}") from exc
        except (KeyError, ValueError) as exc:
            raise DomainError(f"bad configuration: {exc}") from exc

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _dist_from_dict(d: dict) -> JointBernoulli:
    """Accept a raw cell table or either regime's parametric form."""
    keys = set(d)
    if keys == {"p11", "p10", "p01", "p00"}:
        return JointBernoulli(**d)
    if keys == {"theta_y", "p_x1_given_y0", "p_x1_given_y1"}:
        return joint_from_label_shift(
            d["theta_y"], d["p_x1_given_y0"], d["p_x1_given_y1"]
        )
    if keys == {"theta_x", "theta_y_given_x0", "theta_y_given_x1"}:
        return joint_from_concept_shift(
            d["theta_x"], d["theta_y_given_x0"], d["theta_y_given_x1"]
        )
    raise DomainError(f"unrecognized distribution keys: {sorted(keys)}")


@dataclass(frozen=True, eq=False)
class TrialTrace:
    """Everything one trial produced, step-indexed per process."""

    evalues: dict
    log_wealth: dict
    stop_time: dict
    weights: dict
    gamma_path: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class PowerCurve:
    """Per-step rejection frequency and binomial standard error per process."""

    trials: int
    steps: int
    alpha: float
    rejection_rate: dict
    std_err: dict
    config: dict
    config_hash: str
    seed: int

    @classmethod
    def from_traces(cls, cfg: ExperimentConfig, traces: list) -> "PowerCurve":
        rates = {}
        errs = {}
        step_grid = np.arange(1, cfg.steps + 1)
        for name in cfg.processes:
            stops = np.array(
                [
                    trace.stop_time[name] if trace.stop_time[name] is not None else np.inf
                    for trace in traces
                ]
            )
            rate = (stops[None, :] <= step_grid[:, None]).mean(axis=1)
            rates[name] = rate
            errs[name] = np.sqrt(rate * (1.0 - rate) / cfg.trials)
        return cls(
            trials=cfg.trials,
            steps=cfg.steps,
            alpha=cfg.alpha,
            rejection_rate=rates,
            std_err=errs,
            config=cfg.to_dict(),
            config_hash=cfg.config_hash(),
            seed=cfg.seed,
        )


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialTrace:
    """One sequential run, deterministic in (cfg, cfg.seed, trial_index)."""
    rng = RngHandle(cfg.seed, stream=trial_index)
    enabled = set(cfg.processes)
    cond_pool = NullConditionalCounts()

    imputed = None
    if "imputed" in enabled:
        imputed = ImputedEProcess(
            cfg.imputed_config(),
            GammaTunerState(
                gamma=cfg.gamma_init,
                learning_rate=cfg.adagrad_lr,
                gamma_min=cfg.gamma_min,
                gamma_max=cfg.gamma_max,
            ),
        )
    lr_y = MarginalLrProcess(cfg.null_dist.theta_y) if "lr_y" in enabled else None
    lr_x = MarginalLrProcess(cfg.null_dist.theta_x) if "lr_x" in enabled else None
    lr_yx = (
        ConditionalLrProcess(
            (cfg.null_dist.p_y1_given_x(0), cfg.null_dist.p_y1_given_x(1))
        )
        if "lr_y_given_x" in enabled
        else None
    )
    ppi = (
        PpiProcess(
            cfg.null_dist.theta_y,
            cfg.classifier,
            cfg.tau,
            one_sided=False,
            centered=cfg.ons_centered,
        )
        if "ppi" in enabled
        else None
    )
    ppi_one = (
        PpiProcess(
            cfg.null_dist.theta_y,
            cfg.classifier,
            cfg.tau,
            one_sided=True,
            centered=cfg.ons_centered,
        )
        if "ppi_one_sided" in enabled
        else None
    )

    base_members = cfg.baseline_members()
    conv_members = {
        "conv_baselines": base_members,
        "conv_all": base_members + ("imputed",),
    }
    conv_weights = {
        name: SimplexWeights.uniform(len(conv_members[name]))
        for name in ("conv_baselines", "conv_all")
        if name in enabled
    }

    states = {name: EProcessState(alpha=cfg.alpha) for name in cfg.processes}
    est_pool = NullEstimationPool(cfg.regime) if cfg.null_mode == "estimated" else None

    evalues = {name: np.empty(cfg.steps) for name in cfg.processes}
    log_wealth = {name: np.empty(cfg.steps) for name in cfg.processes}
    weights_path = {
        name: np.empty((cfg.steps, len(conv_members[name]))) for name in conv_weights
    }
    gamma_path = np.empty(cfg.steps) if imputed is not None else None

    for t in range(cfg.steps):
        h = rng.split(t)
        labeled = sample_labeled(cfg.alt_dist, cfg.n, h.split(_ROLE_OBSERVED, 0))
        unlabeled = sample_unlabeled(cfg.alt_dist, cfg.N, h.split(_ROLE_OBSERVED, 1))
        cond = cond_pool.estimates()

        null_override = None
        est_batch = None
        if est_pool is not None:
            est_l = sample_labeled(cfg.null_dist, cfg.m1, h.split(_ROLE_NULL_EST, 0))
            est_u = sample_unlabeled(cfg.null_dist, cfg.m2, h.split(_ROLE_NULL_EST, 1))
            est_pool.add_labeled(est_l.x, est_l.y)
            est_pool.add_unlabeled(est_u.x)
            null_override = est_pool.estimate()
            est_batch = est_l

        step_e = {}
        if imputed is not None:
            gamma_path[t] = imputed.tuner.gamma
            step_e["imputed"] = imputed.step(
                labeled, unlabeled, cond, h.split(_ROLE_IMPUTED), null_override
            )
        if lr_y is not None:
            step_e["lr_y"] = lr_y.step(labeled.y)
        if lr_x is not None:
            step_e["lr_x"] = lr_x.step(np.concatenate([labeled.x, unlabeled.x]))
        if lr_yx is not None:
            step_e["lr_y_given_x"] = lr_yx.step(labeled.x, labeled.y)
        if ppi is not None:
            step_e["ppi"] = ppi.step(labeled, unlabeled, cond)
        if ppi_one is not None:
            step_e["ppi_one_sided"] = ppi_one.step(labeled, unlabeled, cond)
        for name, w in conv_weights.items():
            member_e = np.array([step_e[m] for m in conv_members[name]])
            weights_path[name][t] = w.w
            step_e[name] = combine(member_e, w)
            conv_weights[name] = eg_update(w, member_e, cfg.eg_eta)

        for name in cfg.processes:
            states[name] = wealth_update(states[name], step_e[name])
            evalues[name][t] = step_e[name]
            log_wealth[name][t] = states[name].log_wealth

        # Null-labeled data seen this step becomes next steps' estimates.
        if imputed is not None and cfg.M > 0:
            diag = imputed.last_diagnostics
            cond_pool.add_pairs(diag.null_labeled_x.ravel(), diag.null_labeled_y.ravel())
        if est_batch is not None:
            cond_pool.add_pairs(est_batch.x, est_batch.y)

    return TrialTrace(
        evalues=evalues,
        log_wealth=log_wealth,
        stop_time={name: states[name].stopped_at for name in cfg.processes},
        weights=weights_path,
        gamma_path=gamma_path,
    )


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> PowerCurve:
    """Run all trials and aggregate; output is independent of `workers`."""
    if workers < 1:
        raise DomainError("workers must be >= 1")
    if workers == 1 or cfg.trials == 1:
        traces = [run_trial(cfg, i) for i in range(cfg.trials)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_trial, repeat(cfg), range(cfg.trials)))
    return PowerCurve.from_traces(cfg, traces)


def brute_force_mean_e(
    regime: ShiftRegime,
    null_dist: JointBernoulli,
    classifier: ClassifierKind,
    gamma: float,
    n: int = 1,
    N: int = 1,
    M: int = 1,
    tau: float = 0.5,
    cond=None,
    budget: int = 1 << 20,
) -> float:
    """Exact null expectation of the imputed e-value by full enumeration.

    Enumerates every outcome of all M+1 datasets (and every prediction
    randomization) with exact probabilities; must return 1 for any null
    law, classifier, and gamma.
    """
    support = dataset_score_support(null_dist, n, N, classifier, gamma, cond, tau)
    if len(support) ** (M + 1) > budget:
        raise EnumerationSizeError(
            f"{len(support)}^{M + 1} joint outcomes exceed the budget"
        )
    m_plus_1 = M + 1
    return math.fsum(
        math.prod(p for p, _ in combo)
        * m_plus_1
        * combo[0][1]
        / math.fsum(s for _, s in combo)
        for combo in product(support, repeat=m_plus_1)
    )


_LS_COMMON = dict(n=15, classifier=ClassifierKind.THRESHOLD)
_CS_COMMON = dict(n=15, N=135, classifier=ClassifierKind.BAYES)
_SCALES = {
    "desk": dict(trials=200, steps=300, M=32),
    "full": dict(trials=500, steps=500, M=128),
}
_LS_PROCESSES = ("imputed", "lr_y", "lr_x", "ppi", "conv_baselines", "conv_all")
_CS_PROCESSES = ("imputed", "lr_y", "lr_y_given_x", "ppi", "conv_baselines", "conv_all")


def builtin_scenarios(scale: str = "desk") -> dict:
    """Built-in catalog of the simulation scenarios, keyed by name."""
    if scale not in _SCALES:
        raise DomainError(f"scale must be one of {sorted(_SCALES)}")
    sizes = _SCALES[scale]
    scenarios = {}

    for corr, (q0, q1) in (("low_corr", (0.35, 0.65)), ("high_corr", (0.2, 0.9))):
        for big_n in (30, 135):
            scenarios[f"label_shift_{corr}_n{big_n}"] = ExperimentConfig(
                regime=ShiftRegime.LABEL_SHIFT,
                null_dist=joint_from_label_shift(0.5, q0, q1),
                alt_dist=joint_from_label_shift(0.52, q0, q1),
                N=big_n,
                processes=_LS_PROCESSES,
                **_LS_COMMON,
                **sizes,
            )

    for corr, (r0, r1) in (("low_corr", (0.4, 0.7)), ("high_corr", (0.2, 0.85))):
        scenarios[f"concept_shift_{corr}"] = ExperimentConfig(
            regime=ShiftRegime.CONCEPT_SHIFT,
            null_dist=joint_from_concept_shift(0.5, r0, r1),
            alt_dist=joint_from_concept_shift(0.5, r0 + 0.02, r1 + 0.02),
            processes=_CS_PROCESSES,
            **_CS_COMMON,
            **sizes,
        )
        scenarios[f"concept_shift_non_monotone_{corr}"] = ExperimentConfig(
            regime=ShiftRegime.CONCEPT_SHIFT,
            null_dist=joint_from_concept_shift(0.5, r0, r1),
            alt_dist=joint_from_concept_shift(0.5, r0 + 0.02, r1 - 0.02),
            processes=_CS_PROCESSES,
            **_CS_COMMON,
            **sizes,
        )

    return scenarios


def write_power_curve(curve: PowerCurve, outdir) -> list:
    """One CSV per process (step, rejection_rate, std_err) plus a manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in curve.rejection_rate:
        path = outdir / f"{name}.csv"
        lines = ["step,rejection_rate,std_err"]
        rate = curve.rejection_rate[name]
        err = curve.std_err[name]
        for t in range(curve.steps):
            lines.append(f"{t + 1},{float(rate[t])!r},{float(err[t])!r}")
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    manifest = {
        "config": curve.config,
        "config_hash": curve.config_hash,
        "seed": curve.seed,
        "git_revision": _git_revision(),
        "schema": {"power_curve": ["step", "rejection_rate", "std_err"]},
    }
    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(manifest_path)
    return written


def write_trace_csv(trace: TrialTrace, path) -> Path:
    """Wide per-step CSV of one trial: e-value and log-wealth per process."""
    path = Path(path)
    names = list(trace.evalues)
    header = ["step"]
    for name in names:
        header += [f"{name}_evalue", f"{name}_log_wealth"]
    lines = [",".join(header)]
    steps = len(next(iter(trace.evalues.values())))
    for t in range(steps):
        row = [str(t + 1)]
        for name in names:
            row += [
                repr(float(trace.evalues[name][t])),
                repr(float(trace.log_wealth[name][t])),
            ]
        lines.append(",".join(row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _git_revision():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
        return out.stdout.strip() or None
    except OSError:
        return None
