"""Command-line entry point for simulations, validity checks, and bounds.

Exit codes: 0 success, 1 usage or configuration error, 2 a checked
threshold failed, 3 internal error.  All file output stays under the
directory named by --out.

Configuration files are JSON with the keys of ExperimentConfig.to_dict();
distributions accept either raw cells {p11, p10, p01, p00} or the
regime-parametric forms {theta_y, p_x1_given_y0, p_x1_given_y1} and
{theta_x, theta_y_given_x0, theta_y_given_x1}.  A built-in scenario name
may be used in place of a config path; --set key=value overrides
(dotted keys reach into nested objects, values parse as JSON when they
can).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .baselines import PpiState, ppi_expected_payoff_enum
from .classifiers import ClassifierKind, ClassifierModel
from .core import (
    DomainError,
    ShiftRegime,
    joint_from_concept_shift,
    joint_from_label_shift,
)
from .harness import (
    ExperimentConfig,
    brute_force_mean_e,
    builtin_scenarios,
    run_experiment,
    run_trial,
    write_power_curve,
    write_trace_csv,
)
from .robustness import TvBoundInputs, sequence_tv_bound

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_THRESHOLD = 2
EXIT_INTERNAL = 3

ORACLE_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures on exit code 1 (2 means a failed check)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_override(text: str) -> tuple[list[str], object]:
    if "=" not in text:
        raise DomainError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _apply_overrides(config: dict, overrides) -> dict:
    for text in overrides or ():
        path, value = _parse_override(text)
        node = config
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[path[-1]] = value
    return config


def _resolve_config(source: str, scale: str, overrides) -> ExperimentConfig:
    scenarios = builtin_scenarios(scale)
    if source in scenarios:
        data = scenarios[source].to_dict()
    elif os.path.exists(source):
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise DomainError(f"config {source} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise DomainError("config file must hold a JSON object")
    else:
        raise DomainError(
            f"{source!r} is neither a readable file nor a known scenario "
            f"(try `predbet scenarios`)"
        )
    data = _apply_overrides(data, overrides)
    return ExperimentConfig.from_dict(data)


def _default_workers() -> int:
    return os.cpu_count() or 1


def _cmd_simulate(args) -> int:
    cfg = _resolve_config(args.config, args.scale, args.set)
    curve = run_experiment(cfg, workers=args.workers)
    written = write_power_curve(curve, args.out)
    if args.save_trace is not None:
        trace = run_trial(cfg, args.save_trace)
        written.append(
            write_trace_csv(trace, Path(args.out) / f"trace_{args.save_trace}.csv")
        )
    for path in written:
        print(path)
    for name in cfg.processes:
        final = curve.rejection_rate[name][-1]
        print(f"{name}: rejection rate at step {cfg.steps} = {final:.4f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _resolve_config(args.config, args.scale, args.set)
    null_cells = cfg.to_dict()["null"]
    data = _apply_overrides(cfg.to_dict(), [])
    data["alt"] = null_cells
    cfg = ExperimentConfig.from_dict(data)
    curve = run_experiment(cfg, workers=args.workers)
    if args.out:
        write_power_curve(curve, args.out)
    envelope = cfg.alpha + 2.0 * math.sqrt(cfg.alpha * (1.0 - cfg.alpha) / cfg.trials)
    if cfg.null_mode == "estimated":
        bound = sequence_tv_bound(
            TvBoundInputs(cfg.steps, cfg.n, cfg.N, cfg.m1, cfg.m2, args.delta)
        )
        print(
            f"estimated-null mode: TV inflation bound {bound:.6g} "
            f"(m1={cfg.m1}, m2={cfg.m2}, delta={args.delta}) added to envelope"
        )
        envelope += bound
    failed = False
    for name in cfg.processes:
        final = float(curve.rejection_rate[name][-1])
        verdict = "ok" if final <= envelope else "EXCEEDS"
        print(
            f"{name}: null rejection rate {final:.4f} "
            f"vs envelope {envelope:.4f} [{verdict}]"
        )
        failed = failed or final > envelope
    return EXIT_THRESHOLD if failed else EXIT_OK


def _oracle_null(regime: str):
    if regime == "label_shift":
        return joint_from_label_shift(0.5, 0.35, 0.65)
    return joint_from_concept_shift(0.5, 0.4, 0.7)


def _cmd_oracle(args) -> int:
    if args.kind == "imputed":
        value = brute_force_mean_e(
            regime=ShiftRegime(args.regime),
            null_dist=_oracle_null(args.regime),
            classifier=ClassifierKind(args.classifier),
            gamma=args.gamma,
            n=args.n,
            N=args.N,
            M=args.M,
        )
    else:
        null = _oracle_null("label_shift")
        state = PpiState(
            lam=args.lam,
            epsilon=args.epsilon,
            f_hat=ClassifierModel(ClassifierKind.BAYES, (args.f0, args.f1)),
        )
        value = ppi_expected_payoff_enum(
            state, null, theta_null=null.theta_y, slice_size=args.slice_size
        )
    print(f"{value:.9f}")
    if abs(value - 1.0) > ORACLE_TOL:
        print(
            f"FAIL: expectation deviates from 1 by {abs(value - 1.0):.3g}",
            file=sys.stderr,
        )
        return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_bound(args) -> int:
    value = sequence_tv_bound(
        TvBoundInputs(args.t, args.n, args.N, args.m1, args.m2, args.delta)
    )
    print(f"{value!r}")
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    for name, cfg in builtin_scenarios(args.scale).items():
        print(
            f"{name}: regime={cfg.regime.value} n={cfg.n} N={cfg.N} M={cfg.M} "
            f"steps={cfg.steps} trials={cfg.trials} classifier={cfg.classifier.value}"
        )
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="predbet",
        description="Sequential anytime-valid testing by betting on predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario and write power-curve CSVs")
    sim.add_argument("config", help="config JSON path or built-in scenario name")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--set", action="append", metavar="KEY=VALUE", help="override")
    sim.add_argument("--scale", choices=("desk", "full"), default="desk")
    sim.add_argument("--workers", type=int, default=_default_workers())
    sim.add_argument(
        "--save-trace", type=int, default=None, metavar="TRIAL",
        help="also write the per-step trace of one trial",
    )
    sim.set_defaults(func=_cmd_simulate)

    val = sub.add_parser("validate", help="null-data suite: rejection vs envelope")
    val.add_argument("config", help="config JSON path or built-in scenario name")
    val.add_argument("--out", default=None, help="optional output directory")
    val.add_argument("--set", action="append", metavar="KEY=VALUE", help="override")
    val.add_argument("--scale", choices=("desk", "full"), default="desk")
    val.add_argument("--workers", type=int, default=_default_workers())
    val.add_argument("--delta", type=float, default=0.05,
                     help="confidence for the estimated-null TV bound report")
    val.set_defaults(func=_cmd_validate)

    orc = sub.add_parser("oracle", help="exact validity expectations by enumeration")
    orc.add_argument("kind", choices=("imputed", "ppi"))
    orc.add_argument("--regime", choices=("label_shift", "concept_shift"),
                     default="label_shift")
    orc.add_argument("--classifier", choices=("threshold", "bayes"),
                     default="threshold")
    orc.add_argument("--gamma", type=float, default=1.0)
    orc.add_argument("--n", type=int, default=1)
    orc.add_argument("--N", type=int, default=1)
    orc.add_argument("--M", type=int, default=1)
    orc.add_argument("--lam", type=float, default=0.3)
    orc.add_argument("--epsilon", type=float, default=0.5)
    orc.add_argument("--f0", type=float, default=0.0)
    orc.add_argument("--f1", type=float, default=1.0)
    orc.add_argument("--slice-size", type=int, default=1)
    orc.set_defaults(func=_cmd_oracle)

    bnd = sub.add_parser("bound", help="total-variation inflation bound")
    bnd.add_argument("t", type=int)
    bnd.add_argument("n", type=int)
    bnd.add_argument("N", type=int)
    bnd.add_argument("m1", type=int)
    bnd.add_argument("m2", type=int)
    bnd.add_argument("delta", type=float)
    bnd.set_defaults(func=_cmd_bound)

    scn = sub.add_parser("scenarios", help="list built-in scenario names")
    scn.add_argument("--scale", choices=("desk", "full"), default="desk")
    scn.set_defaults(func=_cmd_scenarios)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"predbet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 3
        print(f"predbet: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
