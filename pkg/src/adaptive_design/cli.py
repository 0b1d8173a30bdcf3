"""Command line front end.

Four subcommands:

  simulate     run a design against synthetic Gaussian outcomes
  run-dataset  run a design against a CSV population
  coverage     report confidence interval coverage for a configuration
  report       render figures for a previously written output directory

`--config FILE` loads a JSON experiment configuration; flags given explicitly
on the command line override the corresponding file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import ConfigurationError
from .harness import (ExperimentConfig, config_from_dict, coverage_study,
                      groups_config_from_dict, run_experiment, write_report)


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON experiment config; explicit flags override it")
    parser.add_argument("--design", choices=["fixed", "clip-ogd-0", "clip-ogd-sc", "mgate"],
                        default=None, help="assignment design (default clip-ogd-sc)")
    parser.add_argument("--p", type=float, default=None,
                        help="propensity for the fixed design")
    parser.add_argument("--c", type=float, default=None,
                        help="assumed outcome moment lower bound (step size scale)")
    parser.add_argument("--horizon", type=int, default=None,
                        help="rounds per replication (synthetic data only; a CSV "
                             "population's length is its horizon)")
    parser.add_argument("--reps", type=int, default=None,
                        help="number of Monte Carlo replications (default 500)")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed for all derived streams (default 0)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="confidence level parameter (default 0.05)")
    parser.add_argument("--groups", type=Path, default=None,
                        help="JSON group definitions (score quantiles or named groups)")
    parser.add_argument("--fixed-population", choices=["true", "false"], default=None,
                        help="freeze one population across replications "
                             "(default: true for CSV data, false for synthetic)")
    parser.add_argument("--skip-regret", action="store_true",
                        help="skip regret evaluation (faster; curves omit regret columns)")
    parser.add_argument("--out", type=Path, default=None,
                        help="directory for curves.csv and summary.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-design",
        description="Adaptive treatment assignment designs for average "
                    "treatment effect estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run against synthetic Gaussian outcomes")
    _add_shared(sim)
    sim.add_argument("--mu1", type=float, default=None, help="treated mean (default 2)")
    sim.add_argument("--mu0", type=float, default=None, help="control mean (default 1)")
    sim.add_argument("--sigma", type=float, default=None,
                     help="outcome standard deviation (default 1)")

    ds = sub.add_parser("run-dataset", help="run against a CSV population")
    _add_shared(ds)
    ds.add_argument("--csv", type=Path, default=None, help="path to the CSV file")
    ds.add_argument("--y1-col", default=None, help="treated outcome column (default y1)")
    ds.add_argument("--y0-col", default=None, help="control outcome column (default y0)")
    ds.add_argument("--group-cols", default=None,
                    help="comma separated 0/1 membership columns")
    ds.add_argument("--resample", type=int, default=None,
                    help="repeat each row this many times (default 1)")
    ds.add_argument("--impute-scale", type=float, default=None,
                    help="noise scale for missing outcome imputation "
                         "(default: per-column sample std)")
    ds.add_argument("--shuffle-seed", type=int, default=None,
                    help="shuffle rows with this seed after resampling")

    cov = sub.add_parser("coverage", help="confidence interval coverage study")
    _add_shared(cov)
    cov.add_argument("--mu1", type=float, default=None)
    cov.add_argument("--mu0", type=float, default=None)
    cov.add_argument("--sigma", type=float, default=None)

    rep = sub.add_parser("report",
                         help="render figures next to an existing curves.csv")
    rep.add_argument("out", type=Path,
                     help="output directory holding curves.csv and summary.json")
    return parser


_SHARED_FIELDS = {
    "reps": "replications",
    "seed": "seed",
    "alpha": "alpha",
}
_GAUSSIAN_FIELDS = {"mu1": "mu1", "mu0": "mu0", "sigma": "sigma", "horizon": "horizon"}
_CSV_FIELDS = {
    "csv": "path",
    "y1_col": "y1_col",
    "y0_col": "y0_col",
    "resample": "resample",
    "impute_scale": "impute_scale",
    "shuffle_seed": "shuffle_seed",
}


def _config_from_args(args: argparse.Namespace,
                      data_kind: str | None) -> ExperimentConfig:
    raw: dict = {}
    if args.config is not None:
        with args.config.open() as fh:
            raw = json.load(fh)
    if data_kind is None:  # coverage: take the config file's source, else Gaussian
        data_kind = raw.get("data", {}).get("kind", "gaussian")
    raw.setdefault("data", {"kind": data_kind})
    if raw["data"].get("kind", data_kind) != data_kind:
        raise ConfigurationError(
            f"config file holds {raw['data'].get('kind')!r} data but this "
            f"subcommand expects {data_kind!r}")
    raw["data"]["kind"] = data_kind
    raw.setdefault("design", {})

    for flag, key in _SHARED_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            raw[key] = val
    if args.design is not None:
        raw["design"]["kind"] = args.design
    if args.p is not None:
        raw["design"]["p"] = args.p
    if args.c is not None:
        raw["design"]["c"] = args.c
    if args.fixed_population is not None:
        raw["fixed_population"] = args.fixed_population == "true"
    if args.skip_regret:
        raw["evaluate_regret"] = False
    if args.out is not None:
        raw["out"] = str(args.out)
    if args.groups is not None:
        with args.groups.open() as fh:
            raw["groups"] = json.load(fh)

    fields = _GAUSSIAN_FIELDS if data_kind == "gaussian" else _CSV_FIELDS
    for flag, key in fields.items():
        val = getattr(args, flag, None)
        if val is not None:
            raw["data"][key] = str(val) if key == "path" else val
    if data_kind == "csv":
        if getattr(args, "horizon", None) is not None:
            raise ConfigurationError(
                "--horizon does not apply to CSV data; the population length "
                "(rows x resample) is the horizon")
        if getattr(args, "group_cols", None) is not None:
            raw["data"]["group_cols"] = [s for s in args.group_cols.split(",") if s]
        if "path" not in raw["data"]:
            raise ConfigurationError("run-dataset needs --csv or a config with a path")
    return config_from_dict(raw)


def _print_summary(report) -> None:
    cfg = report.config
    print(f"design={cfg['design']['kind']} horizon={report.horizon} "
          f"replications={report.replications}")
    print(f"tau_hat mean={report.tau_hat_mean:.6g} sd={report.tau_hat_sd:.6g} "
          f"true_ate={report.true_ate:.6g}")
    print(f"vb_hat mean={report.vb_hat_mean:.6g} "
          f"coverage(alpha={cfg['alpha']})={report.ci_coverage:.4f}")
    if report.p_star is not None:
        print(f"p_star={report.p_star:.6g} "
              f"mean final propensity={float(report.final_propensities.mean()):.6g}")
    if report.final_regret_mean is not None:
        se = report.final_regret_se
        se_txt = f" (se {se:.4g})" if se is not None else ""
        print(f"final regret mean={report.final_regret_mean:.6g}{se_txt}")
    for name, agg in report.per_group.items():
        p_txt = "" if agg.p_star is None else f" p_star={agg.p_star:.4f}"
        prop_txt = ("" if agg.mean_final_propensity is None
                    else f" mean final p={agg.mean_final_propensity:.4f}")
        print(f"  group {name}: final regret mean={agg.final_regret_mean:.6g}"
              f"{prop_txt}{p_txt}")


def _run_and_report(cfg: ExperimentConfig) -> int:
    report = run_experiment(cfg)
    _print_summary(report)
    if cfg.out is not None:
        paths = write_report(report, cfg.out)
        print(f"wrote {paths['curves']} and {paths['summary']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run_and_report(_config_from_args(args, "gaussian"))
        if args.command == "run-dataset":
            return _run_and_report(_config_from_args(args, "csv"))
        if args.command == "coverage":
            cfg = _config_from_args(args, None)
            result = coverage_study(cfg)
            print(f"coverage={result.coverage:.4f} nominal={result.nominal:.4f} "
                  f"replications={result.replications}")
            return 0 if result.coverage >= result.nominal else 1
        if args.command == "report":
            from .figures import render_report_figures
            for path in render_report_figures(args.out):
                print(f"wrote {path}")
            return 0
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
