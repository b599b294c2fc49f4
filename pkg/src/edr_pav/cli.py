"""Command-line entry point: ``edr-pav {simulate,fit,loo,bench}``."""

import argparse
import os
import sys
import warnings

from .datagen import RegressionProblem, SimConfig, load_config, load_matrix
from .exceptions import EdrPavError
from .experiments import emit_report, parse_methods, run_real_data, run_simulation_study

SEED_ENV = "EDR_PAV_SEED"


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--config", help="key = value file; flags override its entries")
    g.add_argument("--n", type=int, help="samples per simulated design")
    g.add_argument("--p", type=int, help="covariates per simulated design")
    g.add_argument("--reps", type=int, help="simulation replications (default 100)")
    g.add_argument("--snr", type=float, help="signal-to-noise ratio (default 0.5)")
    g.add_argument("--seed", type=int, help=f"base seed (fallback: ${SEED_ENV}, then 0)")
    g.add_argument("--grid-count", type=int, help="number of ridge tuning parameters (default 300)")
    g.add_argument("--grid-min-log10", type=float, help="log10 of the smallest ridge parameter (default -5)")
    g.add_argument("--grid-max-log10", type=float, help="log10 of the largest ridge parameter (default 5)")
    g.add_argument("--mu-per-column", action="store_true", default=None,
                   help="draw the design mean per column instead of once per matrix")
    g.add_argument("--data", help="delimited matrix file (samples as rows)")
    g.add_argument("--response", help="response column: index, header name, 'first' or 'last'")
    m = common.add_argument_group("methods")
    m.add_argument("--methods", help="comma list of pav and cvK (default pav,cv5,cv10)")
    m.add_argument("--k-folds", type=int, help="fold count used for a bare 'cv' method")
    m.add_argument("--definition2-mode", action="store_true",
                   help="select with the full pairwise admissible set instead of the scan")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="report path (default: print only)")
    o.add_argument("--format", choices=("csv", "json"), help="report format (default from --out suffix)")
    o.add_argument("--threads", type=int, default=None, help="cap on internal parallelism (default 1)")

    parser = argparse.ArgumentParser(prog="edr-pav", description="Personalized ridge tuning (edr + PAV) versus K-fold CV.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("simulate", parents=[common], help="simulation study (deterministic report, no timings)")
    sub.add_parser("fit", parents=[common], help="in-sample evaluation on a data file")
    sub.add_parser("loo", parents=[common], help="leave-one-out evaluation on a data file")
    sub.add_parser("bench", parents=[common], help="simulation study with single-threaded timings")
    return parser


SETTINGS = ("n", "p", "reps", "snr", "seed", "grid_count", "grid_min_log10", "grid_max_log10",
            "mu_per_column", "data", "response", "methods", "k_folds", "definition2_mode",
            "out", "format", "threads")


def _settings(args):
    file_cfg = load_config(args.config) if args.config else {}
    unknown = set(file_cfg) - set(SETTINGS)
    if unknown:
        raise EdrPavError(f"unknown keys in {args.config}: {sorted(unknown)}")
    values = dict(file_cfg)
    for key in SETTINGS:
        v = getattr(args, key)
        if v is not None and v is not False:
            values[key] = v
    if "seed" not in values and os.environ.get(SEED_ENV):
        values["seed"] = os.environ[SEED_ENV]
    return values


def _methods(values):
    k = values.get("k_folds")
    raw = values.get("methods")
    if raw is None:
        return ["pav", f"cv{int(k)}"] if k else ["pav", "cv5", "cv10"]
    out = []
    for name in str(raw).split(","):
        name = name.strip().lower()
        if name == "cv":
            if not k:
                raise EdrPavError("method 'cv' needs --k-folds")
            name = f"cv{int(k)}"
        out.append(name)
    return parse_methods(out)


def _sim_config(values):
    keys = {"n", "p", "snr", "seed", "grid_count", "grid_min_log10", "grid_max_log10", "mu_per_column"}
    return SimConfig().with_overrides(**{k: values[k] for k in keys if k in values})


def _flag(values, key):
    v = values.get(key, False)
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes", "on")
    return bool(v)


def _print(report, out):
    print(f"{'method':<8} {'mean_error':>12} {'sd_error':>12} {'seconds':>10} {'scaled':>8}", file=out)
    for r in report.records:
        secs = "" if r.seconds is None else f"{r.seconds:.4f}"
        scaled = "" if r.scaled_runtime is None else f"{r.scaled_runtime:.2f}"
        print(f"{r.method:<8} {r.mean_error:>12.6g} {r.sd_error:>12.6g} {secs:>10} {scaled:>8}", file=out)


def run(args, argv):
    values = _settings(args)
    methods = _methods(values)
    pav_mode = "definition2" if _flag(values, "definition2_mode") else "algorithm1"
    threads = int(values.get("threads", 1))
    config = _sim_config(values)

    if args.command in ("simulate", "bench"):
        design = None
        if values.get("data"):
            design, _, _ = load_matrix(values["data"], response=values.get("response"), normalize=True)
            config = config.with_overrides(n=design.shape[0], p=design.shape[1])
        report = run_simulation_study(
            config, methods, int(values.get("reps", 100)), mode=pav_mode, threads=threads,
            timing=args.command == "bench", design=design,
        )
        if design is not None:
            report.metadata["data"] = values["data"]
    else:
        if not values.get("data"):
            raise EdrPavError(f"{args.command} needs --data")
        X, y, _ = load_matrix(values["data"], response=values.get("response", "last"), normalize=True)
        if y is None:
            raise EdrPavError("no response column selected")
        report = run_real_data(
            RegressionProblem(X, y), "in_sample" if args.command == "fit" else "leave_one_out",
            methods, grid=config.grid(), seed=config.seed, pav_mode=pav_mode, threads=threads,
        )
        report.metadata["data"] = values["data"]
        report.metadata["response"] = values.get("response", "last")

    report.metadata["command"] = args.command
    report.metadata["argv"] = list(argv)
    report.metadata["settings"] = {k: v for k, v in sorted(values.items())}
    _print(report, sys.stdout)
    if values.get("out"):
        emit_report(report, values["out"], values.get("format"))
    return report


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            run(args, argv)
    except (EdrPavError, OSError) as exc:
        print(f"edr-pav: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
