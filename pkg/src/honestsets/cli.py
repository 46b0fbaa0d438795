"""Command line entry point.

    honestsets coverage --config exp.ini --reps 2000 --out cov.csv
    honestsets rates --beta 1 --beta1 1 --profiles worst --n 256,1024,4096,16384
    honestsets confset data.txt --model sequence --sigma known:1 --n 1024

Exit status: 0 on success, 1 for configuration errors, 2 for runtime or
numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from . import harness
from .confidence_set import SigmaSource, build_ball
from .errors import ConfigError, InvalidArgument
from .functional_estimators import DensitySample, RegressionSample
from .initial_estimators import center_estimate
from .norm_estimation import QuantileRule
from .sequence_core import SequenceSample, split_randomize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# flag -> config key
_OVERRIDES = {
    "n": "n_grid", "alpha": "alpha", "beta": "beta", "L": "L", "beta1": "beta1",
    "L1": "L1", "reps": "reps", "seed": "master_seed", "rule": "rule", "sigma": "sigma",
    "estimator": "estimator", "out": "out", "model": "model", "profiles": "profiles",
    "finite_dim": "finite_dim", "threads": "threads", "errors": "errors", "noise": "noise",
    "k": "k", "K": "K", "normality_k": "normality_k", "eps_mult": "eps_mult",
}


def read_config(path: str) -> dict:
    """Key-value pairs from the ``[experiment]`` section of an INI file."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "experiment" not in parser:
        raise ConfigError("config file needs an [experiment] section")
    return dict(parser["experiment"])


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with an [experiment] section")
    p.add_argument("--model", choices=["sequence", "density", "regression"])
    p.add_argument("--n", help="sample size or comma-separated grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--L1", type=float)
    p.add_argument("--finite-dim", dest="finite_dim", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rule", choices=["normal", "chebyshev", "simulated"])
    p.add_argument("--sigma", help="known:<v> | estimated[:<m>,<l>]")
    p.add_argument("--estimator", help="projection:<k> | adaptive")
    p.add_argument("--profiles", help="comma-separated parameter profiles")
    p.add_argument("--errors", help="error family for the sequence model")
    p.add_argument("--noise", help="regression noise: none | hetero | gaussian:<v>")
    p.add_argument("--k", type=int, help="explicit cut-off")
    p.add_argument("--K", type=int, help="minimum stored sequence length")
    p.add_argument("--normality-k", dest="normality_k")
    p.add_argument("--eps-mult", dest="eps_mult", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="honestsets",
                                     description="Honest adaptive confidence balls: experiments and one-shot sets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("coverage", "empirical coverage per profile and n"),
                        ("rates", "log-log diameter slopes"),
                        ("normality", "law of the standardized statistic"),
                        ("sparse", "finite model with k = n"),
                        ("duality", "induced test and estimator error rates")]:
        _add_common(sub.add_parser(name, help=help_))
    p = sub.add_parser("confset", help="confidence set from a data file")
    p.add_argument("data", help="sequence values, density points, or x,y pairs; one per line")
    _add_common(p)
    p.add_argument("--f-sup", dest="f_sup", type=float, default=None)
    p.add_argument("--sigma2-sup", dest="sigma2_sup", type=float, default=None)
    p.add_argument("--floor", action="store_true")
    p.add_argument("--no-project", dest="project", action="store_false")
    return parser


def make_config(args) -> harness.ExperimentConfig:
    mapping = read_config(args.config) if getattr(args, "config", None) else {}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            mapping[key] = value
    return harness.ExperimentConfig.from_mapping(mapping)


def _load_rows(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed data file {path}: {exc}") from exc
    return data


def run_confset(args, cfg: harness.ExperimentConfig) -> str:
    """One confidence set from observed data, split by the documented device."""
    data = _load_rows(args.data)
    model = cfg.supermodel
    rule = QuantileRule(cfg.rule, cfg.alpha, seed=cfg.master_seed)
    if cfg.model == "sequence":
        src = SigmaSource.parse(cfg.sigma)
        if src.kind != "known" or src.value is None:
            raise ConfigError("the sequence split needs --sigma known:<v>")
        if len(cfg.n_grid) != 1:
            raise ConfigError("confset takes a single --n")
        x = SequenceSample(data[:, 0], cfg.n_grid[0], src.value)
        pair = split_randomize(x, cfg.master_seed)
        center = center_estimate(pair.first, model, cfg.estimator, args.project)
        ball = build_ball(pair.second, center.theta_hat, model, cfg.alpha, rule, floor=args.floor, k=cfg.k)
    else:
        if args.f_sup is None:
            raise ConfigError("--f-sup is required for density and regression data")
        if cfg.model == "density":
            sample = DensitySample(data[:, 0], args.f_sup)
        else:
            if data.shape[1] < 2:
                raise ConfigError("regression data needs x,y columns")
            sample = RegressionSample(data[:, 0], data[:, 1], args.f_sup, args.sigma2_sup or 0.0)
        first, second = sample.halves()
        k_max = cfg.K or 64
        center = center_estimate(first, model, cfg.estimator, args.project, K=k_max)
        ball = build_ball(second, center.theta_hat, model, cfg.alpha, rule, floor=args.floor, k=cfg.k)
    rec = ball.to_record()
    rec = {"model": cfg.model, "alpha": cfg.alpha, "rule": cfg.rule,
           "empty": int(ball.empty), **rec}
    return harness.format_csv(list(rec), [list(rec.values())])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except (ConfigError, InvalidArgument) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    runners = {
        "coverage": harness.run_coverage,
        "rates": harness.run_rates,
        "normality": harness.run_normality,
        "sparse": harness.run_sparse,
        "duality": harness.run_duality,
    }
    try:
        if args.command == "confset":
            text = run_confset(args, cfg)
        else:
            text = runners[args.command](cfg).to_csv()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidArgument, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {cfg.out}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
