"""Command line: profile, simulate, verify, rates.

Exit codes: 0 success, 1 failed verification check, 2 usage or configuration
error, 3 runtime or numeric error (including I/O failures).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pmedipole.asymptotics import SERIES_FIELDS, ErrorSeries, fit_rate
from pmedipole.barriers import region_params
from pmedipole.config import config_from_dict, parse_config
from pmedipole.errors import ConfigError, InvalidParameter, PMEError
from pmedipole.exact_solutions import build_profile, dump_profile, profile_moment

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("pmedipole")


def cmd_profile(args) -> int:
    p = build_profile(args.m, args.M)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_profile(p, out / "profile.csv", n=args.n)
    e = p.exponents
    delta_bar, T_bar = region_params(p)
    constants = {
        "m": p.m,
        "M": p.M,
        "alpha": e.alpha,
        "beta": e.beta,
        "kappa_m": p.kappa_m,
        "C_m": p.C_m,
        "xi_1": p.xi_1,
        "xi_M": p.xi_M,
        "xi_bar": p.xi_bar,
        "xi_hat": p.xi_hat,
        "K_bound": p.K_bound,
        "delta_bar": delta_bar,
        "T_bar": T_bar,
        "moment_check": profile_moment(p),
    }
    (out / "constants.json").write_text(json.dumps(constants, indent=2))
    print(json.dumps(constants, indent=2))
    return EXIT_OK


def _load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def cmd_simulate(args) -> int:
    from pmedipole.experiment import run_experiment

    cfg = _load_config(args.config)
    out = args.out or cfg.output
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'output' in the config")
    res = run_experiment(cfg, out)
    print(json.dumps(res.summary(), indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    from pmedipole.verification import BOX_RUN, Suite, report

    box = _load_config(args.config) if args.config else config_from_dict(BOX_RUN)
    suite = Suite(box=box, c_scale=args.perturb_c)
    checks = suite.run_all()
    rep = report(checks, suite.timings)
    text = json.dumps(rep, indent=2)
    if args.report:
        Path(args.report).write_text(text)
    print(text)
    for c in checks:
        if not c.passed:
            print(f"FAIL [{c.criterion}] {c.name}: value={c.value:.6g} tolerance={c.tolerance:.6g}", file=sys.stderr)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_rates(args) -> int:
    if args.field not in SERIES_FIELDS or args.field == "t":
        raise ConfigError(f"unknown column {args.field!r}; choose from {', '.join(SERIES_FIELDS[1:])}")
    try:
        series = ErrorSeries.from_csv(args.series)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.series} is not an error-series CSV: {exc}") from exc
    fit = fit_rate(series, args.field)
    print(json.dumps(fit._asdict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmedipole", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="write the dipole profile and its constants")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=401, help="grid points in [0, xi_M]")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--config", help="replaces the default box-data run")
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--perturb-c", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rates", help="fit log e = slope log t + intercept")
    p.add_argument("--series", required=True)
    p.add_argument("--field", required=True)
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PMEError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
