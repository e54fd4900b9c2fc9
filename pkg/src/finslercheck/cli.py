"""Command-line front end.

    finslercheck run [CONFIG] [--seed N] [--jobs N] [--format json|csv] [--output PATH]
    finslercheck constants NORM [--dimension N] [--seed N]
    finslercheck threshold [CONFIG] [--seed N] [--format ...] [--output PATH]

Without CONFIG the built-in default campaign is used.  ``run`` and
``threshold`` exit with status 0 iff every non-advisory check passes;
otherwise the failing check ids go to standard error and the status is 1.
Configuration errors exit with status 2.
"""

import argparse
import sys

from . import functionals as fn
from .config import default_config, load_config, parse_norm_arg
from .errors import ConfigError, FinslerCheckError
from .finsler import equivalence_constants
from .reports import _canonical, dump_json, emit_reports, summarize
from .verifier import run_campaign, threshold_scan


def _load(path):
    return default_config() if path is None else load_config(path)


def _finish(reports, config, args):
    fmt = args.format or config.format
    path = args.output or config.output
    text = emit_reports(reports, fmt, path)
    if path is None:
        sys.stdout.write(text)
    summary = summarize(reports)
    print(f"{summary['total']} reports: {summary['passed']} passed, {summary['failed']} failed, "
          f"{summary['advisory_failed']} advisory failures, "
          f"{summary['out_of_hypothesis']} out of hypothesis", file=sys.stderr)
    if summary["failing_ids"]:
        print("failing checks: " + " ".join(summary["failing_ids"]), file=sys.stderr)
        return 1
    return 0


def cmd_run(args):
    config = _load(args.config).with_overrides(seed=args.seed, jobs=args.jobs)
    reports = run_campaign(config, jobs=config.jobs)
    return _finish(reports, config, args)


def cmd_threshold(args):
    config = _load(args.config).with_overrides(seed=args.seed)
    return _finish(threshold_scan(config), config, args)


def cmd_constants(args):
    spec = parse_norm_arg(args.norm, args.dimension)
    pair = spec.build()
    seed = 0 if args.seed is None else args.seed
    eq = equivalence_constants(pair, seed=seed)
    sigma = fn.estimate_sigma_f(pair, seed=seed)
    bundle = fn.constants_bundle(pair, eq, sigma)
    out = {
        "norm": pair.describe(),
        "seed": seed,
        "kappa_n": bundle.kappa_n,
        "alpha": bundle.alpha,
        "beta_tilde": bundle.beta_tilde,
        "sigma_f": [sigma.lo, sigma.hi],
        "sigma_flagged": sigma.flagged,
        "omega_nf": bundle.omega_nf,
        "wulff_perimeter": bundle.perimeter,
        "c_nf": bundle.c_nf,
        "equivalence": eq.as_dict(),
    }
    sys.stdout.write(dump_json(_canonical(out)) + "\n")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="finslercheck",
                                description="Numerical verification of anisotropic "
                                            "Hardy and exponential-integrability inequalities.")
    sub = p.add_subparsers(dest="command", required=True)

    def output_flags(sp):
        sp.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default: from config, else json)")
        sp.add_argument("--output", default=None, help="write reports here instead of stdout")

    run = sub.add_parser("run", help="execute a campaign")
    run.add_argument("config", nargs="?", help="campaign INI file (default campaign if omitted)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--jobs", type=int, default=None, help="parallel check workers")
    output_flags(run)
    run.set_defaults(func=cmd_run)

    con = sub.add_parser("constants", help="print the constants of one norm")
    con.add_argument("norm", help="euclidean | ellipsoid:'4 0 0 1' | p_norm:4/3")
    con.add_argument("--dimension", type=int, default=2)
    con.add_argument("--seed", type=int, default=None)
    con.set_defaults(func=cmd_constants)

    thr = sub.add_parser("threshold", help="radial sharpness scan only")
    thr.add_argument("config", nargs="?", help="campaign INI file (default campaign if omitted)")
    thr.add_argument("--seed", type=int, default=None, help="override the config seed")
    output_flags(thr)
    thr.set_defaults(func=cmd_threshold)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except (FinslerCheckError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
