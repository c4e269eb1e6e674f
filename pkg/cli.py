"""
Apollonia: command line.

    python cli.py generate --domain three_tangent --max-count 10 --out packing.csv
    python cli.py converge --domain three_tangent --function "re:2@10,10" --grid 10,100,1000
    python cli.py fit-residual --domain square_lattice_2x2 --n-min 1000 --n-max 100000
    python cli.py fit-counting --domain three_tangent --t-min 100 --t-max 10000
    python cli.py lp-check --domain three_tangent --n 10000 --p 1 2 3
    python cli.py greedy --region square:1 --target-n 10000 --seeds 1 2 3 4 5
    python cli.py validate --domain my_domain.json

Exit codes: 0 success, 1 usage, 2 validation failure, 3 numeric/geometry failure.
"""

import argparse
import sys
from pathlib import Path

from scripts import config
from scripts.apollonian_packing import StopCriterion
from scripts.domain_model import load_domain
from scripts.errors import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, ApolloniaError, DomainValidationError
from scripts.experiments import (
    cmd_converge,
    cmd_fit_counting,
    cmd_fit_residual,
    cmd_generate,
    cmd_greedy,
    cmd_lp_check,
    cmd_validate,
)
from scripts.exponent_fit import log_spaced
from scripts.geometry_core import TangencyTolerance
from scripts.greedy_baseline import parse_region
from scripts.harmonic import parse_function


class UsageError(Exception):
    pass


class ApolloniaParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage errors here exit with 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def resolve_domain_path(name):
    """A path, or the name of a bundled domain under data/domains/."""
    path = Path(name)
    if path.exists():
        return path
    bundled = config.DOMAIN_DIR / f"{name.removesuffix('.json')}.json"
    return bundled if bundled.exists() else path


def _grid(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def build_parser():
    common = ApolloniaParser(add_help=False)
    common.add_argument("--out", help="report path (generate: packing dump path)")
    common.add_argument("--tolerance-rel", type=float, default=config.TOLERANCE_REL)
    common.add_argument("--tolerance-abs", type=float, default=config.TOLERANCE_ABS)
    common.add_argument("--threads", type=int, default=config.THREADS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--progress", action="store_true", help="show tqdm progress bars")

    with_domain = ApolloniaParser(add_help=False, parents=[common])
    with_domain.add_argument("--domain", required=True, help="domain file or bundled domain name")

    parser = ApolloniaParser(prog="apollonia", description="Disk-packing cubature for harmonic functions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ApolloniaParser)

    p = sub.add_parser("generate", parents=[with_domain], help="emit the size-ordered packing")
    stop = p.add_mutually_exclusive_group(required=True)
    stop.add_argument("--max-count", type=int)
    stop.add_argument("--max-curvature", type=float)
    stop.add_argument("--min-residual", type=float)

    p = sub.add_parser("converge", parents=[with_domain], help="rule error vs N with certificates")
    p.add_argument("--function", required=True, help="e.g. const:1, re:2@10,10, log@10,10, expcos")
    p.add_argument("--grid", type=_grid, help="comma-separated N values")
    p.add_argument("--n-min", type=int, default=10)
    p.add_argument("--n-max", type=int, default=10_000)
    p.add_argument("--points", type=int, default=13)
    p.add_argument("--normalize", action="store_true", help="divide u by its closed-form sup bound")
    p.add_argument("--oracle", choices=["quadrature", "packing"], default="quadrature")
    p.add_argument("--sup", choices=["auto", "closed", "sampled"], default="auto")
    p.add_argument("--mc-baseline", action="store_true")
    p.add_argument("--l1", action="store_true")
    p.add_argument("--rule-dump", help="write the rule at the largest N here")

    p = sub.add_parser("fit-residual", parents=[with_domain], help="fit residual ~ N^slope")
    p.add_argument("--n-min", type=int, default=1_000)
    p.add_argument("--n-max", type=int, default=100_000)
    p.add_argument("--points", type=int, default=40)

    p = sub.add_parser("fit-counting", parents=[with_domain], help="fit N(T) ~ T^alpha")
    p.add_argument("--t-min", type=float, default=1e2)
    p.add_argument("--t-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=40)
    p.add_argument("--band-ratio", type=float, default=2.0)

    p = sub.add_parser("lp-check", parents=[with_domain], help="L^p norm of the residual indicator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    p.add_argument("--samples", type=int, default=config.MC_SAMPLES)

    p = sub.add_parser("greedy", parents=[common], help="randomized greedy baseline")
    p.add_argument("--region", default="square:1", help="square:s, disk:R or ellipse:a,b")
    p.add_argument("--target-n", type=int, default=10_000)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--fit-min", type=float, default=1e2)
    p.add_argument("--fit-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=40)

    sub.add_parser("validate", parents=[with_domain], help="check a domain file")
    return parser


def run(args):
    tol = TangencyTolerance(args.tolerance_rel, args.tolerance_abs)
    if args.command == "validate":
        report = cmd_validate(resolve_domain_path(args.domain), tol, args.out)
        return EXIT_OK if report.results["ok"] else EXIT_VALIDATION
    if args.command == "greedy":
        cmd_greedy(parse_region(args.region), args.target_n, args.seeds, args.fit_min, args.fit_max,
                   args.points, args.out, args.threads, progress=args.progress)
        return EXIT_OK

    print(f"📦 Loading domain {args.domain}...")
    domain = load_domain(resolve_domain_path(args.domain), tol)
    if args.command == "generate":
        stop = StopCriterion(args.max_count, args.max_curvature, args.min_residual)
        cmd_generate(domain, stop, args.out, tol, args.progress)
    elif args.command == "converge":
        u = parse_function(args.function)
        if args.normalize:
            u = u.normalized(domain)
        grid = args.grid or log_spaced(args.n_min, args.n_max, args.points, integer=True).tolist()
        report = cmd_converge(domain, u, grid, args.out, tol, args.threads, args.oracle, args.sup,
                              args.mc_baseline, args.l1, args.seed, rule_dump=args.rule_dump, progress=args.progress)
        # the report is still written; a broken certificate is a numeric failure
        if report.results["all_honest"] is False:
            return EXIT_NUMERIC
    elif args.command == "fit-residual":
        cmd_fit_residual(domain, args.n_min, args.n_max, args.points, args.out, tol, args.progress)
    elif args.command == "fit-counting":
        cmd_fit_counting(domain, args.t_min, args.t_max, args.points, args.band_ratio, args.out, tol, args.progress)
    elif args.command == "lp-check":
        cmd_lp_check(domain, args.n, args.p, args.samples, args.seed, args.out, tol, progress=args.progress)
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(args)
    except DomainValidationError as e:
        # the message already lists every violation
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    except ApolloniaError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
