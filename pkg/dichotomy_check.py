#!/usr/bin/env python3
"""
Exponential Dichotomy Checker
-----------------------------
Verify, estimate, transform, extend and perturb exponential dichotomies of
x(k+1) = A(k)x(k), with A(k) allowed to be singular.

This script is the command line front end. Every subcommand writes one JSON
report to stdout (or to --out) and exits with 0 for a positive verdict, 1 for
a well-formed negative verdict and 2 for input or usage errors.

Usage:
    python dichotomy_check.py <command> (--fixture NAME | --problem FILE) [options]

Commands:
    verify        Check a certificate's inequalities on a window
    estimate      Fit the constant L (and alpha when not given) on a window
    convert       Re-express constants in form A (L, alpha) or B (M, K, alpha)
    project       Change the complementary subspace (--complement, --rebase)
    rebase        Prescribe the complement at an interior point, or look for
                  two projections that agree there (--witness)
    glue          Split a certificate at --at and glue the halves back
    extend        Extend a half-line dichotomy to 0 (--to-zero) or to --to
    embed         Embed a dichotomy on an interval into one on Z
    perturb       Roughness check for A(k)(I + B(k))
    constants     Predicted constants for K, alpha, delta
    finite-time   Uniform window dichotomies and the global certificate
    fixtures      List the built-in example systems

Exponents use natural logarithms: a certificate (L, alpha) bounds
|Phi(k,m)P(m)| by L e^{-alpha(k-m)}. Windows are written a:b; negative
starts need the = form, e.g. --window=-30:40.

Environment:
    DICHOTOMY_TOL  tolerance override, a float (tol_residual) or
                   key=value pairs such as tol_rank=1e-10,tol_residual=1e-9
"""

import argparse
import json
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from dichotomy_checker.config import get_config, get_tolerances, reload_config, using_tolerances
from dichotomy_checker.errors import (
    ComplementConstraintViolated,
    ConfigurationError,
    DichotomyError,
    ExtensionObstructed,
    NoDecay,
    NoGap,
    NotAdmissible,
    NotInjectiveOnNullspace,
    ProblemFileError,
    RankMismatch,
    SigmaTooLarge,
    TransversalityFailure,
    UsageError,
)
from dichotomy_checker.dichotomy import (
    DichotomyCertificate,
    FormA,
    FormB,
    as_form_a,
    as_form_b,
    check_subspace_identities,
    convert_certificate,
    estimate_constants,
    verify_certificate,
)
from dichotomy_checker.extension import (
    can_extend_minus,
    can_extend_plus,
    embed_in_Z,
    extend_minus,
    extend_plus,
)
from dichotomy_checker.finitetime import FiniteTimeHypothesis, finite_time_check
from dichotomy_checker.linalg import Subspace
from dichotomy_checker.problems import Problem, load_problem, report_envelope
from dichotomy_checker.projections import (
    MINUS,
    PLUS,
    change_complement_minus,
    change_complement_plus,
    glue_half_lines,
    nonuniqueness_witness,
    rebase_at_m,
)
from dichotomy_checker.roughness import (
    ode_constants,
    predicted_constants,
    random_perturbation,
    verify_roughness,
)
from dichotomy_checker.system.fixtures import fixture_labels, get_fixture
from dichotomy_checker.system.sequence import Interval
from dichotomy_checker.utils.common import dumps_report, level_for, save_json_data, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

# Library errors that describe a property of the system, not a bad input
NEGATIVE_VERDICTS = (
    ComplementConstraintViolated,
    ExtensionObstructed,
    NoDecay,
    NoGap,
    NotAdmissible,
    NotInjectiveOnNullspace,
    RankMismatch,
    SigmaTooLarge,
    TransversalityFailure,
)


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so errors still produce a report."""

    def error(self, message):
        raise UsageError(message)


def parse_window(text: str) -> Interval:
    try:
        return Interval.parse(text)
    except ValueError as e:
        raise UsageError(str(e))


def parse_columns(text: str, n: int) -> Subspace:
    """A subspace from a JSON list of column vectors, e.g. '[[1, 1]]'."""
    try:
        columns = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise UsageError(f"Subspace must be a JSON list of columns: {e}")
    if columns.ndim == 1:
        columns = columns.reshape(1, -1)
    if columns.ndim != 2 or columns.shape[1] != n:
        raise UsageError(f"Each column must have {n} entries, got shape {columns.shape}")
    return Subspace.from_columns(columns.T)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    config = get_config()
    cli_defaults = config.get_cli_defaults()
    default_window = cli_defaults.get('window', '0:50')

    common = ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--fixture", help=f"Built-in system ({', '.join(fixture_labels())})")
    source.add_argument("--problem", help="Path to a JSON problem file")
    common.add_argument("--window", default=None,
                        help=f"Window a:b the certificate is judged on (default: {default_window})")
    common.add_argument("--alpha", type=float, help="Exponent alpha (natural log convention)")
    common.add_argument("--L", type=float, help="Form A constant L")
    common.add_argument("--M", type=float, help="Form B projection bound M")
    common.add_argument("--K", type=float, help="Form B constant K (finite-time: the window constant)")
    common.add_argument("--out", "-o", default=cli_defaults.get('output'),
                        help="Write the JSON report to this path instead of stdout")
    common.add_argument("--seed", type=int, default=cli_defaults.get('seed', 0),
                        help=f"Seed for random perturbations (default: {cli_defaults.get('seed', 0)})")
    common.add_argument("--config", help="Path to configuration file (overrides default config)")
    common.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

    parser = ArgumentParser(
        description="Check and construct exponential dichotomies of linear difference equations.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__
    )
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)

    commands.add_parser("verify", parents=[common], help="Check a certificate on a window")

    commands.add_parser("estimate", parents=[common], help="Fit dichotomy constants on a window")

    convert = commands.add_parser("convert", parents=[common], help="Convert between forms A and B")
    convert.add_argument("--to", dest="target", choices=["A", "B"], required=True, help="Target form")

    project = commands.add_parser("project", parents=[common], help="Change the complementary subspace")
    project.add_argument("--complement", required=True,
                         help="Subspace as a JSON list of column vectors, e.g. '[[1, 1]]'")
    project.add_argument("--side", choices=[PLUS, MINUS], default=PLUS, help="Half-line side (default: plus)")
    project.add_argument("--rebase", type=int, metavar="M",
                         help="Prescribe the subspace at the interior point M instead of the base point")

    rebase = commands.add_parser("rebase", parents=[common], help="Prescribe the complement at an interior point")
    rebase.add_argument("--m", type=int, required=True, help="Interior point")
    rebase.add_argument("--side", choices=[PLUS, MINUS], default=PLUS, help="Half-line side (default: plus)")
    rebase_mode = rebase.add_mutually_exclusive_group(required=True)
    rebase_mode.add_argument("--subspace", help="Subspace at m as a JSON list of column vectors")
    rebase_mode.add_argument("--witness", action="store_true",
                             help="Look for two projections agreeing at m and differing at the base point")

    glue = commands.add_parser("glue", parents=[common], help="Split at a point and glue the half-lines")
    glue.add_argument("--at", type=int, default=0, help="Gluing point (default: 0)")

    extend = commands.add_parser("extend", parents=[common], help="Extend a half-line dichotomy")
    target = extend.add_mutually_exclusive_group()
    target.add_argument("--to-zero", action="store_true", help="Extend to 0")
    target.add_argument("--to", type=int, help="Extend to this index")
    extend.add_argument("--side", choices=[PLUS, MINUS], help="Half-line side (default: from the family)")
    extend.add_argument("--check-only", action="store_true", help="Report the criterion without extending")
    extend.add_argument("--keep-projection", action="store_true",
                        help="Minus side: refuse to re-choose the stable subspace")

    embed = commands.add_parser("embed", parents=[common], help="Embed an interval dichotomy into Z")
    embed.add_argument("--restrict", help="Restrict the family to a:b before embedding")

    perturb = commands.add_parser("perturb", parents=[common], help="Roughness check for A(k)(I + B(k))")
    perturb.add_argument("--delta", type=float, help="Spectral norm of the seeded random B(k)")
    perturb.add_argument("--perturb-window",
                         help="Steps a:b carrying the random B(k) (default: the solver window)")

    constants = commands.add_parser("constants", help="Predicted roughness constants")
    constants.add_argument("--K", type=float, required=True, help="Dichotomy constant K >= 1")
    constants.add_argument("--alpha", type=float, required=True, help="Exponent alpha > 0")
    constants.add_argument("--delta", type=float, required=True, help="Perturbation bound delta >= 0")
    constants.add_argument("--ode", action="store_true", help="Continuous-time constants instead")
    constants.add_argument("--out", "-o", default=cli_defaults.get('output'), help="Report path")
    constants.add_argument("--config", help="Path to configuration file")
    constants.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

    finite = commands.add_parser("finite-time", parents=[common], help="Finite-window hypotheses")
    finite.add_argument("--N", type=int, required=True, help="Window length")
    finite.add_argument("--density", type=int, required=True, help="Density gap: every run of this many "
                                                                   "integers contains a base point")
    finite.add_argument("--Kbar", type=float, required=True, help="Target global constant")
    finite.add_argument("--beta-bar", type=float, required=True, help="Target global exponent")
    finite.add_argument("--norm-bound", type=float, required=True, help="Bound M on |A(k)|")
    finite.add_argument("--base-points", help="Comma separated base points (default: discovered)")

    fixtures = commands.add_parser("fixtures", help="List built-in systems")
    fixtures.add_argument("--out", "-o", default=cli_defaults.get('output'), help="Report path")
    fixtures.add_argument("--config", help="Path to configuration file")
    fixtures.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("No command given; use --help for the list of commands")
    return args


def load_source(args, use_constants: bool = True) -> Tuple[Problem, Optional[DichotomyCertificate]]:
    """The problem named by --fixture or --problem and its certificate, if it states one.

    Constants on the command line replace the stated ones; the window is
    clipped to the interval of the projection family.
    """
    if args.fixture:
        fixture = get_fixture(args.fixture)
        problem = Problem(seq=fixture.sequence, family=fixture.known_projection,
                          form=FormA(L=fixture.L, alpha=fixture.alpha), source=fixture.label)
    elif args.problem:
        problem = load_problem(args.problem)
    else:
        raise UsageError("Give a system with --fixture or --problem")
    # problem tolerances hold for the rest of this command only
    args.scope.enter_context(using_tolerances(problem.tolerances))

    form = command_line_form(args, problem.form) if use_constants else None
    if form is not None:
        problem.form = form
    if args.window:
        window = parse_window(args.window)
    elif problem.window is not None:
        window = problem.window
    else:
        window = parse_window(get_config().get('cli_defaults.window', '0:50'))
    if problem.family is not None:
        interval = problem.family.interval
        start = max(window.start, interval.start) if interval.start is not None else window.start
        end = min(window.end, interval.end) if interval.end is not None else window.end
        if start > end:
            raise UsageError(f"Window {window} does not meet the family interval {interval}")
        window = Interval.finite(start, end)
    problem.window = window
    if problem.family is None or problem.form is None:
        return problem, None
    return problem, problem.certificate(window)


def command_line_form(args, stated):
    """Form A from --L/--alpha, form B from --M/--K/--alpha, filled in from the stated form."""
    if args.M is not None or args.K is not None:
        base = as_form_b(stated) if stated is not None else None
        M = args.M if args.M is not None else (base.M if base else None)
        K = args.K if args.K is not None else (base.K if base else None)
        alpha = args.alpha if args.alpha is not None else (base.alpha if base else None)
        if None in (M, K, alpha):
            raise UsageError("Form B needs --M, --K and --alpha")
        return FormB(M=M, K=K, alpha=alpha)
    if args.L is not None or args.alpha is not None:
        base = as_form_a(stated) if stated is not None else None
        L = args.L if args.L is not None else (base.L if base else None)
        alpha = args.alpha if args.alpha is not None else (base.alpha if base else None)
        if None in (L, alpha):
            raise UsageError("Form A needs --L and --alpha")
        return FormA(L=L, alpha=alpha)
    return None


def require_certificate(problem: Problem, cert: Optional[DichotomyCertificate]) -> DichotomyCertificate:
    if cert is None:
        raise ProblemFileError(f"{problem.source} needs a projection family and constants for this command",
                               field="projection")
    return cert


def verdict(report: Dict, passed: bool) -> Tuple[int, Dict]:
    return (EXIT_OK if passed else EXIT_NEGATIVE), report


def run_verify(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    report = verify_certificate(cert, problem.window)
    window = problem.window
    identities = check_subspace_identities(cert, window.end, window.start)
    return verdict({"certificate": cert.as_dict(), "verification": report.as_dict(),
                    "subspace_identities": identities.as_dict()}, report.passed)


def run_estimate(args) -> Tuple[int, Dict]:
    problem, _ = load_source(args, use_constants=False)
    if problem.family is None:
        raise ProblemFileError(f"{problem.source} has no projection family", field="projection")
    cert = estimate_constants(problem.seq, problem.family, problem.window, alpha=args.alpha)
    return EXIT_OK, {"certificate": cert.as_dict()}


def run_convert(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    converted = convert_certificate(require_certificate(problem, cert), args.target)
    return EXIT_OK, {"certificate": converted.as_dict()}


def _checked(cert: DichotomyCertificate, window: Interval) -> Tuple[int, Dict]:
    report = verify_certificate(cert, window)
    return verdict({"certificate": cert.as_dict(), "verification": report.as_dict(),
                    "projection_at_start": cert.family.at(window.start).tolist()},
                   report.passed)


def run_project(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    w = parse_columns(args.complement, cert.seq.n)
    if args.rebase is not None:
        changed = rebase_at_m(cert, args.rebase, w, args.side)
    elif args.side == PLUS:
        changed = change_complement_plus(cert, w)
    else:
        changed = change_complement_minus(cert, w)
    return _checked(changed, changed.verified_window)


def run_rebase(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    if args.witness:
        witness = nonuniqueness_witness(cert, args.m, args.side)
        return verdict({"witness": witness.as_dict()}, witness.found)
    changed = rebase_at_m(cert, args.m, parse_columns(args.subspace, cert.seq.n), args.side)
    return _checked(changed, changed.verified_window)


def run_glue(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    window = problem.window
    if not window.start <= args.at <= window.end:
        raise UsageError(f"--at {args.at} lies outside {window}")
    plus = cert.replace(verified_window=Interval.finite(args.at, window.end))
    minus = cert.replace(verified_window=Interval.finite(window.start, args.at))
    glued = glue_half_lines(plus, minus)
    report = verify_certificate(glued, window)
    distance = float(np.linalg.norm(glued.family.at(args.at) - cert.family.at(args.at), 2))
    return verdict({"certificate": glued.as_dict(), "verification": report.as_dict(),
                    "projection_change_at_glue": distance}, report.passed)


def run_extend(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    to = 0 if args.to_zero or args.to is None else args.to
    side = args.side or (MINUS if cert.family.interval.kind == "half_minus" else PLUS)

    if side == PLUS:
        check = can_extend_plus(cert, to=to)
    else:
        check = can_extend_minus(cert, to=to, preserve_projection=args.keep_projection)
    result = {"criterion": check.as_dict()}
    if not check.extendable or args.check_only:
        return verdict(result, check.extendable)

    try:
        extended = extend_plus(cert, to=to) if side == PLUS else extend_minus(cert, to=to)
    except ExtensionObstructed as e:
        result["obstruction"] = {"index": e.index, "obstruction": e.obstruction, "message": str(e)}
        return EXIT_NEGATIVE, result
    report = verify_certificate(extended, extended.verified_window)
    guaranteed = verify_certificate(extended.replace(form=extended.guaranteed), extended.verified_window)
    result.update({"certificate": extended.as_dict(), "verification": report.as_dict(),
                   "guaranteed_verification": guaranteed.as_dict()})
    return verdict(result, report.passed and guaranteed.passed)


def run_embed(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    if args.restrict:
        interval = parse_window(args.restrict)
        cert = cert.replace(family=cert.family.restricted_to(interval), verified_window=interval)
    _, embedded = embed_in_Z(cert)
    report = verify_certificate(embedded, problem.window)
    return verdict({"certificate": embedded.as_dict(), "verification": report.as_dict()}, report.passed)


def run_perturb(args) -> Tuple[int, Dict]:
    problem, cert = load_source(args)
    cert = require_certificate(problem, cert)
    window = problem.window
    if args.delta is not None:
        if args.perturb_window:
            b_window = parse_window(args.perturb_window)
        else:
            pad = int(get_config().get('roughness.min_margin', 10)) * 10
            b_window = Interval.finite(window.start - pad, window.end + pad)
        perturbation = random_perturbation(cert.seq.n, b_window, args.delta, seed=args.seed)
    elif problem.perturbation is not None:
        perturbation = problem.perturbation
    else:
        raise UsageError("Give --delta or a problem file with a perturbation")
    report = verify_roughness(cert, perturbation, window)
    return verdict({"roughness": report.as_dict()}, report.passed)


def run_constants(args) -> Tuple[int, Dict]:
    if args.ode:
        result = ode_constants(args.K, args.alpha, args.delta)
    else:
        result = predicted_constants(args.K, args.alpha, args.delta)
    return verdict({"constants": result.as_dict()}, result.admissible)


def run_finite_time(args) -> Tuple[int, Dict]:
    problem, _ = load_source(args, use_constants=False)
    if args.K is None or args.alpha is None:
        raise UsageError("finite-time needs the window constants --K and --alpha")
    base_points = None
    if args.base_points:
        try:
            base_points = [int(part) for part in args.base_points.split(',') if part.strip()]
        except ValueError:
            raise UsageError(f"Invalid base points '{args.base_points}'")
    hypothesis = FiniteTimeHypothesis(N=args.N, density=args.density, K=args.K, alpha=args.alpha,
                                      M=args.norm_bound, Kbar=args.Kbar, beta_bar=args.beta_bar,
                                      base_points=base_points)
    report = finite_time_check(problem.seq, hypothesis, problem.window)
    return verdict({"finite_time": report.as_dict()}, report.passed)


def run_fixtures(args) -> Tuple[int, Dict]:
    listing = []
    for label in fixture_labels():
        fixture = get_fixture(label)
        listing.append({
            "label": label,
            "description": fixture.description,
            "n": fixture.sequence.n,
            "interval": fixture.sequence.interval.as_dict(),
            "projection_interval": None if fixture.known_projection is None
            else fixture.known_projection.interval.as_dict(),
        })
    return EXIT_OK, {"fixtures": listing}


COMMANDS = {
    "verify": run_verify,
    "estimate": run_estimate,
    "convert": run_convert,
    "project": run_project,
    "rebase": run_rebase,
    "glue": run_glue,
    "extend": run_extend,
    "embed": run_embed,
    "perturb": run_perturb,
    "constants": run_constants,
    "finite-time": run_finite_time,
    "fixtures": run_fixtures,
}


def run_command(argv: Optional[List[str]] = None) -> Tuple[int, Dict]:
    """Run one command and return its exit code and JSON report.

    Args:
        argv: Command line without the program name (default: sys.argv[1:])

    Returns:
        tuple: (exit code, report dictionary)
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    command = argv[0] if argv and not argv[0].startswith('-') else None
    with ExitStack() as scope:
        try:
            args = parse_arguments(argv)
            if args.config:
                reload_config(args.config)
            setup_logging(level_for(args.verbose))
            command = args.command
            args.scope = scope
            code, result = COMMANDS[command](args)
            error = None
        except NEGATIVE_VERDICTS as e:
            logger.info(f"Negative verdict: {e}")
            code, result, error = EXIT_NEGATIVE, None, e
        except (DichotomyError, ValueError) as e:
            logger.error(f"{type(e).__name__}: {e}")
            code, result, error = EXIT_ERROR, None, e

        try:
            tolerances = get_tolerances()
        except ConfigurationError:
            tolerances = None
    report = report_envelope(command or "", argv, tolerances, code, result=result, error=error)
    return code, report


def main():
    """Main entry point."""
    code, report = run_command()
    out = report_out_path(sys.argv[1:])
    if out:
        path = Path(out)
        saved = save_json_data(report, path.parent, path.name)
        if saved is None:
            sys.exit(EXIT_ERROR)
        print(f"Report saved to: {saved}", file=sys.stderr)
    else:
        print(dumps_report(report))
    sys.exit(code)


def report_out_path(argv: List[str]) -> Optional[str]:
    """The --out/-o value, read without argparse so usage errors can still be saved."""
    for i, arg in enumerate(argv):
        if arg in ("--out", "-o") and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--out="):
            return arg.split("=", 1)[1]
    return get_config().get('cli_defaults.output')


if __name__ == "__main__":
    main()
