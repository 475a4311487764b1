"""Command line entry point: ``anisoscale <command> [options]``.

Every command prints a JSON document to stdout and, with ``--out``, writes its
files into that directory. Exit codes: 0 success, 1 failed verdict, 2 usage or
malformed configuration, 3 invalid parameters, 4 boundary rejection,
5 existence condition, 6 numerical failure.
"""
# stdlib
import argparse
import logging
import os
import sys

# Package
from anisoscale.config import RunConfig
from anisoscale.core import aggregate_verdict, full_report, summary_rows
from anisoscale.field import rectangle_extents, replicate_partial_sums, simulate_window, variance_exact
from anisoscale.geometry import FAMILIES, classify_scenario, existence_condition, exponents, region, scenario_to_dict
from anisoscale.io import dumps, read_json, replicate_rows, report_from_dict, report_to_dict, write_csv, write_json
from anisoscale.limits import LimitKernel, QuadratureSpec, limit_covariance
from anisoscale.checks.covariance import as_rectangle
from anisoscale.checks.slope import resolve_radius
from anisoscale.model import TruncationBox

# Exceptions
from anisoscale.errors import (BoundaryRejectionException, ExistenceConditionException, InsufficientRangeException,
                               InvalidParametersException, QuadratureException, TruncationException,
                               WindowTooSmallException)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_BOUNDARY = 4
EXIT_EXISTENCE = 5
EXIT_NUMERICAL = 6

# Order matters: BoundaryRejectionException derives from InvalidParametersException.
EXIT_CODES = (
    (BoundaryRejectionException, EXIT_BOUNDARY),
    (InvalidParametersException, EXIT_INVALID),
    (ExistenceConditionException, EXIT_EXISTENCE),
    (TruncationException, EXIT_NUMERICAL),
    (QuadratureException, EXIT_NUMERICAL),
    (InsufficientRangeException, EXIT_NUMERICAL),
    (WindowTooSmallException, EXIT_NUMERICAL),
)

# Set up logger
logger = logging.getLogger(__name__)


class UsageError(Exception):
    """The command line or the configuration document is malformed."""


def load_config(args):
    """The run configuration: the ``--config`` document with the command line overrides applied."""
    if args.config:
        try:
            config = RunConfig.from_file(args.config)
        except (OSError, InvalidParametersException) as e:
            raise UsageError("cannot read %s: %s" % (args.config, e))
    else:
        config = RunConfig()
    model = dict(getattr(config, "model", {}) or {})
    for flag, keys in (("q", ("q1", "q2", "q3")), ("c", ("c1", "c2", "c3"))):
        values = getattr(args, flag, None)
        if values:
            model.update(zip(keys, values))
    if getattr(args, "nu", None) is not None:
        model["nu"] = args.nu
    if model:
        config.model = model
    for key in ("gamma", "seed", "threads", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "lambda_grid", None):
        config.lambda_grid = args.lambda_grid
    if getattr(args, "corner", None):
        config.corners = [args.corner]
    return config.validate()


def _require(config, *keys):
    missing = [key for key in keys if not hasattr(config, key)]
    if missing:
        raise UsageError("missing configuration keys: %s" % ", ".join(missing))


def _emit(config, document, name=None):
    document = dict(document, config_hash=config.config_hash(), seed=getattr(config, "seed", None))
    print(dumps(document))
    if name and getattr(config, "out", None):
        write_json(os.path.join(config.out, name), document)
    return document


def _quadrature(config, key="quadrature"):
    return QuadratureSpec.from_dict(getattr(config, key, None))


def cmd_classify(config, args):
    """Limit family, permutation, region, balance cell and H of (q, γ)."""
    _require(config, "model", "gamma")
    scenario = classify_scenario(config.params(), config.scaling())
    _emit(config, scenario_to_dict(scenario), "classify.json")
    return EXIT_OK


def cmd_exponents(config, args):
    """The exponents of all six families with their existence conditions."""
    _require(config, "model", "gamma")
    params = config.params()
    exps = exponents(params, config.scaling())
    families = {}
    for family in FAMILIES:
        holds, description = existence_condition(family, params.q)
        families[family] = {"calH": exps.calH[family], "H": exps.H[family], "exists": holds,
                            "condition": description}
    _emit(config, {"model": params.to_dict(), "gamma": list(config.gamma), "region": region(params),
                   "families": families}, "exponents.json")
    return EXIT_OK


def cmd_simulate(config, args):
    """Simulate one field window and write it as a binary array with a JSON header."""
    _require(config, "model")
    params = config.params()
    radius = getattr(config, "radius", "auto")
    radius = TruncationBox.of(args.radius if radius == "auto" else radius)
    window = simulate_window(params, args.extents, getattr(config, "seed", 0), radius,
                             law=getattr(config, "law", "normal"),
                             tail_fraction=getattr(config, "tail_target", 1e-4),
                             check_tail=not args.skip_tail_check, threads=getattr(config, "threads", None))
    document = {
        "extents": list(window.extents),
        "provenance": window.provenance,
        "mean": float(window.values.mean()),
        "variance": float(window.values.var()),
    }
    if getattr(config, "out", None):
        os.makedirs(config.out, exist_ok=True)
        window.export(os.path.join(config.out, "window"))
        document["window"] = os.path.join(config.out, "window")
    _emit(config, document, "simulate.json")
    return EXIT_OK


def cmd_variance(config, args):
    """Exact normalized variances λ^{-2H} Var S_λ(x) over the λ grid, with optional Monte Carlo replicates."""
    _require(config, "model", "gamma", "lambda_grid", "corners")
    scenario = classify_scenario(config.params(), config.scaling())
    threads = getattr(config, "threads", None)
    rows, replicates = [], []
    for x in config.corners:
        for lam in config.lambda_grid:
            box = resolve_radius(getattr(config, "radius", "auto"), rectangle_extents(scenario.gamma, lam, x))
            estimate = variance_exact(scenario.params, scenario.gamma, lam, x, scenario.H, box,
                                      tolerance=getattr(config, "tail_target", None), threads=threads)
            rows.append({"lambda": lam, "x": list(x), "value": estimate.value, "error": estimate.error,
                         "extrapolated": estimate.extrapolated, "radius": list(box)})
            if getattr(config, "replicates", None):
                stats = replicate_partial_sums(scenario.params, scenario.gamma, lam, x, scenario.H, box,
                                               config.replicates, getattr(config, "seed", 0),
                                               law=getattr(config, "law", "normal"), threads=threads)
                replicates.extend(replicate_rows(stats))
                rows[-1]["monte_carlo"] = {"variance": stats.variance, "stderr": stats.stderr,
                                           "skewness": stats.skewness, "kurtosis": stats.kurtosis}
    if getattr(config, "out", None):
        write_csv(os.path.join(config.out, "variance.csv"),
                  [{"lambda": row["lambda"], "x": " ".join(map(str, row["x"])), "value": row["value"],
                    "error": row["error"], "extrapolated": row["extrapolated"],
                    "radius": " ".join(map(str, row["radius"]))} for row in rows],
                  ["lambda", "x", "value", "error", "extrapolated", "radius"])
        if replicates:
            write_csv(os.path.join(config.out, "replicates.csv"), replicates, ["lambda", "replicate", "S", "seed"])
    _emit(config, {"family": scenario.family, "H": scenario.H, "rows": rows}, "variance.json")
    return EXIT_OK


def cmd_limit_cov(config, args):
    """Limit covariances of the configured pairs (or variances of the configured corners)."""
    _require(config, "model", "gamma")
    scenario = classify_scenario(config.params(), config.scaling())
    outer, inner = _quadrature(config), _quadrature(config, "inner_quadrature")
    pairs = getattr(config, "pairs", None) or [[x, x] for x in getattr(config, "corners", [])]
    if not pairs:
        raise UsageError("limit-cov needs pairs or corners")
    rows = []
    for x, y in pairs:
        K, K2 = as_rectangle(x), as_rectangle(y)
        k = LimitKernel(scenario.family, scenario.params, K.upper, scenario.pi, K.lower, inner)
        k2 = LimitKernel(scenario.family, scenario.params, K2.upper, scenario.pi, K2.lower, inner)
        result = limit_covariance(k, k2, outer, getattr(config, "threads", None))
        rows.append({"x": x, "y": y, "value": result.value, "error": result.error, "level": result.level})
    _emit(config, {"family": scenario.family, "quadrature": outer.to_dict(), "rows": rows}, "limit_cov.json")
    return EXIT_OK


def cmd_verify(config, args):
    """Run every check the configuration allows and write the report with its CSV summary."""
    _require(config, "model", "gamma")
    report = full_report(config.params(), config.scaling(), config)
    document = report_to_dict(report)
    print(dumps(document))
    if getattr(config, "out", None):
        write_json(os.path.join(config.out, "report.json"), document)
        write_csv(os.path.join(config.out, "summary.csv"), summary_rows(report),
                  ["check", "verdict", "detail", "thresholds", "config_hash", "seed"])
    verdict = aggregate_verdict(report)
    logger.info("[verify] Aggregate verdict: %s", verdict)
    if report.rejection is not None:
        return EXIT_BOUNDARY if report.rejection["kind"] == "boundary" else EXIT_EXISTENCE
    return EXIT_OK if verdict == "pass" else EXIT_FAILED


def cmd_report(config, args):
    """Re-render a saved report document as the CSV summary."""
    try:
        report = report_from_dict(read_json(args.report))
    except (OSError, ValueError) as e:
        raise UsageError("cannot read report %s: %s" % (args.report, e))
    rows = summary_rows(report)
    print(dumps({"rows": rows, "verdict": aggregate_verdict(report)}))
    target = os.path.join(config.out, "summary.csv") if getattr(config, "out", None) else None
    if target:
        write_csv(target, rows, ["check", "verdict", "detail", "thresholds", "config_hash", "seed"])
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "exponents": cmd_exponents,
    "simulate": cmd_simulate,
    "variance": cmd_variance,
    "limit-cov": cmd_limit_cov,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration document")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument("--verbose", "-v", action="count", default=0, help="more logging (repeatable)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--q", type=float, nargs=3, metavar=("Q1", "Q2", "Q3"), help="tail exponents")
    model.add_argument("--c", type=float, nargs=3, metavar=("C1", "C2", "C3"), help="axis weights")
    model.add_argument("--nu", type=float, help="shape exponent")
    model.add_argument("--gamma", type=float, nargs=3, metavar=("G1", "G2", "G3"), help="scaling exponents")
    model.add_argument("--lambda", dest="lambda_grid", type=float, nargs="+", help="scales")
    model.add_argument("--corner", type=float, nargs=3, metavar=("X1", "X2", "X3"), help="rectangle corner")

    parser = argparse.ArgumentParser(prog="anisoscale", description="Anisotropic scaling limits of LRD fields on Z^3.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        parents = [common] if name == "report" else [common, model]
        sub = commands.add_parser(name, parents=parents, help=func.__doc__.splitlines()[0])
        if name == "simulate":
            sub.add_argument("--extents", type=int, nargs=3, required=True, metavar=("N1", "N2", "N3"))
            sub.add_argument("--radius", type=int, default=32, help="truncation radius when the config has none")
            sub.add_argument("--skip-tail-check", action="store_true")
        if name == "report":
            sub.add_argument("report", help="saved report.json")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = load_config(args)
        return COMMANDS[args.command](config, args)
    except UsageError as e:
        print("anisoscale %s: error: %s" % (args.command, e), file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        for exc_type, code in EXIT_CODES:
            if isinstance(e, exc_type):
                print("anisoscale %s: %s: %s" % (args.command, type(e).__name__, e), file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
