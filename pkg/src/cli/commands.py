"""
Module: commands

argparse front end. Every subcommand returns an exit code:

    0  success
    1  invalid input, unparsable expression, target not in Y, failed check
    2  approximate ran out of knot budget (best-effort outputs still written)
"""

import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from src import __version__
from src.algebra.pl_algebra import constant, hat, network_to_pl, pl_to_network, step_f, step_g
from src.approximation.approximator import ApproxConfig, approximate
from src.config.settings import configure_logging, worker_count
from src.core.core_types import PiecewiseLinear, ReLUNetwork, YTarget, eval_network
from src.core.errors import ReluSpanError
from src.core.file_formats import (
    atomic_write_text,
    dumps_json,
    network_to_json,
    pl_to_json,
    read_function,
    write_network,
)
from src.duality.dual_checker import (
    DiscreteMeasure,
    annihilation_test,
    covering_centers,
    load_measure,
    separation_demo,
    transcript,
)
from src.metrics.weighted_norm import (
    AlphaSchedule,
    CompactGrid,
    boundary_value,
    evaluate,
    y_norm_exact,
    y_norm_grid,
)
from src.parsing.expr_parser import parse_target
from src.processing.generate_run_report import RunReport, samples_frame, write_report, write_samples

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-12
ROUND_TRIP_TOL = 1e-9
FAULT_SIZE = 1e-6
DEFAULT_GRID = 10**5


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1; code 2 is reserved for an exhausted knot budget."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(payload: dict, report_path: Optional[str]) -> None:
    if report_path:
        atomic_write_text(report_path, dumps_json(payload))
        logger.info("report written to %s", report_path)
    else:
        sys.stdout.write(dumps_json(payload))


def _opaque_target(path: str, alpha_plus: Optional[float], alpha_minus: Optional[float]) -> YTarget:
    """A network or PL file wrapped as a black-box target with declared boundary values."""
    fn = read_function(path)
    return YTarget(
        evaluator=lambda x: evaluate(fn, x),
        alpha_plus=boundary_value(fn, "+") if alpha_plus is None else alpha_plus,
        alpha_minus=boundary_value(fn, "-") if alpha_minus is None else alpha_minus,
        label=Path(path).stem,
    )


# ---------------------------------------------------------------------------
# approximate
# ---------------------------------------------------------------------------

def cmd_approximate(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    if args.expr is not None:
        target = parse_target(args.expr, args.alpha_plus, args.alpha_minus)
    else:
        target = _opaque_target(args.target_file, args.alpha_plus, args.alpha_minus)

    cfg = ApproxConfig(
        tolerance=args.eps,
        max_knots=args.max_knots,
        initial_radius=args.initial_radius,
        oracle_resolution=args.oracle_resolution,
        alpha_schedule=AlphaSchedule(k_start=args.alpha_k_start, k_stop=args.alpha_k_stop, tol=args.alpha_tol),
    )
    certificate = approximate(target, cfg)

    if args.out:
        write_network(args.out, certificate.network)
        logger.info("network written to %s", args.out)
    if args.samples:
        write_samples(args.samples, samples_frame(target, certificate.network, args.sample_resolution))

    images: List[Path] = []
    if args.plot_dir or args.pdf:
        from src.charts.create_charts import generate_and_store_plots

        plot_dir = Path(args.plot_dir) if args.plot_dir else Path(args.pdf).parent / "images"
        images = generate_and_store_plots(certificate, target, plot_dir)
    if args.pdf:
        from src.processing.generate_pdf_file import build_pdf_report

        build_pdf_report(args.pdf, certificate, images)

    report = RunReport(
        subcommand="approximate",
        inputs={
            "expr": args.expr,
            "target_file": args.target_file,
            "eps": args.eps,
            "alpha_plus": args.alpha_plus,
            "alpha_minus": args.alpha_minus,
            "max_knots": args.max_knots,
            "initial_radius": args.initial_radius,
            "oracle_resolution": args.oracle_resolution,
            "alpha_schedule": cfg.alpha_schedule.model_dump(),
        },
        outputs={"certificate": certificate.to_json(), "network_file": args.out, "samples_file": args.samples},
        wall_time=time.perf_counter() - start,
    )
    _emit(report.to_json(), args.report)

    if not certificate.success:
        print(
            f"knot budget exhausted: measured error {certificate.measured_error!r} "
            f"> tolerance {certificate.tolerance!r}",
            file=sys.stderr,
        )
        return 2
    return 0


# ---------------------------------------------------------------------------
# norm
# ---------------------------------------------------------------------------

def cmd_norm(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    if args.expr is not None:
        fn: Union[YTarget, ReLUNetwork, PiecewiseLinear] = parse_target(
            args.expr, args.alpha_plus, args.alpha_minus
        )
    else:
        fn = read_function(args.net or args.pl)

    if isinstance(fn, YTarget) and args.exact:
        print("error: --exact needs --net or --pl; use --grid N for expressions", file=sys.stderr)
        return 1
    if args.grid is not None or isinstance(fn, YTarget):
        norm = y_norm_grid(fn, CompactGrid(n=args.grid if args.grid is not None else DEFAULT_GRID))
    else:
        norm = y_norm_exact(fn)

    sys.stdout.write(dumps_json(norm.to_json()))
    if args.report:
        write_report(args.report, RunReport(
            subcommand="norm",
            inputs={"net": args.net, "pl": args.pl, "expr": args.expr, "grid": args.grid},
            outputs={"norm": norm.to_json()},
            wall_time=time.perf_counter() - start,
        ))
    return 0


# ---------------------------------------------------------------------------
# convert
# ---------------------------------------------------------------------------

def _check_points(*fns: PiecewiseLinear) -> np.ndarray:
    knots = np.unique(np.concatenate([np.asarray(p.knots, dtype=float) for p in fns] + [np.zeros(1)]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    return np.unique(np.concatenate((knots, mids, knots - 1.0, knots + 1.0)))


def round_trip_deviation(original: Union[ReLUNetwork, PiecewiseLinear],
                         converted: Union[ReLUNetwork, PiecewiseLinear]) -> float:
    """Largest pointwise disagreement, relative to max(1, value scale), at knots, midpoints and +/-1 offsets."""
    as_pl = [network_to_pl(f) if isinstance(f, ReLUNetwork) else f for f in (original, converted)]
    x = _check_points(*as_pl)
    a = np.asarray(evaluate(original, x), dtype=float)
    b = np.asarray(evaluate(converted, x), dtype=float)
    scale = max(1.0, float(np.max(np.abs(a))))
    tails = max(abs(as_pl[0].m_left - as_pl[1].m_left), abs(as_pl[0].m_right - as_pl[1].m_right))
    return max(float(np.max(np.abs(a - b))) / scale, tails / max(1.0, abs(as_pl[0].m_left), abs(as_pl[0].m_right)))


def cmd_convert(args: argparse.Namespace) -> int:
    fn = read_function(args.input)
    if isinstance(fn, ReLUNetwork):
        converted: Union[ReLUNetwork, PiecewiseLinear] = network_to_pl(fn)
        payload = pl_to_json(converted)
    else:
        converted = pl_to_network(fn)
        payload = network_to_json(converted)

    deviation = round_trip_deviation(fn, converted)
    ok = deviation <= ROUND_TRIP_TOL
    if args.check or not ok:
        print(f"round-trip deviation: {deviation!r} (tol {ROUND_TRIP_TOL!r})")
    if not ok:
        print("error: conversion does not agree pointwise; nothing written", file=sys.stderr)
        return 1

    if args.out:
        atomic_write_text(args.out, dumps_json(payload))
        logger.info("converted %s -> %s", args.input, args.out)
    elif not args.check:
        sys.stdout.write(dumps_json(payload))
    return 0


# ---------------------------------------------------------------------------
# verify-identity
# ---------------------------------------------------------------------------

def identity_deviations(lo: float, hi: float, points: int, inject_fault: bool = False) -> dict:
    """
    Max absolute deviation of each exact network identity on linspace(lo, hi, points).

    Checks the hat identity max(1-|x-1|, 0) = ReLU(x) + ReLU(x-2) - 2 ReLU(x-1),
    x = ReLU(x) - ReLU(-x), the constant gadget, the plateaus of step_f/step_g
    and their vanishing weighted limits at +/-inf.
    """
    x = np.linspace(lo, hi, points)
    hat_net = hat(1.0, 1.0)
    if inject_fault:
        first = hat_net.units[0]
        hat_net = ReLUNetwork.from_triples(
            [(first.a, first.b, first.c + FAULT_SIZE)] + hat_net.triples()[1:]
        )
    identity = ReLUNetwork.from_triples([(1.0, 0.0, 1.0), (-1.0, 0.0, -1.0)])
    level = 2.5

    return {
        "hat": float(np.max(np.abs(eval_network(hat_net, x) - np.maximum(1.0 - np.abs(x - 1.0), 0.0)))),
        "identity": float(np.max(np.abs(eval_network(identity, x) - x))),
        "constant": float(np.max(np.abs(eval_network(constant(level), x) - level))),
        "step_f": float(np.max(np.abs(eval_network(step_f(), x) - np.clip(x, 0.0, 1.0)))),
        "step_g": float(np.max(np.abs(eval_network(step_g(), x) - np.clip(-x, 0.0, 1.0)))),
        "step_limits": max(abs(boundary_value(f, side)) for f in (step_f(), step_g()) for side in ("+", "-")),
    }


def cmd_verify_identity(args: argparse.Namespace) -> int:
    if not args.hi > args.lo or args.points < 2:
        print("error: need --lo < --hi and --points >= 2", file=sys.stderr)
        return 1
    deviations = identity_deviations(args.lo, args.hi, args.points, args.inject_fault)
    for name, dev in deviations.items():
        print(f"{name:12s} max deviation {dev!r}")
    worst = max(deviations.values())
    print(f"max deviation: {worst!r} on [{args.lo!r}, {args.hi!r}] with {args.points} points")
    if worst > IDENTITY_TOL:
        print(f"error: identity violated (tolerance {IDENTITY_TOL!r})", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# dual-demo
# ---------------------------------------------------------------------------

def cmd_dual_demo(args: argparse.Namespace) -> int:
    mu = load_measure(args.measure) if args.measure else DiscreteMeasure.dirac("+inf")
    centers = covering_centers(mu, args.halfwidth)
    verdict = annihilation_test(mu, centers, args.halfwidth, args.tol, workers=args.threads)

    if args.separation_budget:
        for basis in ("literal", "corrected"):
            sep = separation_demo(args.separation_resolution, args.separation_budget, basis=basis)
            print(
                f"separation ({basis}, {sep.budget} hats): residual {sep.residual!r} "
                f"at {sep.witness}, boundary gap {sep.boundary_gap!r}"
            )
    for line in transcript(mu, verdict):
        print(line)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive_float(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="relu-span",
        description="ReLU networks in the weighted space Y: approximation, norms, conversions and duality checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logs.")
    parser.add_argument("--threads", type=int, default=None,
                        help="Worker threads (overrides RELU_SPAN_THREADS; 0 = one per CPU).")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("approximate", help="Build a certified network approximation of a target.")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--expr", help='Target expression in x, e.g. "sqrt(1+x^2)".')
    source.add_argument("--target-file", dest="target_file", help="Network or PL JSON used as an opaque target.")
    p.add_argument("--eps", type=_positive_float, required=True, help="Y-norm tolerance.")
    p.add_argument("--alpha-plus", dest="alpha_plus", type=float, help="Limit of f(x)/(1+|x|) at +inf.")
    p.add_argument("--alpha-minus", dest="alpha_minus", type=float, help="Limit of f(x)/(1+|x|) at -inf.")
    p.add_argument("--out", help="Network JSON output.")
    p.add_argument("--report", help="Run report JSON (stdout when omitted).")
    p.add_argument("--samples", help="CSV of x,target,network,weighted_residual.")
    p.add_argument("--sample-resolution", dest="sample_resolution", type=int, default=1000,
                   help="Grid n for --samples (default: 1000).")
    p.add_argument("--max-knots", dest="max_knots", type=int, default=10**6)
    p.add_argument("--initial-radius", dest="initial_radius", type=_positive_float, default=1.0)
    p.add_argument("--oracle-resolution", dest="oracle_resolution", type=int, default=10**5)
    p.add_argument("--alpha-k-start", dest="alpha_k_start", type=int, default=10)
    p.add_argument("--alpha-k-stop", dest="alpha_k_stop", type=int, default=40)
    p.add_argument("--alpha-tol", dest="alpha_tol", type=_positive_float, default=1e-8)
    p.add_argument("--plot-dir", dest="plot_dir", help="Folder for the certificate PNG charts.")
    p.add_argument("--pdf", help="PDF certificate output.")
    p.set_defaults(handler=cmd_approximate)

    p = sub.add_parser("norm", help="Y-norm of a network, PL function or expression.")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--net", help="Network JSON.")
    source.add_argument("--pl", help="PL JSON.")
    source.add_argument("--expr", help="Expression in x (grid oracle only).")
    method = p.add_mutually_exclusive_group()
    method.add_argument("--exact", action="store_true", help="Closed form from knots (default for files).")
    method.add_argument("--grid", type=int, help="Grid oracle with 2N+1 points.")
    p.add_argument("--alpha-plus", dest="alpha_plus", type=float)
    p.add_argument("--alpha-minus", dest="alpha_minus", type=float)
    p.add_argument("--report", help="Run report JSON.")
    p.set_defaults(handler=cmd_norm)

    p = sub.add_parser("convert", help="Network <-> PL conversion with pointwise check.")
    p.add_argument("--in", dest="input", required=True, help="Network or PL JSON.")
    p.add_argument("--out", help="Converted JSON output (stdout when omitted).")
    p.add_argument("--check", action="store_true", help="Print the round-trip deviation.")
    p.set_defaults(handler=cmd_convert)

    p = sub.add_parser("verify-identity", help="Check the exact ReLU identities on a dense grid.")
    p.add_argument("--lo", type=float, default=-10.0)
    p.add_argument("--hi", type=float, default=10.0)
    p.add_argument("--points", type=int, default=10**5)
    p.add_argument("--inject-fault", dest="inject_fault", action="store_true",
                   help=f"Perturb one hat coefficient by {FAULT_SIZE:g}.")
    p.set_defaults(handler=cmd_verify_identity)

    p = sub.add_parser("dual-demo", help="Walk a measure through the annihilator argument.")
    p.add_argument("--measure", help='Measure JSON {"atoms": [{"loc": ..., "w": ...}]} (default: unit mass at +inf).')
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--halfwidth", type=_positive_float, default=1.0)
    p.add_argument("--separation-budget", dest="separation_budget", type=int, default=0,
                   help="Also run the least-squares separation probe with this many hats.")
    p.add_argument("--separation-resolution", dest="separation_resolution", type=int, default=2000)
    p.set_defaults(handler=cmd_dual_demo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.threads is not None:
            worker_count(args.threads)
        return args.handler(args)
    except (ReluSpanError, ValidationError, ValueError, OSError) as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1
