"""
Module: approximator

Constructive density of X in Y: for a target f in Y and a tolerance eps,
build a finite ReLU network whose grid-measured Y-distance to f is <= eps.

Construction:
    1. alpha_+/- = weighted limits of f (declared or estimated).
    2. h0 = alpha_+ ReLU(x) + alpha_- ReLU(-x); r = f - h0 has A r(+/-inf) = 0.
    3. Radius R: double from cfg.initial_radius until |A r| <= eps/4 on every
       grid point with |x| >= R.
    4. Interpolate r on [-R, R] (33 uniform knots, constant tails) and bisect
       the worst segment until the interior weighted deviation is <= eps/2.
    5. network = h0 + pl_to_network(interpolant); measured_error is the grid
       oracle norm of f - network at cfg.oracle_resolution.
"""

import heapq
import logging
import time
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from src.algebra.pl_algebra import canonicalize, net_add, pl_to_network
from src.core.core_types import (
    ExtendedPoint,
    PiecewiseLinear,
    ReLUNetwork,
    YTarget,
    eval_network,
)
from src.core.errors import NotInYError
from src.metrics.weighted_norm import (
    AlphaSchedule,
    CompactGrid,
    boundary_value,
    y_norm_grid,
)

logger = logging.getLogger(__name__)

# Interior probes per segment, in addition to the oracle grid points inside it
SEGMENT_PROBES = 15


class ApproxConfig(BaseModel):
    """Quantitative knobs of the construction; all validated at creation."""

    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(gt=0)
    max_knots: int = Field(default=10**6, ge=2)
    initial_radius: float = Field(default=1.0, gt=0)
    oracle_resolution: PositiveInt = 10**5
    refinement: Literal["bisect_worst"] = "bisect_worst"
    initial_knots: int = Field(default=33, ge=2)
    alpha_schedule: AlphaSchedule = AlphaSchedule()


class ApproximationCertificate(BaseModel):
    """Witness of density at level `tolerance`: a network and its measured error."""

    model_config = ConfigDict(frozen=True)

    network: ReLUNetwork
    target_label: str
    tolerance: float
    measured_error: float
    witness: ExtendedPoint
    radius: float
    knot_count: int
    alpha_plus: float
    alpha_minus: float
    success: bool
    oracle_resolution: int
    tail_error: float
    iterations: int
    refinement_history: Tuple[float, ...] = ()

    def to_json(self, include_history: bool = True) -> dict:
        payload = {
            "target_label": self.target_label,
            "tolerance": self.tolerance,
            "measured_error": self.measured_error,
            "witness": self.witness.to_json(),
            "success": self.success,
            "radius": self.radius,
            "knot_count": self.knot_count,
            "unit_count": len(self.network),
            "alpha_plus": self.alpha_plus,
            "alpha_minus": self.alpha_minus,
            "oracle_resolution": self.oracle_resolution,
            "tail_error": self.tail_error,
            "iterations": self.iterations,
            "network": {"units": [list(t) for t in self.network.triples()]},
        }
        if include_history:
            payload["refinement_history"] = list(self.refinement_history)
        return payload


class LocalApproximation(BaseModel):
    """Sup-norm guarantee on [-radius, radius] derived from a Y certificate."""

    model_config = ConfigDict(frozen=True)

    certificate: ApproximationCertificate
    radius: float
    tolerance: float
    guaranteed_bound: float
    measured_sup: float
    success: bool


def asymptotic_part(alpha_plus: float, alpha_minus: float) -> ReLUNetwork:
    """alpha_+ ReLU(x) + alpha_- ReLU(-x), omitting zero terms."""
    triples = []
    if alpha_plus != 0.0:
        triples.append((1.0, 0.0, alpha_plus))
    if alpha_minus != 0.0:
        triples.append((-1.0, 0.0, alpha_minus))
    return ReLUNetwork.from_triples(triples)


def difference(f: YTarget, net: ReLUNetwork, alpha_plus: float, alpha_minus: float) -> YTarget:
    """The target f - net with its weighted limits declared."""
    return YTarget(
        evaluator=lambda x: f.evaluate(x) - eval_network(net, x),
        alpha_plus=alpha_plus - boundary_value(net, "+"),
        alpha_minus=alpha_minus - boundary_value(net, "-"),
        label=f"{f.label} - network",
    )


def interp_pl(f: Callable, knots: Sequence[float], left_value: Optional[float] = None,
              right_value: Optional[float] = None) -> PiecewiseLinear:
    """
    Interpolate `f` at the knots with constant (zero-slope) tails.

    Args:
        f (Callable): Vectorised evaluator (or YTarget).
        knots (Sequence[float]): At least two strictly increasing knots.
        left_value (float, optional): Value at the first knot, and therefore
            the level of the left tail. Defaults to f(knots[0]).
        right_value (float, optional): Same for the last knot and right tail.

    Returns:
        PiecewiseLinear: Canonical interpolant.

    Raises:
        ValueError: fewer than two knots, duplicates or unsorted knots.
    """
    k = np.asarray(knots, dtype=float)
    if k.size < 2:
        raise ValueError("interpolation needs at least two knots")
    if np.any(np.diff(k) <= 0):
        raise ValueError("interpolation knots must be strictly increasing (duplicates rejected)")
    evaluator = f.evaluate if isinstance(f, YTarget) else f
    values = np.asarray(evaluator(k), dtype=float) * np.ones_like(k)
    if left_value is not None:
        values[0] = left_value
    if right_value is not None:
        values[-1] = right_value
    return canonicalize(PiecewiseLinear(
        knots=tuple(float(v) for v in k),
        knot_values=tuple(float(v) for v in values),
        m_left=0.0,
        m_right=0.0,
    ))


def _resolve_alphas(f: YTarget, schedule: AlphaSchedule) -> Tuple[float, float]:
    alpha_plus = boundary_value(f, "+", schedule)
    alpha_minus = boundary_value(f, "-", schedule)
    return alpha_plus, alpha_minus


def select_radius(x: np.ndarray, weighted_residual: np.ndarray, budget: float,
                  initial_radius: float) -> float:
    """Double the radius until every grid point with |x| >= R has |A r| <= budget."""
    radius = initial_radius
    abs_x = np.abs(x)
    reach = float(abs_x.max()) if abs_x.size else 0.0
    while True:
        outside = abs_x >= radius
        worst = float(weighted_residual[outside].max()) if np.any(outside) else 0.0
        logger.debug("radius probe R=%g: tail weighted residual %.3g", radius, worst)
        if worst <= budget or radius > reach:
            return radius
        radius *= 2.0


class _SegmentScanner:
    """
    Weighted deviation |r - chord| / (1 + |x|) of a segment, measured on the
    oracle grid points strictly inside it and on SEGMENT_PROBES interior probes.
    """

    def __init__(self, residual: Callable, grid_x: np.ndarray, grid_r: np.ndarray):
        self.residual = residual
        self.grid_x = grid_x
        self.grid_r = grid_r
        self.fractions = np.arange(1, SEGMENT_PROBES + 1) / (SEGMENT_PROBES + 1)

    def deviation(self, left: float, right: float, v_left: float, v_right: float) -> float:
        lo = np.searchsorted(self.grid_x, left, side="right")
        hi = np.searchsorted(self.grid_x, right, side="left")
        probes = left + (right - left) * self.fractions
        xs = np.concatenate((self.grid_x[lo:hi], probes))
        rs = np.concatenate((self.grid_r[lo:hi], self.residual(probes)))
        chord = v_left + (v_right - v_left) * (xs - left) / (right - left)
        dev = np.abs(rs - chord) / (1.0 + np.abs(xs))
        if not np.all(np.isfinite(dev)):
            raise NotInYError("+" if right > 0 else "-", f"non-finite residual in [{left}, {right}]")
        return float(dev.max())


def refine_bisect_worst(scanner: _SegmentScanner, knots: np.ndarray, values: np.ndarray,
                        budget: float, max_knots: int) -> Tuple[List[float], List[float]]:
    """
    Bisect the worst segment until its deviation is <= budget or the knot
    budget is spent. Equal deviations refine the leftmost segment first.

    A bisection can raise the worst deviation (the new chords need not stay
    closer to the residual), so the knot set with the smallest worst deviation
    seen so far is the one returned.

    Returns:
        (knots, history): sorted knots of the best interpolant and the running
        best worst-deviation after the initial interpolation and after every
        bisection (non-increasing).
    """
    heap: List[Tuple[float, float, float, float, float]] = []
    for left, right, vl, vr in zip(knots[:-1], knots[1:], values[:-1], values[1:]):
        dev = scanner.deviation(left, right, vl, vr)
        heapq.heappush(heap, (-dev, float(left), float(right), float(vl), float(vr)))

    initial = [float(k) for k in knots]
    added: List[float] = []
    best_dev, best_added = -heap[0][0], 0
    history = [best_dev]
    while -heap[0][0] > budget and len(initial) + len(added) < max_knots:
        _, left, right, vl, vr = heapq.heappop(heap)
        mid = 0.5 * (left + right)
        vm = float(scanner.residual(np.array([mid]))[0])
        for a, b, va, vb in ((left, mid, vl, vm), (mid, right, vm, vr)):
            heapq.heappush(heap, (-scanner.deviation(a, b, va, vb), a, b, va, vb))
        added.append(mid)
        if -heap[0][0] < best_dev:
            best_dev, best_added = -heap[0][0], len(added)
        else:
            logger.debug("bisection at %g raised the worst deviation to %.3g", mid, -heap[0][0])
        history.append(best_dev)

    return sorted(initial + added[:best_added]), history


def approximate(f: YTarget, cfg: ApproxConfig) -> ApproximationCertificate:
    """
    Build a certified network approximation of `f` in the Y-norm.

    Args:
        f (YTarget): Target in Y (alphas declared or estimable).
        cfg (ApproxConfig): Tolerance, knot budget, radius seed, oracle resolution.

    Returns:
        ApproximationCertificate: `success` is False when the knot budget ran out
            before the measured error reached the tolerance; the network is then
            the best effort.

    Raises:
        NotInYError: weighted limits could not be estimated (target not in Y).
    """
    start = time.perf_counter()
    eps = cfg.tolerance
    alpha_plus, alpha_minus = _resolve_alphas(f, cfg.alpha_schedule)
    h0 = asymptotic_part(alpha_plus, alpha_minus)
    logger.info("%s: alpha+=%r alpha-=%r", f.label, alpha_plus, alpha_minus)

    def residual(x: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(f.evaluate(x), dtype=float) - eval_network(h0, x)

    grid = CompactGrid(n=cfg.oracle_resolution)
    xs = grid.finite_x
    rs = residual(xs)
    weighted = np.abs(rs) / (1.0 + np.abs(xs))
    if not np.all(np.isfinite(weighted)):
        bad = float(xs[np.argmax(~np.isfinite(weighted))])
        raise NotInYError("+" if bad > 0 else "-", f"'{f.label}' not finite at x={bad!r}")

    radius = select_radius(xs, weighted, eps / 4.0, cfg.initial_radius)
    logger.info("%s: radius %g", f.label, radius)

    n0 = min(cfg.initial_knots, cfg.max_knots)
    knots0 = np.linspace(-radius, radius, n0)
    values0 = residual(knots0)
    scanner = _SegmentScanner(residual, xs, rs)
    knots, history = refine_bisect_worst(scanner, knots0, values0, eps / 2.0, cfg.max_knots)

    r_left, r_right = float(values0[0]), float(values0[-1])
    tail_mask = np.abs(xs) > radius
    tail_levels = np.where(xs > 0, r_right, r_left)
    tail_dev = np.abs(rs - tail_levels) / (1.0 + np.abs(xs))
    tail_error = float(tail_dev[tail_mask].max()) if np.any(tail_mask) else 0.0
    # tail_error is fixed, so the running best stays non-increasing
    history = [max(h, tail_error) for h in history]

    interior = interp_pl(residual, knots, left_value=r_left, right_value=r_right)
    network = net_add(h0, pl_to_network(interior))

    report = y_norm_grid(difference(f, network, alpha_plus, alpha_minus), grid, cfg.alpha_schedule)
    success = report.value <= eps
    logger.info(
        "%s: %d knots, measured %.3g (tol %.3g) in %.2fs",
        f.label, len(knots), report.value, eps, time.perf_counter() - start,
    )
    if not success:
        logger.warning("%s: tolerance not reached within %d knots", f.label, cfg.max_knots)

    return ApproximationCertificate(
        network=network,
        target_label=f.label,
        tolerance=eps,
        measured_error=report.value,
        witness=report.witness,
        radius=radius,
        knot_count=len(knots),
        alpha_plus=alpha_plus,
        alpha_minus=alpha_minus,
        success=success,
        oracle_resolution=cfg.oracle_resolution,
        tail_error=tail_error,
        iterations=len(history) - 1,
        refinement_history=tuple(history),
    )


def remeasure(f: YTarget, certificate: ApproximationCertificate, resolution: int) -> float:
    """Grid-oracle residual of a certificate's network at another resolution."""
    diff = difference(f, certificate.network, certificate.alpha_plus, certificate.alpha_minus)
    return y_norm_grid(diff, CompactGrid(n=resolution)).value


def approximate_on_interval(f: YTarget, radius: float, tolerance: float,
                            cfg: Optional[ApproxConfig] = None) -> LocalApproximation:
    """
    Sup-norm approximation on [-radius, radius] through the Y-norm.

    Since sup_{|x|<=R} |g| <= (1 + R) ||g||_Y, a Y-certificate at level
    tolerance / (1 + R) bounds the local error by `tolerance`.

    Raises:
        ValueError: radius or tolerance not positive.
    """
    if not radius > 0 or not tolerance > 0:
        raise ValueError("radius and tolerance must be positive")
    base = cfg or ApproxConfig(tolerance=tolerance)
    local_cfg = base.model_copy(update={"tolerance": tolerance / (1.0 + radius)})
    certificate = approximate(f, local_cfg)

    inside = CompactGrid(n=local_cfg.oracle_resolution).finite_x
    inside = np.union1d(inside[np.abs(inside) <= radius], np.linspace(-radius, radius, 10_001))
    measured_sup = float(np.max(np.abs(f.evaluate(inside) - eval_network(certificate.network, inside))))
    bound = (1.0 + radius) * certificate.measured_error
    return LocalApproximation(
        certificate=certificate,
        radius=radius,
        tolerance=tolerance,
        guaranteed_bound=bound,
        measured_sup=measured_sup,
        success=certificate.success and bound <= tolerance * (1.0 + 1e-12),
    )
