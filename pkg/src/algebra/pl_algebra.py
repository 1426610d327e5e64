"""
Module: pl_algebra

Lossless conversion between ReLU networks and canonical piecewise-linear
functions, the gadgets the density argument is built from (hat, ramps, the
bounded steps f and g, the constant), and the linear-space operations on
both representations.

Functions:
    canonicalize(pl) -> PiecewiseLinear
    network_to_pl(net) -> PiecewiseLinear
    pl_to_network(pl) -> ReLUNetwork
    hat / ramp_plus / ramp_minus / step_f / step_g / constant -> ReLUNetwork
    pl_add, pl_scale, net_add, net_scale
"""

import math
from typing import List, Tuple

import numpy as np

from src.core.core_types import PiecewiseLinear, ReLUNetwork, ReLUUnit, eval_network

# Kinks closer than this are one knot
KNOT_MERGE_TOL = 1e-12
# Relative slope-jump threshold below which a knot is dropped
JUMP_CANCEL_TOL = 1e-12


def _jump_threshold(m_left: float, m_right: float, jumps: np.ndarray) -> float:
    biggest = float(np.max(np.abs(jumps))) if jumps.size else 0.0
    return JUMP_CANCEL_TOL * max(1.0, abs(m_left), abs(m_right), biggest)


def _merge_close(knots: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Collapse runs of knots closer than KNOT_MERGE_TOL onto their first member."""
    if knots.size < 2:
        return knots, values
    keep = np.concatenate(([True], np.diff(knots) > KNOT_MERGE_TOL))
    return knots[keep], values[keep]


def canonicalize(pl: PiecewiseLinear) -> PiecewiseLinear:
    """
    Remove knots with (numerically) no slope change and merge near-duplicates.

    A knot is dropped when |jump| <= 1e-12 * max(1, |m_left|, |m_right|, max|jump|).
    Removing a knot never changes the function: the neighbours already lie on
    the line through it. When every knot goes, the result is the line that
    coincides with the left tail.
    """
    if not pl.knots:
        return pl
    knots, values = _merge_close(np.asarray(pl.knots), np.asarray(pl.knot_values))
    merged = PiecewiseLinear(
        knots=tuple(knots),
        knot_values=tuple(values),
        m_left=pl.m_left,
        m_right=pl.m_right,
    )
    jumps = merged.slope_jumps()
    keep = np.abs(jumps) > _jump_threshold(pl.m_left, pl.m_right, jumps)

    if not np.any(keep):
        # no kinks: the whole function is the left-tail line
        intercept = float(values[0] - pl.m_left * knots[0])
        return PiecewiseLinear.line(pl.m_left, intercept)

    return PiecewiseLinear(
        knots=tuple(float(k) for k in knots[keep]),
        knot_values=tuple(float(v) for v in values[keep]),
        m_left=pl.m_left,
        m_right=pl.m_right,
    )


def network_to_pl(net: ReLUNetwork) -> PiecewiseLinear:
    """
    Convert a network to the canonical PL function it evaluates to.

    Knots are the distinct kinks -b_i/a_i. A unit with a > 0 contributes slope
    c*a to the right of its kink, a unit with a < 0 contributes c*a to the left,
    so the jump at a kink is the sum of c*|a| over the units sitting there.
    Knot values come from evaluating the network at the knots.

    Args:
        net (ReLUNetwork): Network to convert.

    Returns:
        PiecewiseLinear: Canonical form; at most len(net) knots.
    """
    if not net.units:
        return PiecewiseLinear.line(0.0, 0.0)

    a, b, c = net.arrays()
    m_left = math.fsum(c[a < 0] * a[a < 0])
    m_right = math.fsum(c[a > 0] * a[a > 0])

    kinks = -b / a
    order = np.argsort(kinks, kind="stable")
    kinks = kinks[order]
    contrib = (c * np.abs(a))[order]

    # group kinks within the merge tolerance and sum their jumps exactly
    starts = np.concatenate(([True], np.diff(kinks) > KNOT_MERGE_TOL))
    knots = kinks[starts]
    groups = np.split(contrib, np.flatnonzero(starts)[1:])
    jumps = np.array([math.fsum(g) for g in groups])

    keep = np.abs(jumps) > _jump_threshold(m_left, m_right, jumps)
    if not np.any(keep):
        return PiecewiseLinear.line(m_left, float(eval_network(net, 0.0)))

    knots = knots[keep]
    values = eval_network(net, knots)
    return PiecewiseLinear(
        knots=tuple(float(k) for k in knots),
        knot_values=tuple(float(v) for v in values),
        m_left=m_left,
        m_right=m_right,
    )


def _affine_units(slope: float, intercept: float) -> List[ReLUUnit]:
    """
    slope * x via ReLU(x) - ReLU(-x), plus `intercept` times the constant gadget
    ReLU(x) - ReLU(-x) - ReLU(x-1) + ReLU(1-x) == 1.
    """
    units: List[ReLUUnit] = []
    if slope != 0.0:
        units += [ReLUUnit(a=1.0, b=0.0, c=slope), ReLUUnit(a=-1.0, b=0.0, c=-slope)]
    if intercept != 0.0:
        units += [
            ReLUUnit(a=1.0, b=0.0, c=intercept),
            ReLUUnit(a=-1.0, b=0.0, c=-intercept),
            ReLUUnit(a=1.0, b=-1.0, c=-intercept),
            ReLUUnit(a=-1.0, b=1.0, c=intercept),
        ]
    return units


def pl_to_network(pl: PiecewiseLinear) -> ReLUNetwork:
    """
    Express a PL function exactly as a ReLU network.

    The left-tail line m_left * x + c_left comes first (two units for the
    slope, four for the intercept), followed by one unit jump_j * ReLU(x - x_j)
    per knot in ascending order. Zero coefficients are not emitted.

    Args:
        pl (PiecewiseLinear): Function to convert (canonical form expected).

    Returns:
        ReLUNetwork: Network pointwise equal to `pl`.
    """
    if not pl.knots:
        return ReLUNetwork(units=tuple(_affine_units(pl.m_left, pl.c0)))

    c_left = pl.knot_values[0] - pl.m_left * pl.knots[0]
    units = _affine_units(pl.m_left, c_left)
    for knot, jump in zip(pl.knots, pl.slope_jumps()):
        if jump != 0.0:
            units.append(ReLUUnit(a=1.0, b=-knot, c=float(jump)))
    return ReLUNetwork(units=tuple(units))


def hat(center: float, halfwidth: float) -> ReLUNetwork:
    """
    Three-unit network equal to max(1 - |x - center| / halfwidth, 0).

    hat(1, 1) is ReLU(x) + ReLU(x - 2) - 2 ReLU(x - 1).

    Raises:
        ValueError: halfwidth <= 0.
    """
    if not halfwidth > 0:
        raise ValueError(f"hat halfwidth must be positive, got {halfwidth!r}")
    h = float(halfwidth)
    left, right = center - h, center + h
    return ReLUNetwork.from_triples([
        (1.0, -left, 1.0 / h),
        (1.0, -right, 1.0 / h),
        (1.0, -center, -2.0 / h),
    ])


def ramp_plus() -> ReLUNetwork:
    """ReLU(x); A-boundary values 1 at +inf, 0 at -inf."""
    return ReLUNetwork.from_triples([(1.0, 0.0, 1.0)])


def ramp_minus() -> ReLUNetwork:
    """ReLU(-x); A-boundary values 0 at +inf, 1 at -inf."""
    return ReLUNetwork.from_triples([(-1.0, 0.0, 1.0)])


def step_f() -> ReLUNetwork:
    """Bounded step ReLU(x) - ReLU(x - 1): 0 left of 0, 1 right of 1."""
    return ReLUNetwork.from_triples([(1.0, 0.0, 1.0), (1.0, -1.0, -1.0)])


def step_g() -> ReLUNetwork:
    """Mirror of step_f: ReLU(-x) - ReLU(-x - 1)."""
    return ReLUNetwork.from_triples([(-1.0, 0.0, 1.0), (-1.0, -1.0, -1.0)])


def constant(value: float) -> ReLUNetwork:
    return ReLUNetwork(units=tuple(_affine_units(0.0, value)))


def pl_add(p: PiecewiseLinear, q: PiecewiseLinear) -> PiecewiseLinear:
    """Pointwise sum on the merged knot set, canonicalized."""
    knots = np.union1d(np.asarray(p.knots, dtype=float), np.asarray(q.knots, dtype=float))
    if knots.size == 0:
        return PiecewiseLinear.line(p.m_left + q.m_left, p.c0 + q.c0)
    values = p(knots) + q(knots)
    knots, values = _merge_close(knots, values)
    return canonicalize(PiecewiseLinear(
        knots=tuple(float(k) for k in knots),
        knot_values=tuple(float(v) for v in values),
        m_left=p.m_left + q.m_left,
        m_right=p.m_right + q.m_right,
    ))


def pl_scale(p: PiecewiseLinear, s: float) -> PiecewiseLinear:
    if s == 0.0:
        return PiecewiseLinear.line(0.0, 0.0)
    return canonicalize(PiecewiseLinear(
        knots=p.knots,
        knot_values=tuple(s * v for v in p.knot_values),
        m_left=s * p.m_left,
        m_right=s * p.m_right,
        c0=s * p.c0,
    ))


def net_add(p: ReLUNetwork, q: ReLUNetwork) -> ReLUNetwork:
    """Sum of two networks: concatenation of their unit lists."""
    return ReLUNetwork(units=p.units + q.units)


def net_scale(p: ReLUNetwork, s: float) -> ReLUNetwork:
    return ReLUNetwork(units=tuple(ReLUUnit(a=u.a, b=u.b, c=s * u.c) for u in p.units))
