"""
Module: weighted_norm

The weight operator A f = f / (1 + |.|), extended to the compactified line,
and the norm ||f||_Y = sup_x |f(x)| / (1 + |x|) computed two ways:

    y_norm_exact  closed form for PL functions / networks (knots, 0, tails)
    y_norm_grid   brute-force oracle over a CompactGrid, for anything

plus the estimator of the weighted limits at +/-inf and the bounded-domain
check sup_{|x|<=R} |f| <= (1 + R) ||f||_Y.
"""

import logging
import math
from functools import lru_cache
from typing import Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from src.algebra.pl_algebra import network_to_pl
from src.core.core_types import (
    ExtendedPoint,
    PiecewiseLinear,
    ReLUNetwork,
    YTarget,
    eval_network,
)
from src.core.errors import MissingAsymptoticsError, NotInYError

logger = logging.getLogger(__name__)

Function = Union[YTarget, PiecewiseLinear, ReLUNetwork]
Side = Literal["+", "-"]


class AlphaSchedule(BaseModel):
    """Probe schedule for estimate_alpha: x = +/-2**k for k in [k_start, k_stop]."""

    model_config = ConfigDict(frozen=True)

    k_start: int = 10
    k_stop: int = 40
    tol: float = Field(default=1e-8, gt=0)

    @model_validator(mode="after")
    def _check_range(self) -> "AlphaSchedule":
        if self.k_stop - self.k_start < 3:
            raise ValueError("alpha schedule needs at least four probe points")
        if self.k_stop > 1000:
            raise ValueError("alpha schedule exponent too large for double precision")
        return self


@lru_cache(maxsize=8)
def _compact_nodes(n: int) -> Tuple[np.ndarray, np.ndarray]:
    t = np.arange(-n, n + 1, dtype=float) / n
    x = np.empty_like(t)
    inner = np.abs(t) < 1.0
    x[inner] = t[inner] / (1.0 - np.abs(t[inner]))
    x[0], x[-1] = -math.inf, math.inf
    t.setflags(write=False)
    x.setflags(write=False)
    return t, x


class CompactGrid(BaseModel):
    """
    The 2n+1 points t_k = k/n of [-1, 1], mapped to x_k = t_k / (1 - |t_k|);
    t = -1 and t = 1 stand for -inf and +inf. The n-grid is a subset of the
    2n-grid (same floats), so along n, 2n, 4n, ... the grid norm never decreases;
    grids that are not nested carry no such ordering.
    """

    model_config = ConfigDict(frozen=True)

    n: PositiveInt

    @property
    def t(self) -> np.ndarray:
        return _compact_nodes(self.n)[0]

    @property
    def x(self) -> np.ndarray:
        """Coordinates, with -inf and +inf at both ends."""
        return _compact_nodes(self.n)[1]

    @property
    def finite_x(self) -> np.ndarray:
        return self.x[1:-1]


class NormReport(BaseModel):
    """Value of the (approximate) sup, the point attaining it and how it was found."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0)
    witness: ExtendedPoint
    method: Literal["exact_pl", "grid_oracle"]

    def to_json(self) -> dict:
        return {"value": self.value, "witness": self.witness.to_json(), "method": self.method}


def to_t(x: np.ndarray) -> np.ndarray:
    """Inverse compactification x -> x / (1 + |x|), mapping +/-inf to +/-1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        t = x / (1.0 + np.abs(x))
    return np.where(np.isinf(x), np.sign(x), t)


def boundary_value(f: Function, side: Side, schedule: AlphaSchedule = AlphaSchedule(),
                   estimate: bool = True) -> float:
    """
    Limit of A f at +inf (side "+") or -inf (side "-").

    PL functions give m_right and -m_left, networks the sums of c*|a| over the
    units that stay on in that direction, targets their declared alpha (or an
    estimate when `estimate` is set).

    Raises:
        MissingAsymptoticsError: target without alpha and `estimate=False`.
        NotInYError: estimation did not converge.
    """
    if isinstance(f, PiecewiseLinear):
        return f.m_right if side == "+" else -f.m_left
    if isinstance(f, ReLUNetwork):
        a, _, c = f.arrays()
        if side == "+":
            return math.fsum(c[a > 0] * a[a > 0])
        return math.fsum(-c[a < 0] * a[a < 0])
    declared = f.alpha_plus if side == "+" else f.alpha_minus
    if declared is not None:
        return declared
    if not estimate:
        raise MissingAsymptoticsError(
            f"target '{f.label}' has no asymptotic value at {side}inf"
        )
    return estimate_alpha(f, side, schedule)


def apply_A(f: Function, p: ExtendedPoint, schedule: AlphaSchedule = AlphaSchedule(),
            estimate: bool = True) -> float:
    """
    Evaluate A f = f / (1 + |.|) at a point of the compactified line.

    Args:
        f (YTarget | PiecewiseLinear | ReLUNetwork): Function in Y.
        p (ExtendedPoint): Finite point or +/-inf.
        schedule (AlphaSchedule): Used only when a target's alpha must be estimated.
        estimate (bool): Allow estimation of missing target alphas.

    Returns:
        float: f(x)/(1+|x|), or the boundary value at +/-inf.
    """
    if p.kind == "+inf":
        return boundary_value(f, "+", schedule, estimate)
    if p.kind == "-inf":
        return boundary_value(f, "-", schedule, estimate)
    return float(evaluate(f, p.x)) / (1.0 + abs(p.x))


def evaluate(f: Function, x):
    if isinstance(f, YTarget):
        return f.evaluate(x)
    if isinstance(f, ReLUNetwork):
        return eval_network(f, x)
    return f(x)


def weighted_values(f: Function, x: np.ndarray, schedule: AlphaSchedule = AlphaSchedule()) -> np.ndarray:
    """A f on an array of extended coordinates (entries may be +/-inf)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    finite = np.isfinite(x)
    if np.any(finite):
        xf = x[finite]
        with np.errstate(over="ignore", invalid="ignore"):
            out[finite] = np.asarray(evaluate(f, xf), dtype=float) / (1.0 + np.abs(xf))
    if np.any(x == math.inf):
        out[x == math.inf] = boundary_value(f, "+", schedule)
    if np.any(x == -math.inf):
        out[x == -math.inf] = boundary_value(f, "-", schedule)
    return out


def y_norm_exact(f: Union[PiecewiseLinear, ReLUNetwork]) -> NormReport:
    """
    Exact sup of |f(x)|/(1+|x|) for a PL function.

    On every piece where both f and the weight are affine (pieces split at 0),
    (m x + c)/(1 +/- x) is monotone, so the sup is the largest of: the weighted
    values at the knots and at 0, and the tail limits |m_left|, |m_right|.
    Ties resolve to the smallest witness coordinate; a tail limit reports a
    witness at +/-inf.

    Args:
        f (PiecewiseLinear | ReLUNetwork): Networks are converted first.

    Returns:
        NormReport: method "exact_pl".
    """
    pl = network_to_pl(f) if isinstance(f, ReLUNetwork) else f
    inner = np.union1d(np.asarray(pl.knots, dtype=float), [0.0])
    weighted = np.abs(pl(inner)) / (1.0 + np.abs(inner))

    coords = np.concatenate(([-math.inf], inner, [math.inf]))
    values = np.concatenate(([abs(pl.m_left)], weighted, [abs(pl.m_right)]))
    best = int(np.argmax(values))
    return NormReport(
        value=float(values[best]),
        witness=ExtendedPoint.from_coordinate(float(coords[best])),
        method="exact_pl",
    )


def y_norm_grid(f: Function, grid: CompactGrid, schedule: AlphaSchedule = AlphaSchedule()) -> NormReport:
    """
    Oracle Y-norm: max over the compact grid of |A f|.

    The two boundary points are evaluated through the weighted limits, so a
    sup reached only at infinity is still captured exactly.

    Raises:
        MissingAsymptoticsError / NotInYError: boundary data unavailable.
    """
    x = grid.x
    values = np.abs(weighted_values(f, x, schedule))
    if not np.all(np.isfinite(values)):
        bad = float(x[np.argmax(~np.isfinite(values))])
        raise NotInYError("+" if bad > 0 else "-", f"non-finite weighted value at x={bad!r}")
    best = int(np.argmax(values))
    return NormReport(
        value=float(values[best]),
        witness=ExtendedPoint.from_coordinate(float(x[best])),
        method="grid_oracle",
    )


def estimate_alpha(f: YTarget, side: Side, schedule: AlphaSchedule = AlphaSchedule()) -> float:
    """
    Estimate lim f(x)/(1+|x|) as x -> +inf (side "+") or -inf (side "-").

    A f is sampled at x = +/-2**k for k = k_start..k_stop. The samples have
    converged when each of the final three successive differences is at most
    `schedule.tol` in magnitude; the estimate is then the Richardson value
    2 v(2x) - v(x) of the last two samples, which cancels the 1/|x| term of
    f(x)/(1+|x|). Estimates within `tol` of zero are returned as 0.0.

    Args:
        f (YTarget): Target with a total evaluator.
        side (str): "+" or "-".
        schedule (AlphaSchedule): Probe exponents and convergence tolerance.

    Returns:
        float: Estimated weighted limit.

    Raises:
        NotInYError: non-finite samples or differences not settling.
    """
    sign = 1.0 if side == "+" else -1.0
    x = sign * np.exp2(np.arange(schedule.k_start, schedule.k_stop + 1, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(f.evaluate(x), dtype=float) / (1.0 + np.abs(x))

    if not np.all(np.isfinite(values)):
        raise NotInYError(side, f"'{f.label}' overflows or is undefined for large |x|")

    tail = np.abs(np.diff(values))[-3:]
    logger.debug("alpha%s probes for %s: last=%r diffs=%s", side, f.label, values[-1], tail)
    if np.any(tail > schedule.tol):
        raise NotInYError(
            side,
            f"'{f.label}': f(x)/(1+|x|) does not settle "
            f"(last differences {', '.join(f'{d:.3g}' for d in tail)})",
        )
    alpha = 2.0 * float(values[-1]) - float(values[-2])
    return 0.0 if abs(alpha) <= schedule.tol else alpha


def linf_bound_check(net: ReLUNetwork, R: float) -> Tuple[float, float]:
    """
    Both sides of sup_{|x|<=R} |net(x)| <= (1 + R) ||net||_Y.

    The left side is exact: the max of |net| over the knots inside [-R, R]
    and the two endpoints.

    Raises:
        ValueError: R <= 0.
    """
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R!r}")
    pl = network_to_pl(net)
    knots = np.asarray(pl.knots, dtype=float)
    points = np.concatenate(([-R, R], knots[np.abs(knots) <= R]))
    lhs = float(np.max(np.abs(eval_network(net, points))))
    rhs = (1.0 + R) * y_norm_exact(pl).value
    return lhs, rhs
