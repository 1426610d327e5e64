"""
Module: core_types

Exact value types shared by the whole project:

    ReLUUnit / ReLUNetwork
        x -> sum_i c_i * ReLU(a_i * x + b_i), the elements of X.
    PiecewiseLinear
        continuous piecewise-linear function given by knots, knot values and
        two tail slopes; the floating-point twin of ReLUNetwork.
    YTarget
        an arbitrary member of Y: an evaluator plus (optional) weighted limits
        alpha_plus / alpha_minus of f(x)/(1+|x|) at +inf / -inf.
    ExtendedPoint
        a point of the two-point compactification R u {-inf, +inf}.

Every type is an immutable pydantic model; invariants are checked at
construction and violations raise `pydantic.ValidationError`.
"""

import math
from typing import Any, Callable, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

ArrayLike = Union[float, np.ndarray]


def relu(x: ArrayLike) -> ArrayLike:
    """Rectified linear unit max(x, 0) for a float or a numpy array."""
    if isinstance(x, np.ndarray):
        return np.maximum(x, 0.0)
    return x if x > 0 else 0.0


class ReLUUnit(BaseModel):
    """One hidden unit c * ReLU(a * x + b) with a nonzero slope."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    a: float
    b: float
    c: float

    @model_validator(mode="after")
    def _check_slope(self) -> "ReLUUnit":
        if self.a == 0.0:
            raise ValueError("ReLU unit slope a must be nonzero")
        return self

    @property
    def kink(self) -> float:
        """Location -b/a where the unit switches on or off."""
        return -self.b / self.a

    def as_triple(self) -> Tuple[float, float, float]:
        return (self.a, self.b, self.c)


class ReLUNetwork(BaseModel):
    """Finite ordered list of units; the empty network is the zero function."""

    model_config = ConfigDict(frozen=True)

    units: Tuple[ReLUUnit, ...] = ()

    @classmethod
    def from_triples(cls, triples: Sequence[Sequence[float]]) -> "ReLUNetwork":
        return cls(units=tuple(ReLUUnit(a=a, b=b, c=c) for a, b, c in triples))

    def triples(self) -> list:
        return [u.as_triple() for u in self.units]

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return the (a, b, c) columns as float arrays."""
        if not self.units:
            empty = np.zeros(0)
            return empty, empty.copy(), empty.copy()
        abc = np.array(self.triples(), dtype=float)
        return abc[:, 0], abc[:, 1], abc[:, 2]

    def __len__(self) -> int:
        return len(self.units)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return eval_network(self, x)


class PiecewiseLinear(BaseModel):
    """
    Continuous piecewise-linear function.

    Segments interpolate consecutive knot values; outside the knot range the
    function extends with `m_left` / `m_right`. With no knots the function is
    the line x -> m_left * x + c0 and both tail slopes must agree. `c0` is
    ignored when knots are present.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    knots: Tuple[float, ...] = ()
    knot_values: Tuple[float, ...] = ()
    m_left: float = 0.0
    m_right: float = 0.0
    c0: float = 0.0

    @model_validator(mode="after")
    def _check_shape(self) -> "PiecewiseLinear":
        if len(self.knots) != len(self.knot_values):
            raise ValueError(
                f"{len(self.knots)} knots but {len(self.knot_values)} knot values"
            )
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if not self.knots and self.m_left != self.m_right:
            raise ValueError("a knot-free PL function is a line: m_left must equal m_right")
        return self

    @classmethod
    def line(cls, slope: float, intercept: float) -> "PiecewiseLinear":
        return cls(m_left=slope, m_right=slope, c0=intercept)

    def slopes(self) -> np.ndarray:
        """Slopes of every piece from left to right: m_left, inner segments, m_right."""
        if not self.knots:
            return np.array([self.m_left])
        k = np.asarray(self.knots)
        v = np.asarray(self.knot_values)
        inner = np.diff(v) / np.diff(k)
        return np.concatenate(([self.m_left], inner, [self.m_right]))

    def slope_jumps(self) -> np.ndarray:
        """Outgoing minus incoming slope at every knot."""
        return np.diff(self.slopes())

    def is_canonical(self) -> bool:
        return bool(np.all(self.slope_jumps() != 0.0))

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return eval_pl(self, x)


class YTarget(BaseModel):
    """
    A target function in Y.

    The evaluator must accept a float or a numpy array of finite inputs
    (set `vectorized=False` for scalar-only callables). `alpha_plus` and
    `alpha_minus` are the limits of f(x)/(1+|x|) at +inf and -inf when known.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    evaluator: Callable[..., Any]
    alpha_plus: Optional[float] = None
    alpha_minus: Optional[float] = None
    label: str = "target"
    vectorized: bool = True

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        if isinstance(x, np.ndarray):
            if self.vectorized:
                return np.asarray(self.evaluator(x), dtype=float) * np.ones_like(x)
            return np.array([float(self.evaluator(float(v))) for v in x.ravel()]).reshape(x.shape)
        return float(self.evaluator(float(x)))

    def with_alphas(self, alpha_plus: float, alpha_minus: float) -> "YTarget":
        return self.model_copy(update={"alpha_plus": alpha_plus, "alpha_minus": alpha_minus})


class ExtendedPoint(BaseModel):
    """Point of the compactified line: a finite coordinate, +inf or -inf."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["finite", "+inf", "-inf"]
    x: Optional[float] = None

    @model_validator(mode="after")
    def _check_coordinate(self) -> "ExtendedPoint":
        if (self.kind == "finite") != (self.x is not None):
            raise ValueError("finite points carry a coordinate, infinite points do not")
        return self

    @classmethod
    def finite(cls, x: float) -> "ExtendedPoint":
        return cls(kind="finite", x=x)

    @classmethod
    def plus_infinity(cls) -> "ExtendedPoint":
        return cls(kind="+inf")

    @classmethod
    def minus_infinity(cls) -> "ExtendedPoint":
        return cls(kind="-inf")

    @classmethod
    def from_coordinate(cls, x: float) -> "ExtendedPoint":
        if x == math.inf:
            return cls.plus_infinity()
        if x == -math.inf:
            return cls.minus_infinity()
        return cls.finite(float(x))

    @classmethod
    def from_json(cls, value: Union[float, int, str]) -> "ExtendedPoint":
        if value == "+inf":
            return cls.plus_infinity()
        if value == "-inf":
            return cls.minus_infinity()
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return cls.finite(float(value))
        raise ValueError(f"expected a number, '+inf' or '-inf', got {value!r}")

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def coordinate(self) -> float:
        """Coordinate on the extended line, +/-inf for the boundary points."""
        if self.kind == "+inf":
            return math.inf
        if self.kind == "-inf":
            return -math.inf
        return self.x

    def to_json(self) -> Union[float, str]:
        return self.x if self.is_finite else self.kind

    def __str__(self) -> str:
        return repr(self.x) if self.is_finite else self.kind


def eval_network(net: ReLUNetwork, x: ArrayLike) -> ArrayLike:
    """
    Evaluate sum_i c_i * ReLU(a_i x + b_i).

    Scalars are evaluated term by term with a compensated sum. Arrays use the
    active-set form: sort the kinks, keep prefix sums of c*a and c*b, and add
    the slope/intercept of the units that are on at each x. That is
    O((units + points) log units) instead of a units x points product.

    Args:
        net (ReLUNetwork): Network to evaluate.
        x (float | np.ndarray): Finite input(s).

    Returns:
        float | np.ndarray: Network output with the shape of `x`.
    """
    if not isinstance(x, np.ndarray):
        return math.fsum(u.c * relu(u.a * x + u.b) for u in net.units)

    x = np.asarray(x, dtype=float)
    if not net.units:
        return np.zeros_like(x)
    a, b, c = net.arrays()
    out = np.zeros_like(x)

    # a > 0: unit on for x > kink; prefix over ascending kinks
    pos = a > 0
    if np.any(pos):
        kinks = -b[pos] / a[pos]
        order = np.argsort(kinks, kind="stable")
        kinks = kinks[order]
        slope = np.concatenate(([0.0], np.cumsum((c[pos] * a[pos])[order])))
        icpt = np.concatenate(([0.0], np.cumsum((c[pos] * b[pos])[order])))
        idx = np.searchsorted(kinks, x, side="left")
        out += slope[idx] * x + icpt[idx]

    # a < 0: unit on for x < kink; suffix over ascending kinks
    neg = ~pos
    if np.any(neg):
        kinks = -b[neg] / a[neg]
        order = np.argsort(kinks, kind="stable")
        kinks = kinks[order]
        slope = np.concatenate((np.cumsum((c[neg] * a[neg])[order][::-1])[::-1], [0.0]))
        icpt = np.concatenate((np.cumsum((c[neg] * b[neg])[order][::-1])[::-1], [0.0]))
        idx = np.searchsorted(kinks, x, side="right")
        out += slope[idx] * x + icpt[idx]

    return out


def eval_pl(pl: PiecewiseLinear, x: ArrayLike) -> ArrayLike:
    """
    Evaluate a PL function: interpolation between bracketing knots, tail-slope
    extrapolation outside the knot range, m_left * x + c0 without knots.
    """
    scalar = not isinstance(x, np.ndarray)
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    if not pl.knots:
        out = pl.m_left * xs + pl.c0
    else:
        k = np.asarray(pl.knots)
        v = np.asarray(pl.knot_values)
        out = np.interp(xs, k, v)
        left = xs < k[0]
        right = xs > k[-1]
        out[left] = v[0] + pl.m_left * (xs[left] - k[0])
        out[right] = v[-1] + pl.m_right * (xs[right] - k[-1])

    if scalar:
        return float(out[0])
    return out.reshape(np.shape(x))
