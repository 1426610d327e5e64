"""Random generators and comparison helpers shared by the test modules."""

import numpy as np

from src.algebra.pl_algebra import canonicalize
from src.core.core_types import PiecewiseLinear, ReLUNetwork


def random_network(rng, max_units=20, kink_range=5.0):
    """Network with 1..max_units units, kinks in [-kink_range, kink_range]."""
    n = int(rng.integers(1, max_units + 1))
    a = rng.choice([-1.0, 1.0], size=n) * rng.uniform(0.25, 2.0, size=n)
    kinks = rng.uniform(-kink_range, kink_range, size=n)
    c = rng.uniform(-1.0, 1.0, size=n)
    return ReLUNetwork.from_triples(list(zip(a, -a * kinks, c)))


def random_pl(rng, max_knots=20, knot_range=10.0):
    """Canonical PL function with 1..max_knots knots."""
    n = int(rng.integers(1, max_knots + 1))
    knots = np.sort(rng.uniform(-knot_range, knot_range, size=n))
    if np.any(np.diff(knots) < 1e-3):
        knots = np.linspace(-knot_range, knot_range, n)
    values = rng.uniform(-5.0, 5.0, size=n)
    m_left, m_right = rng.uniform(-3.0, 3.0, size=2)
    return canonicalize(PiecewiseLinear(
        knots=tuple(float(k) for k in knots),
        knot_values=tuple(float(v) for v in values),
        m_left=float(m_left),
        m_right=float(m_right),
    ))


def check_points(*fns):
    """Knots of the given PL functions, their midpoints and +/-1 offsets."""
    knots = np.unique(np.concatenate([np.asarray(f.knots, dtype=float) for f in fns] + [np.zeros(1)]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    return np.unique(np.concatenate((knots, mids, knots - 1.0, knots + 1.0)))
