"""
Module: dual_checker

Finite atomic signed measures on the compactified line and the weighted
pairing <mu, f> = sum_j w_j (A f)(p_j). Reproduces the annihilator argument
step by step:

    1. hats (compactly supported, exactly in X) see every finite atom;
    2. the ramps ReLU(x), ReLU(-x) see the boundary atoms at +inf / -inf.

Also hosts the unweighted "bounded-extension" pairing, kept next to the
weighted one for comparison, and the least-squares separation experiment
for the spanning set {step_f, step_g} u hats.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.algebra.pl_algebra import hat, network_to_pl, ramp_minus, ramp_plus, step_f, step_g
from src.config.settings import worker_count
from src.core.core_types import ExtendedPoint, ReLUNetwork, YTarget, eval_network
from src.core.errors import CoverageError, InputFileError, UnboundedExtensionError
from src.core.file_formats import load_document
from src.metrics.weighted_norm import CompactGrid, apply_A, weighted_values

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are cut in least squares
LSTSQ_RCOND = 1e-10


class Atom(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    location: ExtendedPoint
    weight: float


class DiscreteMeasure(BaseModel):
    """Finite signed atomic measure on R u {-inf, +inf}; locations are distinct."""

    model_config = ConfigDict(frozen=True)

    atoms: Tuple[Atom, ...] = ()

    @model_validator(mode="after")
    def _check_distinct(self) -> "DiscreteMeasure":
        coords = [a.location.coordinate for a in self.atoms]
        if len(set(coords)) != len(coords):
            raise ValueError("atom locations must be pairwise distinct")
        return self

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[Union[float, str, ExtendedPoint], float]]) -> "DiscreteMeasure":
        atoms = []
        for loc, w in pairs:
            point = loc if isinstance(loc, ExtendedPoint) else ExtendedPoint.from_json(loc)
            atoms.append(Atom(location=point, weight=w))
        return cls(atoms=tuple(atoms))

    @classmethod
    def dirac(cls, loc: Union[float, str], weight: float = 1.0) -> "DiscreteMeasure":
        return cls.from_pairs([(loc, weight)])

    @property
    def finite_atoms(self) -> List[Atom]:
        return [a for a in self.atoms if a.location.is_finite]

    def boundary_weight(self, kind: Literal["+inf", "-inf"]) -> float:
        return math.fsum(a.weight for a in self.atoms if a.location.kind == kind)

    def to_json(self) -> dict:
        return {"format": 1, "atoms": [{"loc": a.location.to_json(), "w": a.weight} for a in self.atoms]}


def measure_from_json(doc: dict, path: str = "<string>") -> DiscreteMeasure:
    atoms = doc.get("atoms")
    if not isinstance(atoms, list):
        raise InputFileError(path, "field 'atoms': expected a list of {\"loc\", \"w\"} objects")
    pairs = []
    for i, atom in enumerate(atoms):
        if not isinstance(atom, dict) or "loc" not in atom or "w" not in atom:
            raise InputFileError(path, f"field 'atoms.{i}': expected {{\"loc\": ..., \"w\": ...}}")
        try:
            pairs.append((ExtendedPoint.from_json(atom["loc"]), atom["w"]))
        except (ValueError, ValidationError) as exc:
            raise InputFileError(path, f"field 'atoms.{i}.loc': {exc}") from exc
    try:
        return DiscreteMeasure.from_pairs(pairs)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first.get("loc", ())) or "atoms"
        raise InputFileError(path, f"field '{loc}': {first.get('msg')}") from exc


def load_measure(path: str) -> DiscreteMeasure:
    return measure_from_json(load_document(path), str(path))


def pair(mu: DiscreteMeasure, f: Union[ReLUNetwork, YTarget]) -> float:
    """
    Weighted pairing sum_j w_j (A f)(p_j).

    Raises:
        MissingAsymptoticsError / NotInYError: boundary atom and no boundary
            data for `f`.
    """
    return math.fsum(a.weight * apply_A(f, a.location) for a in mu.atoms)


def bounded_extension_pair(mu: DiscreteMeasure, f: ReLUNetwork) -> float:
    """
    Unweighted pairing sum_j w_j f(p_j), with f extended to +/-inf by its limits.

    For step_f and the Dirac mass at +inf this is 1, the value the annihilator
    argument attributes to "integral of f d mu"; the weighted pairing gives 0.

    Raises:
        UnboundedExtensionError: `f` has a nonzero tail slope on a side where
            the measure has an atom.
    """
    pl = network_to_pl(f)
    total = []
    for a in mu.atoms:
        if a.location.is_finite:
            total.append(a.weight * eval_network(f, a.location.x))
            continue
        slope = pl.m_right if a.location.kind == "+inf" else pl.m_left
        if slope != 0.0:
            raise UnboundedExtensionError(
                f"function grows with slope {slope!r} towards {a.location.kind}; no bounded extension"
            )
        if not pl.knots:
            limit = pl.c0
        else:
            limit = pl.knot_values[-1] if a.location.kind == "+inf" else pl.knot_values[0]
        total.append(a.weight * limit)
    return math.fsum(total)


class AnnihilationVerdict(BaseModel):
    """Outcome of pairing a measure against a covering hat family and the ramps."""

    model_config = ConfigDict(frozen=True)

    annihilates: bool
    failed_step: Optional[Literal["hats", "boundary"]]
    tol: float
    halfwidth: float
    hat_pairings: Tuple[Tuple[float, float], ...]
    ramp_plus_pairing: float
    ramp_minus_pairing: float
    ramp_shift_plus: float
    ramp_shift_minus: float
    recovered_finite: Tuple[Tuple[float, float], ...]
    recovered_plus: float
    recovered_minus: float
    weighted_step_f: float
    weighted_step_g: float
    bounded_step_f: float
    bounded_step_g: float

    @property
    def max_hat_pairing(self) -> float:
        return max((abs(v) for _, v in self.hat_pairings), default=0.0)


def covering_centers(mu: DiscreteMeasure, halfwidth: float) -> np.ndarray:
    """Hat centers spaced halfwidth/2 apart over the finite atoms' span, plus one hat margin."""
    xs = [a.location.x for a in mu.finite_atoms]
    if not xs:
        return np.array([0.0])
    lo, hi = min(xs) - halfwidth, max(xs) + halfwidth
    count = int(math.ceil((hi - lo) / (0.5 * halfwidth))) + 1
    return np.linspace(lo, hi, count)


def annihilation_test(mu: DiscreteMeasure, centers: Sequence[float], halfwidth: float,
                      tol: float, workers: Optional[int] = None) -> AnnihilationVerdict:
    """
    Pair `mu` with hat(c, halfwidth) for every center and with both ramps.

    Finite atom weights are recovered from the nearest hat:
    w = <mu, hat_c> (1 + |x|) / hat_c(x), exact when the atom is alone in the
    hat's support. Boundary weights are the pairings with ReLU(x - M) and
    ReLU(m - x), where M >= 0 and m <= 0 bound the finite atoms; these ramps
    vanish on every finite atom, so the recovery is exact. The boundary step
    passes only when both plain and shifted ramp pairings are within tol.

    Args:
        mu (DiscreteMeasure): Measure under test.
        centers (Sequence[float]): Hat centers; every finite atom must lie
            within halfwidth/2 of one of them.
        halfwidth (float): Hat halfwidth (> 0).
        tol (float): Pairings with magnitude <= tol count as zero.
        workers (int, optional): Thread cap; defaults to RELU_SPAN_THREADS.

    Returns:
        AnnihilationVerdict

    Raises:
        CoverageError: some finite atom is not covered.
        ValueError: halfwidth <= 0.
    """
    if not halfwidth > 0:
        raise ValueError(f"hat halfwidth must be positive, got {halfwidth!r}")
    centers = np.asarray(sorted(float(c) for c in centers))
    finite = mu.finite_atoms
    for atom in finite:
        if centers.size == 0 or np.min(np.abs(centers - atom.location.x)) > 0.5 * halfwidth * (1 + 1e-12):
            raise CoverageError(
                f"atom at x={atom.location.x!r} is farther than halfwidth/2 from every hat center"
            )

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        hat_values = list(pool.map(lambda c: pair(mu, hat(c, halfwidth)), centers))
    hat_pairings = tuple((float(c), float(v)) for c, v in zip(centers, hat_values))
    plus_pairing = pair(mu, ramp_plus())
    minus_pairing = pair(mu, ramp_minus())

    recovered = []
    for atom in finite:
        x0 = atom.location.x
        j = int(np.argmin(np.abs(centers - x0)))
        height = max(0.0, 1.0 - abs(x0 - centers[j]) / halfwidth)
        recovered.append((x0, hat_values[j] * (1.0 + abs(x0)) / height))
    # ReLU(x - M) and ReLU(m - x) vanish on every finite atom, so they see the boundary weights alone
    shift_plus = max([0.0] + [a.location.x for a in finite])
    shift_minus = min([0.0] + [a.location.x for a in finite])
    rec_plus = pair(mu, ReLUNetwork.from_triples([(1.0, -shift_plus, 1.0)]))
    rec_minus = pair(mu, ReLUNetwork.from_triples([(-1.0, shift_minus, 1.0)]))

    hats_ok = all(abs(v) <= tol for v in hat_values)
    ramps_ok = all(abs(v) <= tol for v in (plus_pairing, minus_pairing, rec_plus, rec_minus))
    failed = None if hats_ok and ramps_ok else ("hats" if not hats_ok else "boundary")
    logger.info("annihilation test over %d hats: failed_step=%s", len(centers), failed)

    f, g = step_f(), step_g()
    return AnnihilationVerdict(
        annihilates=failed is None,
        failed_step=failed,
        tol=tol,
        halfwidth=halfwidth,
        hat_pairings=hat_pairings,
        ramp_plus_pairing=plus_pairing,
        ramp_minus_pairing=minus_pairing,
        ramp_shift_plus=shift_plus,
        ramp_shift_minus=shift_minus,
        recovered_finite=tuple(recovered),
        recovered_plus=rec_plus,
        recovered_minus=rec_minus,
        weighted_step_f=pair(mu, f),
        weighted_step_g=pair(mu, g),
        bounded_step_f=bounded_extension_pair(mu, f),
        bounded_step_g=bounded_extension_pair(mu, g),
    )


def transcript(mu: DiscreteMeasure, verdict: AnnihilationVerdict) -> List[str]:
    """Human-readable walk through the annihilator argument, in proof order."""
    finite = mu.finite_atoms
    lines = [
        f"measure: {len(mu.atoms)} atoms ({len(finite)} finite, "
        f"+inf weight {mu.boundary_weight('+inf')!r}, -inf weight {mu.boundary_weight('-inf')!r})",
        "verdict: " + (
            "mu annihilates X (within tol)" if verdict.annihilates
            else f"mu does not annihilate X (fails at the {verdict.failed_step} step)"
        ),
        f"step 1: pair with {len(verdict.hat_pairings)} hats of halfwidth {verdict.halfwidth!r} "
        f"(compactly supported, exact members of X)",
        f"  max |<mu, hat>| = {verdict.max_hat_pairing!r} (tol {verdict.tol!r})",
    ]
    for x, w in verdict.recovered_finite:
        lines.append(f"  recovered finite atom: x={x!r} weight {w!r}")
    lines.append(
        "  mu restricted to R vanishes" if all(abs(v) <= verdict.tol for _, v in verdict.hat_pairings)
        else "  mu restricted to R does not vanish"
    )
    lines += [
        "step 2: pair with the ramps ReLU(x), ReLU(-x) (A-boundary values 1 at +inf / -inf)",
        f"  <mu, ramp_plus> = {verdict.ramp_plus_pairing!r}, <mu, ramp_minus> = {verdict.ramp_minus_pairing!r}",
        f"  shifted past the finite atoms: <mu, ReLU(x - {verdict.ramp_shift_plus!r})> = {verdict.recovered_plus!r}, "
        f"<mu, ReLU({verdict.ramp_shift_minus!r} - x)> = {verdict.recovered_minus!r}",
        f"  weighted pairing:   step_f -> {verdict.weighted_step_f!r}, step_g -> {verdict.weighted_step_g!r}",
        f"  bounded-extension pairing (unweighted): step_f -> {verdict.bounded_step_f!r}, "
        f"step_g -> {verdict.bounded_step_g!r}",
        f"boundary mass: -inf → {verdict.recovered_minus!r} via ramp_minus",
        f"boundary mass: +inf → {verdict.recovered_plus!r} via ramp_plus",
    ]
    return lines


class SeparationReport(BaseModel):
    """Best grid least-squares fit of a target by a candidate family, in the Y-norm."""

    model_config = ConfigDict(frozen=True)

    basis: Literal["literal", "corrected"]
    budget: int
    grid_resolution: int
    residual: float
    witness: ExtendedPoint
    boundary_gap: float


def _hat_family(budget: int) -> List[ReLUNetwork]:
    """`budget` hats with centers uniform in the compact coordinate t."""
    if budget <= 0:
        return []
    t = -1.0 + 2.0 * np.arange(1, budget + 1) / (budget + 1)
    centers = t / (1.0 - np.abs(t))
    if budget == 1:
        return [hat(float(centers[0]), 1.0)]
    gaps = np.diff(centers)
    widths = np.maximum(np.concatenate(([gaps[0]], gaps)), np.concatenate((gaps, [gaps[-1]])))
    return [hat(float(c), float(w)) for c, w in zip(centers, widths)]


def separation_demo(grid_resolution: int, candidate_budget: int,
                    basis: Literal["literal", "corrected"] = "literal",
                    target: Optional[ReLUNetwork] = None) -> SeparationReport:
    """
    Least-squares approximation of `target` (default ReLU(x)) in the span of
    {step_f, step_g} u hats ("literal") or {ramp_plus, ramp_minus} u hats
    ("corrected"), using A-values on the compact grid as features.

    Every literal candidate has A-value 0 at +/-inf, so the Y-residual of
    ReLU(x) stays >= 1 for every budget; the corrected family contains the
    target and drives the residual to ~0.

    Args:
        grid_resolution (int): n of the CompactGrid.
        candidate_budget (int): Number of hats (0 allowed).
        basis (str): "literal" or "corrected".
        target (ReLUNetwork, optional): Function to approximate.

    Returns:
        SeparationReport: grid Y-norm of the residual and where it peaks.
    """
    if candidate_budget < 0:
        raise ValueError("candidate budget must be >= 0")
    target = target if target is not None else ramp_plus()
    grid = CompactGrid(n=grid_resolution)
    x = grid.x

    pair_fns = [step_f(), step_g()] if basis == "literal" else [ramp_plus(), ramp_minus()]
    candidates = pair_fns + _hat_family(candidate_budget)
    features = np.column_stack([weighted_values(c, x) for c in candidates])
    rhs = weighted_values(target, x)

    coef, *_ = np.linalg.lstsq(features, rhs, rcond=LSTSQ_RCOND)
    residual = np.abs(rhs - features @ coef)
    best = int(np.argmax(residual))
    gap = max(abs(residual[0]), abs(residual[-1]))
    logger.info("separation (%s, %d hats): residual %.6g", basis, candidate_budget, residual[best])
    return SeparationReport(
        basis=basis,
        budget=candidate_budget,
        grid_resolution=grid_resolution,
        residual=float(residual[best]),
        witness=ExtendedPoint.from_coordinate(float(x[best])),
        boundary_gap=float(gap),
    )
