"""Global heights from per-place roof functions.

A place contributes the integral over Δ of the upper envelope of the lifted
exponents ``(m_j, λ_j)``; the height is ``(n+1)!`` times the weighted sum of
these integrals. Finite, point and circle places are exact; sampled places
are float-valued.
"""
import bisect
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from itertools import pairwise
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .concave import ConcaveOnPolytope, upper_envelope
from .config import settings
from .errors import GeometryError, InputError
from .exact import LatticeVector, QVector, lattice_index, qvector
from .monge_ampere import integrate_cellwise
from .polyhedra import Polytope, convex_hull, refined_lattice_points

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodicPL:
    """A piecewise-linear function on ``R / length·Z`` given by its breakpoints."""

    length: Fraction
    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if self.length <= 0:
            raise GeometryError("circle length must be positive")
        if not self.breakpoints:
            raise GeometryError("a periodic profile needs at least one breakpoint")
        knots = [u for u, _ in self.breakpoints]
        if knots[0] < 0 or knots[-1] >= self.length or any(a >= b for a, b in pairwise(knots)):
            raise GeometryError("breakpoints must increase strictly within [0, length)")

    @property
    def knots(self) -> list[Fraction]:
        return [u for u, _ in self.breakpoints]

    def __call__(self, u) -> Fraction:
        u = Fraction(u) % self.length
        knots = self.knots
        if len(knots) == 1:
            return self.breakpoints[0][1]
        i = bisect.bisect_right(knots, u) - 1
        if i < 0 or i == len(knots) - 1:
            # wraparound segment from the last knot to the first one shifted by a period
            (a, va), (b, vb) = self.breakpoints[-1], self.breakpoints[0]
            b += self.length
            if u < a:
                u += self.length
        else:
            (a, va), (b, vb) = self.breakpoints[i], self.breakpoints[i + 1]
        return va + (vb - va) * (u - a) / (b - a)

    def average(self) -> Fraction:
        """Mean value for the Haar probability measure."""
        points = list(self.breakpoints) + [(self.breakpoints[0][0] + self.length, self.breakpoints[0][1])]
        area = sum(((b - a) * (va + vb) / 2 for (a, va), (b, vb) in pairwise(points)), Fraction(0))
        return area / self.length

    def shift(self, c) -> "PeriodicPL":
        return PeriodicPL(self.length, tuple((u, v + Fraction(c)) for u, v in self.breakpoints))


@dataclass(frozen=True)
class FinitePlace:
    id: str
    weight: Fraction
    height: Fraction
    orders: tuple[int, ...]
    kind = "finite"

    def __post_init__(self):
        if self.weight < 0:
            raise GeometryError("place weights must be nonnegative")
        if self.height < 0:
            raise GeometryError("heights of finite places must be nonnegative")

    @property
    def lambdas(self) -> tuple[Fraction, ...]:
        return tuple(-self.height * o for o in self.orders)


@dataclass(frozen=True)
class PointPlace:
    id: str
    weight: Fraction
    lambdas: tuple[Fraction, ...]
    kind = "point"

    def __post_init__(self):
        if self.weight < 0:
            raise GeometryError("place weights must be nonnegative")


@dataclass(frozen=True)
class CirclePlace:
    id: str
    weight: Fraction
    length: Fraction
    profiles: tuple[PeriodicPL, ...]
    kind = "circle"

    def __post_init__(self):
        if self.weight < 0:
            raise GeometryError("place weights must be nonnegative")
        if self.length <= 0:
            raise GeometryError("circle length must be positive")
        if any(p.length != self.length for p in self.profiles):
            raise GeometryError("profile periods must equal the circle length")

    def lambdas_at(self, u) -> tuple[Fraction, ...]:
        return tuple(p(u) for p in self.profiles)

    @property
    def knots(self) -> list[Fraction]:
        return sorted({Fraction(0), self.length} | {u for p in self.profiles for u in p.knots})


@dataclass(frozen=True)
class SampledNode:
    subweight: float
    lambdas: tuple[float, ...]


@dataclass(frozen=True)
class SampledPlace:
    id: str
    weight: Fraction
    nodes: tuple[SampledNode, ...]
    kind = "sampled"

    def __post_init__(self):
        if self.weight < 0:
            raise GeometryError("place weights must be nonnegative")
        if self.nodes:
            if any(node.subweight < 0 for node in self.nodes):
                raise GeometryError("subweights must be nonnegative")
            if abs(math.fsum(node.subweight for node in self.nodes) - 1.0) > 1e-9:
                raise GeometryError("subweights must sum to 1")


Place = Union[FinitePlace, PointPlace, CirclePlace, SampledPlace]


def _lambda_counts(place: Place) -> set[int]:
    if isinstance(place, FinitePlace):
        return {len(place.orders)}
    if isinstance(place, PointPlace):
        return {len(place.lambdas)}
    if isinstance(place, CirclePlace):
        return {len(place.profiles)}
    return {len(node.lambdas) for node in place.nodes}


def _first_lambda_vanishes(place: Place) -> bool:
    if isinstance(place, FinitePlace):
        return place.orders[0] == 0
    if isinstance(place, PointPlace):
        return place.lambdas[0] == 0
    if isinstance(place, CirclePlace):
        return all(v == 0 for _, v in place.profiles[0].breakpoints)
    return all(node.lambdas[0] == 0 for node in place.nodes)


@dataclass(frozen=True)
class RoofInstance:
    """Exponents ``m_0 = 0, m_1, ..., m_r`` generating ``Z^n`` and per-place λ data.

    ``normalized`` instances also satisfy ``m_0 = 0`` and ``λ_0 ≡ 0``;
    translations and section changes produce instances without them.
    """

    dimension: int
    exponents: tuple[LatticeVector, ...]
    places: tuple[Place, ...]
    normalized: bool = True

    def __post_init__(self):
        n = self.dimension
        if n < 1:
            raise GeometryError("dimension must be positive")
        if not self.exponents or any(len(m) != n for m in self.exponents):
            raise GeometryError("rank mismatch between exponents and dimension")
        if self.normalized:
            if any(self.exponents[0]):
                raise GeometryError("the first exponent must be 0")
            if lattice_index(self.exponents) != 1:
                raise GeometryError("exponents do not generate the lattice")
        ids = [p.id for p in self.places]
        if len(set(ids)) != len(ids):
            raise GeometryError("place ids must be unique")
        for place in self.places:
            if not _lambda_counts(place) <= {len(self.exponents)}:
                raise GeometryError(f"place {place.id!r} needs one λ per exponent")
            if self.normalized and not _first_lambda_vanishes(place):
                raise GeometryError(f"place {place.id!r} must have λ_0 = 0")

    @cached_property
    def polytope(self) -> Polytope:
        return convex_hull(self.exponents)

    def place(self, place_id: str) -> Place:
        for place in self.places:
            if place.id == place_id:
                return place
        raise InputError(f"unknown place id {place_id!r}")

    def translate(self, m0: Sequence[int]) -> "RoofInstance":
        """Move every exponent by ``m0``; the result is not normalized."""
        exponents = tuple(tuple(a + int(b) for a, b in zip(m, m0)) for m in self.exponents)
        return RoofInstance(self.dimension, exponents, self.places, normalized=False)

    def with_section_change(self, shifts: dict[str, Fraction]) -> "RoofInstance":
        """Shift all λ_j of each place by ``shifts[id]``; finite places become point places."""
        places = []
        for place in self.places:
            c = Fraction(shifts.get(place.id, 0))
            if isinstance(place, (FinitePlace, PointPlace)):
                places.append(PointPlace(place.id, place.weight, tuple(x + c for x in place.lambdas)))
            elif isinstance(place, CirclePlace):
                places.append(replace(place, profiles=tuple(p.shift(c) for p in place.profiles)))
            else:
                nodes = tuple(
                    SampledNode(node.subweight, tuple(x + float(c) for x in node.lambdas)) for node in place.nodes
                )
                places.append(replace(place, nodes=nodes))
        return RoofInstance(self.dimension, self.exponents, tuple(places), normalized=False)


@dataclass(frozen=True)
class PlaceIntegral:
    value: Union[Fraction, float]
    exact: bool


@dataclass(frozen=True)
class RoofIntegral:
    roof: ConcaveOnPolytope
    integral: Fraction


def _roof(instance: RoofInstance, lambdas: Sequence) -> ConcaveOnPolytope:
    return upper_envelope(zip(instance.exponents, lambdas))


def _envelope_integral(instance: RoofInstance, lambdas: Sequence) -> Fraction:
    return integrate_cellwise(_roof(instance, lambdas))


def roof_from_lift(instance: RoofInstance, place: Place) -> RoofIntegral:
    """The roof ``ϑ_w`` of a finite or point place and its exact integral over Δ."""
    if not isinstance(place, (FinitePlace, PointPlace)):
        raise GeometryError("roof_from_lift needs a finite or point place")
    if len(place.lambdas) != len(instance.exponents):
        raise GeometryError("rank mismatch between λ data and exponents")
    roof = _roof(instance, place.lambdas)
    return RoofIntegral(roof, integrate_cellwise(roof))


def circle_place_integral(
    instance: RoofInstance,
    place: CirclePlace,
    tolerance: Optional[float] = None,
    max_depth: Optional[int] = None,
) -> PlaceIntegral:
    """``(1/length) ∫ I(u) du`` with ``I(u) = ∫_Δ envelope(λ(u))``.

    ``I`` is convex along each knot interval, so it is affine on a
    subinterval when the subdivision does not change there or when its
    midpoint value lies on the chord.
    """
    tolerance = settings.TOLERANCE if tolerance is None else tolerance
    max_depth = settings.CIRCLE_MAX_DEPTH if max_depth is None else max_depth
    if tolerance <= 0:
        raise GeometryError("tolerance must be positive")
    if place.length <= 0:
        raise GeometryError("circle length must be positive")

    def sample(u: Fraction):
        roof = _roof(instance, place.lambdas_at(u))
        return integrate_cellwise(roof), roof.subdivision()

    exact_part = Fraction(0)
    approximate_part = []
    deepest = 0

    def segment(a, b, left, right, depth):
        nonlocal exact_part, deepest
        deepest = max(deepest, depth)
        mid = (a + b) / 2
        middle = sample(mid)
        if (left[1] == middle[1] == right[1]) or 2 * middle[0] == left[0] + right[0]:
            exact_part += (b - a) * (left[0] + right[0]) / 2
            return
        if depth >= max_depth:
            approximate_part.append(_simpson(lambda u: sample(u)[0], a, b, tolerance))
            return
        segment(a, mid, left, middle, depth + 1)
        segment(mid, b, middle, right, depth + 1)

    knots = place.knots
    values = {u: sample(u) for u in knots}
    for a, b in pairwise(knots):
        segment(a, b, values[a], values[b], 0)
    logger.debug("circle place %s: bisection depth %d", place.id, deepest)
    if approximate_part:
        logger.warning("circle place %s fell back to quadrature on %d subintervals", place.id, len(approximate_part))
        total = float(exact_part) + math.fsum(approximate_part)
        return PlaceIntegral(total / float(place.length), False)
    return PlaceIntegral(exact_part / place.length, True)


def _simpson(function, a: Fraction, b: Fraction, tolerance: float) -> float:
    """Composite Simpson on rational nodes, doubling until successive values agree."""
    previous = None
    count = 8
    while True:
        nodes = [a + (b - a) * Fraction(i, count) for i in range(count + 1)]
        values = np.array([float(function(u)) for u in nodes])
        current = float(integrate.simpson(values, x=np.array([float(u) for u in nodes])))
        if previous is not None and abs(current - previous) <= tolerance:
            return current
        if count >= 2**12:
            logger.warning("simpson did not reach tolerance %.3g on [%s, %s]", tolerance, a, b)
            return current
        previous = current
        count *= 2


def sampled_place_integral(instance: RoofInstance, place: SampledPlace) -> float:
    if not place.nodes:
        raise GeometryError("empty nodes")
    denominator = settings.SAMPLED_SNAP_DENOMINATOR
    terms = []
    for node in place.nodes:
        lambdas = [Fraction(x).limit_denominator(denominator) for x in node.lambdas]
        terms.append(node.subweight * float(_envelope_integral(instance, lambdas)))
    return math.fsum(terms)


def place_integral(instance: RoofInstance, place: Place, tolerance: Optional[float] = None) -> PlaceIntegral:
    if isinstance(place, (FinitePlace, PointPlace)):
        return PlaceIntegral(roof_from_lift(instance, place).integral, True)
    if isinstance(place, CirclePlace):
        return circle_place_integral(instance, place, tolerance)
    return PlaceIntegral(sampled_place_integral(instance, place), False)


@dataclass(frozen=True)
class HeightReport:
    polytope: Polytope
    per_place: tuple[tuple[str, PlaceIntegral], ...]
    total: float
    exact_total: Optional[Fraction]
    factor: int

    @property
    def exact(self) -> bool:
        return self.exact_total is not None


def global_height(
    instance: RoofInstance, tolerance: Optional[float] = None, threads: Optional[int] = None
) -> HeightReport:
    """``(n+1)! Σ_w weight(w) ∫_Δ ϑ_w``; places are evaluated concurrently, summed in input order."""
    workers = threads or settings.THREADS or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda place: place_integral(instance, place, tolerance), instance.places))
    factor = math.factorial(instance.dimension + 1)
    exact = all(r.exact for r in results)
    exact_total = None
    if exact:
        exact_total = factor * sum(
            (place.weight * r.value for place, r in zip(instance.places, results)), Fraction(0)
        )
        total = float(exact_total)
    else:
        total = factor * math.fsum(float(place.weight) * float(r.value) for place, r in zip(instance.places, results))
    per_place = tuple((place.id, r) for place, r in zip(instance.places, results))
    return HeightReport(instance.polytope, per_place, total, exact_total, factor)


@dataclass(frozen=True)
class ProductFormulaResult:
    residual: Union[Fraction, float]
    compatible: bool


PlaceValue = Union[Fraction, int, float, PeriodicPL, Sequence[tuple[float, float]]]


def _place_value(value: PlaceValue) -> Union[Fraction, float]:
    if isinstance(value, PeriodicPL):
        return value.average()
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    return math.fsum(w * float(v) for w, v in value)


def product_formula_check(values: Sequence[tuple[PlaceValue, Fraction]], tolerance: float = 1e-9) -> ProductFormulaResult:
    """``Σ weight(w)·log|g|_w``; circle places give their profile, sampled places their ``(subweight, value)`` nodes."""
    terms = [(_place_value(value), weight) for value, weight in values]
    if all(isinstance(v, Fraction) for v, _ in terms):
        residual = sum((Fraction(w) * v for v, w in terms), Fraction(0))
    else:
        residual = math.fsum(float(w) * float(v) for v, w in terms)
    return ProductFormulaResult(residual, abs(residual) <= tolerance)


def averaged_roof(instance: RoofInstance, m: Sequence) -> Fraction:
    """``Σ_w weight(w) ϑ_w(m)`` over finite and point places."""
    total = Fraction(0)
    for place in instance.places:
        if not isinstance(place, (FinitePlace, PointPlace)):
            raise GeometryError("averaged roof needs finite and point places only")
        total += place.weight * _roof(instance, place.lambdas).evaluate(qvector(m))
    return total


def tabulate_roof(instance: RoofInstance, place_id: str, resolution: int) -> list[tuple[QVector, Fraction]]:
    """The exact roof of a place on the ``1/resolution`` lattice grid of Δ."""
    place = instance.place(place_id)
    roof = roof_from_lift(instance, place).roof
    return [(m, roof.evaluate(m)) for m in refined_lattice_points(instance.polytope, resolution)]


def elliptic_instance(
    dimension: int,
    exponents: Sequence[Sequence[int]],
    degree: Fraction,
    finite: Sequence[FinitePlace] = (),
    good: Sequence[PointPlace] = (),
    bad: Sequence[CirclePlace] = (),
    archimedean: Sequence[SampledPlace] = (),
) -> RoofInstance:
    """Assemble the four kinds of places of a height over an elliptic curve.

    Finite places get weight 1; the weight given on every other place is read
    as its ``μ(v)`` and multiplied by ``degree``.
    """
    degree = Fraction(degree)
    if degree <= 0:
        raise GeometryError("degree must be positive")
    places = [replace(p, weight=Fraction(1)) for p in finite]
    for group in (good, bad, archimedean):
        places.extend(replace(p, weight=degree * p.weight) for p in group)
    return RoofInstance(dimension, tuple(tuple(m) for m in exponents), tuple(places))
