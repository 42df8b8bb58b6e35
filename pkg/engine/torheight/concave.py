"""Piecewise-affine concave functions and their Legendre–Fenchel duals.

``ConcavePA`` is a minimum of affine forms on ``N_R``; ``ConcaveOnPolytope``
is a cellwise-affine concave function on a polytope in ``M_R``, usually the
upper envelope of a finite set of lifted points. The two are exchanged
exactly by :func:`legendre_dual` and :func:`dual_to_concave`.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .config import settings
from .errors import GeometryError
from .exact import (
    QVector,
    ValueGroup,
    add,
    lcm_of_denominators,
    pairing,
    qvector,
    solve,
    sub,
)
from .polyhedra import (
    Fan,
    Halfspace,
    Polyhedron,
    PolyComplex,
    Polytope,
    convex_hull,
    normal_fan,
    refined_lattice_points,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class AffineForm:
    """``u ↦ <slope, u> + constant``."""

    slope: QVector
    constant: Fraction

    def __call__(self, u: Sequence) -> Fraction:
        return pairing(self.slope, u) + self.constant

    @property
    def rank(self) -> int:
        return len(self.slope)


@dataclass(frozen=True)
class LiftPoint:
    point: QVector
    value: Fraction


@dataclass(frozen=True)
class EnvelopeCell:
    polytope: Polytope
    form: AffineForm
    # indices into the lift of the points lying on this cell of the graph
    lift_indices: frozenset[int]


class ConcaveOnPolytope:
    """A concave function on ``domain`` that is affine on each cell of a subdivision."""

    def __init__(self, domain: Polytope, cells: Sequence[EnvelopeCell], lift: Sequence[LiftPoint]):
        self.domain = domain
        self.cells = tuple(cells)
        self.lift = tuple(lift)
        self.active = tuple(self.evaluate(p.point) == p.value for p in self.lift)

    def __repr__(self):
        return f"ConcaveOnPolytope(vertices={self.vertices()})"

    @property
    def rank(self) -> int:
        return self.domain.ambient_rank

    def evaluate(self, m: Sequence) -> Fraction:
        m = qvector(m)
        if not self.domain.contains(m):
            raise GeometryError("point is outside the domain")
        return min(cell.form(m) for cell in self.cells)

    __call__ = evaluate

    def vertices(self) -> list[tuple[QVector, Fraction]]:
        """Vertices of the subdivision with their values, sorted by point."""
        points = sorted({v for cell in self.cells for v in cell.polytope.vertices})
        return [(p, self.evaluate(p)) for p in points]

    def subdivision(self) -> frozenset[frozenset[QVector]]:
        """The combinatorial type of the subdivision: one vertex set per cell."""
        return frozenset(frozenset(cell.polytope.vertices) for cell in self.cells)

    def restrict(self, face: Polytope) -> "ConcaveOnPolytope":
        """The restriction to a face of the domain, as the envelope of the lift points on it."""
        if not face.is_face_of(self.domain):
            raise GeometryError("restriction target is not a face of the domain")
        lifted = [(p.point, p.value) for p in self.lift if face.contains(p.point)]
        return upper_envelope(lifted)

    def translate(self, vector: Sequence) -> "ConcaveOnPolytope":
        """``m ↦ g(m - vector)`` on the translated domain."""
        return upper_envelope([(add(p.point, vector), p.value) for p in self.lift])

    def shift(self, c) -> "ConcaveOnPolytope":
        c = Fraction(c)
        return upper_envelope([(p.point, p.value + c) for p in self.lift])

    def __eq__(self, other):
        if not isinstance(other, ConcaveOnPolytope) or self.domain != other.domain:
            return False
        points = {p for p, _ in self.vertices()} | {p for p, _ in other.vertices()}
        return all(self.evaluate(p) == other.evaluate(p) for p in points)

    __hash__ = None


def upper_envelope(lifted: Iterable[tuple[Sequence, Fraction]]) -> ConcaveOnPolytope:
    """The concave function on ``conv{m_j}`` whose hypograph is the hull of the ``(m_j, λ_j)``."""
    lift = [LiftPoint(qvector(m), Fraction(value)) for m, value in lifted]
    if not lift:
        raise GeometryError("upper envelope of an empty point set")
    n = len(lift[0].point)
    if any(len(p.point) != n for p in lift):
        raise GeometryError("mixed ambient ranks")
    domain = convex_hull([p.point for p in lift])
    hull = convex_hull([p.point + (p.value,) for p in lift])
    if hull.dimension == domain.dimension:
        # coplanar lift: the graph of one affine function
        rows = [p.point + (Fraction(1),) for p in lift]
        solution = solve(rows, [p.value for p in lift], n + 1)
        form = AffineForm(solution[:n], solution[n])
        cell = EnvelopeCell(domain, form, frozenset(range(len(lift))))
        return ConcaveOnPolytope(domain, [cell], lift)
    cells = []
    for facet in hull.facets:
        normal, offset = facet.halfspace.normal, facet.halfspace.offset
        a, a_t = normal[:n], normal[n]
        if a_t >= 0:
            continue
        form = AffineForm(tuple(-x / a_t for x in a), offset / a_t)
        on_facet = frozenset(
            j for j, p in enumerate(lift) if pairing(a, p.point) + a_t * p.value == offset
        )
        polytope = convex_hull([lift[j].point for j in sorted(on_facet)])
        cells.append(EnvelopeCell(polytope, form, on_facet))
    cells.sort(key=lambda c: c.polytope.vertices)
    return ConcaveOnPolytope(domain, cells, lift)


class ConcavePA:
    """``u ↦ min_i <m_i, u> + l_i`` in canonical form.

    Only pieces attaining the minimum alone on a full-dimensional region are
    kept. The linearity domains and their complex are built on first use;
    use :func:`canonical_min_form` to build from arbitrary pieces.
    """

    def __init__(self, pieces: Sequence[AffineForm]):
        self.pieces: tuple[AffineForm, ...] = tuple(sorted(pieces))
        self.rank = self.pieces[0].rank

    @cached_property
    def cells(self) -> tuple[Polyhedron, ...]:
        """The linearity domain of each piece, in piece order."""
        return tuple(self._linearity_domain(i) for i in range(len(self.pieces)))

    @cached_property
    def induced_complex(self) -> PolyComplex:
        return PolyComplex(self.cells, self.rank)

    def _linearity_domain(self, i: int) -> Polyhedron:
        own = self.pieces[i]
        halfspaces = [
            Halfspace(sub(other.slope, own.slope), own.constant - other.constant)
            for j, other in enumerate(self.pieces)
            if j != i
        ]
        return Polyhedron.from_halfspaces(halfspaces, ambient_rank=self.rank)

    def __repr__(self):
        return f"ConcavePA({[(p.slope, p.constant) for p in self.pieces]})"

    def __eq__(self, other):
        return isinstance(other, ConcavePA) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def evaluate(self, u: Sequence) -> Fraction:
        u = qvector(u)
        if len(u) != self.rank:
            raise GeometryError(f"rank mismatch: {len(u)} != {self.rank}")
        return min(piece(u) for piece in self.pieces)

    __call__ = evaluate

    def active_pieces(self, u: Sequence) -> list[AffineForm]:
        values = [piece(u) for piece in self.pieces]
        low = min(values)
        return [piece for piece, value in zip(self.pieces, values) if value == low]

    @property
    def slopes(self) -> list[QVector]:
        return [p.slope for p in self.pieces]

    def stability_set(self) -> Polytope:
        return stability_set(self)

    def legendre_dual(self) -> ConcaveOnPolytope:
        return legendre_dual(self)

    def recession(self) -> "ConcavePA":
        """``rec(f)``: the pieces with their constants dropped."""
        return canonical_min_form(AffineForm(m, Fraction(0)) for m in self.slopes)

    def shift(self, c) -> "ConcavePA":
        return ConcavePA([AffineForm(p.slope, p.constant + Fraction(c)) for p in self.pieces])

    def twist(self, m0: Sequence) -> "ConcavePA":
        """``f + <m0, ·>``."""
        m0 = qvector(m0)
        return ConcavePA([AffineForm(add(p.slope, m0), p.constant) for p in self.pieces])

    def translate(self, u0: Sequence) -> "ConcavePA":
        """``u ↦ f(u - u0)``."""
        u0 = qvector(u0)
        return ConcavePA([AffineForm(p.slope, p.constant - pairing(p.slope, u0)) for p in self.pieces])

    def gamma_denominator(self, group: ValueGroup = ValueGroup.divisible()) -> int:
        """Smallest ``e`` such that ``e·f`` has integral slopes and constants in Γ."""
        e = lcm_of_denominators(x for p in self.pieces for x in p.slope)
        return math.lcm(e, *(group.denominator(e * p.constant) for p in self.pieces))


def canonical_min_form(pieces: Iterable[AffineForm]) -> ConcavePA:
    pieces = list(pieces)
    if not pieces:
        raise GeometryError("a concave function needs at least one piece")
    n = pieces[0].rank
    if any(p.rank != n for p in pieces):
        raise GeometryError("mixed ambient ranks")
    lowest = {}
    for p in pieces:
        if p.slope not in lowest or p.constant < lowest[p.slope]:
            lowest[p.slope] = p.constant
    if len(lowest) == 1:
        ((slope, constant),) = lowest.items()
        return ConcavePA([AffineForm(slope, constant)])
    # a piece survives iff its lift is a vertex of the regular subdivision
    envelope = upper_envelope((m, -l) for m, l in lowest.items())
    kept = [AffineForm(m, -value) for m, value in envelope.vertices()]
    logger.debug("canonical form keeps %d of %d pieces", len(kept), len(pieces))
    return ConcavePA(kept)


def is_gamma_rational(f: ConcavePA, group: ValueGroup = ValueGroup.divisible()) -> int:
    """The denominator ``e`` making ``e·f`` a Γ-lattice function."""
    return f.gamma_denominator(group)


def evaluate(f: ConcavePA, u: Sequence) -> Fraction:
    return f.evaluate(u)


def stability_set(f: ConcavePA) -> Polytope:
    return convex_hull(f.slopes)


def legendre_dual(f: ConcavePA) -> ConcaveOnPolytope:
    """``f^∨(m) = inf_u <m, u> - f(u)`` on the stability set."""
    return upper_envelope((p.slope, -p.constant) for p in f.pieces)


def dual_to_concave(g: ConcaveOnPolytope) -> ConcavePA:
    """``g^∨(u) = min_p <p, u> - g(p)`` over the vertices of the subdivision."""
    return canonical_min_form(AffineForm(p, -value) for p, value in g.vertices())


def sup_differential(f: ConcavePA, u: Sequence) -> Polytope:
    return convex_hull(piece.slope for piece in f.active_pieces(qvector(u)))


def pointwise_le(f: ConcavePA, g: ConcavePA) -> bool:
    """``f <= g`` everywhere: each piece ``(s, c)`` of g needs ``s ∈ Δ_f`` and ``f^∨(s) >= -c``."""
    domain = stability_set(f)
    dual = legendre_dual(f)
    return all(domain.contains(p.slope) and dual.evaluate(p.slope) >= -p.constant for p in g.pieces)


@dataclass(frozen=True)
class SupportFunctionData:
    """A virtual support function: one slope per maximal cone of a complete fan."""

    fan: Fan
    slopes: tuple[QVector, ...]

    def __post_init__(self):
        if len(self.slopes) != len(self.fan.maximal_cones):
            raise GeometryError("need one slope per maximal cone")
        cones = self.fan.maximal_cones
        for i, sigma in enumerate(cones):
            for j, tau in enumerate(cones):
                if i >= j:
                    continue
                difference = sub(self.slopes[i], self.slopes[j])
                shared = [r for r in sigma.generators if tau.contains(r)]
                if any(pairing(difference, r) != 0 for r in shared):
                    raise GeometryError("inconsistent face agreement")

    @classmethod
    def from_cones(cls, fan: Fan, slopes_by_cone: dict) -> "SupportFunctionData":
        try:
            slopes = tuple(qvector(slopes_by_cone[c]) for c in fan.maximal_cones)
        except KeyError:
            raise GeometryError("missing slope for a maximal cone") from None
        return cls(fan, slopes)

    @property
    def rank(self) -> int:
        return self.fan.ambient_rank

    def slope_of(self, cone) -> QVector:
        for sigma, m in zip(self.fan.maximal_cones, self.slopes):
            if cone in set(sigma.faces()):
                return m
        raise GeometryError("cone is not a cone of the fan")

    def evaluate(self, u: Sequence) -> Fraction:
        u = qvector(u)
        for sigma, m in zip(self.fan.maximal_cones, self.slopes):
            if sigma.contains(u):
                return pairing(m, u)
        raise GeometryError("point is not covered by the fan")

    __call__ = evaluate

    @property
    def is_concave(self) -> bool:
        for sigma, m_sigma in zip(self.fan.maximal_cones, self.slopes):
            for m_tau in self.slopes:
                difference = sub(m_sigma, m_tau)
                if any(pairing(difference, r) > 0 for r in sigma.generators):
                    return False
        return True

    @property
    def is_strictly_concave(self) -> bool:
        return self.is_concave and len(set(self.slopes)) == len(self.slopes)

    def flags(self) -> dict[str, bool]:
        return {
            "virtual": True,
            "concave": self.is_concave,
            "strictly_concave": self.is_strictly_concave,
        }

    def as_concave(self) -> ConcavePA:
        """``min_σ <m_σ, ·>``; equals the function itself exactly when it is concave."""
        return canonical_min_form(AffineForm(m, Fraction(0)) for m in self.slopes)

    def polytope(self) -> Polytope:
        """``Δ_Ψ``, the hull of the defining slopes."""
        return convex_hull(self.slopes)

    def twist(self, m0: Sequence) -> "SupportFunctionData":
        m0 = qvector(m0)
        return SupportFunctionData(self.fan, tuple(add(m, m0) for m in self.slopes))


def support_function_on_normal_fan(polytope: Polytope) -> SupportFunctionData:
    """``u ↦ min_{m ∈ Δ} <m, u>`` on the normal fan; cones carry lineality when Δ is not full-dimensional."""
    normal = normal_fan(polytope, allow_lower_dimensional=True)
    slopes = {}
    for face, cone in normal.pairs:
        if face.dimension == 0:
            slopes[cone] = face.vertices[0]
    return SupportFunctionData.from_cones(normal.fan, slopes)


def recession_function(f: ConcavePA) -> Union[SupportFunctionData, ConcavePA]:
    """``rec(f) = Ψ_{Δ_f}`` on the normal fan, or as a bare min of linear forms when Δ_f is thin."""
    domain = stability_set(f)
    if domain.is_full_dimensional:
        return support_function_on_normal_fan(domain)
    return f.recession()


@dataclass(frozen=True)
class Approximation:
    function: ConcavePA
    error_bound: float
    samples: tuple[tuple[QVector, Fraction], ...]


def approximate_concave(
    evaluator: Callable[[np.ndarray], float],
    polytope: Polytope,
    bound: float,
    resolution: int,
    snap_denominator: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> Approximation:
    """Γ-rational piecewise-affine approximation of a concave blackbox ψ with stability set Δ.

    ``bound`` bounds ``|ψ - Ψ_Δ|``. The dual is sampled on the ``1/resolution``
    refinement of the lattice points of Δ by minimizing ``<m, u> - ψ(u)`` over a
    box, snapped to rationals, enveloped and dualized back.
    """
    if not polytope.is_lattice:
        raise GeometryError("approximation needs a lattice polytope")
    snap_denominator = snap_denominator or settings.SNAP_DENOMINATOR
    tolerance = tolerance or settings.GOLDEN_TOLERANCE
    n = polytope.ambient_rank
    radius = (2 * float(bound) + 1) * resolution

    def objective(m, u):
        value = float(evaluator(np.atleast_1d(np.asarray(u, dtype=float))))
        if not math.isfinite(value):
            raise GeometryError("evaluator returned a non-finite value")
        return float(np.dot(m, np.atleast_1d(u))) - value

    samples = []
    for m in refined_lattice_points(polytope, resolution):
        mf = np.array([float(x) for x in m])
        best = objective(mf, np.zeros(n))
        if n == 1:
            result = optimize.minimize_scalar(
                lambda t: objective(mf, np.array([t])),
                bounds=(-radius, radius),
                method="bounded",
                options={"xatol": tolerance},
            )
        else:
            result = optimize.minimize(
                lambda u: objective(mf, u),
                np.zeros(n),
                method="Powell",
                bounds=[(-radius, radius)] * n,
                options={"xtol": tolerance, "ftol": tolerance},
            )
        best = min(best, float(result.fun))
        samples.append((m, Fraction(best).limit_denominator(snap_denominator)))
    envelope = upper_envelope(samples)
    function = dual_to_concave(envelope)
    steepest = max(
        (float(sum(abs(x) for x in cell.form.slope)) for cell in envelope.cells),
        default=0.0,
    )
    error_bound = steepest / resolution + 1.0 / snap_denominator
    logger.debug("approximation from %d samples, error bound %.3g", len(samples), error_bound)
    return Approximation(function, error_bound, tuple(samples))
