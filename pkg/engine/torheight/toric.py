"""Combinatorial toric geometry: divisors, degrees, multiplicities and local heights.

Toric varieties only appear through their fans and support functions; every
quantity here is computed from that data.
"""
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .concave import (
    ConcaveOnPolytope,
    ConcavePA,
    SupportFunctionData,
    legendre_dual,
    support_function_on_normal_fan,
    sup_differential,
)
from .errors import GeometryError
from .exact import (
    LatticeVector,
    QVector,
    ValueGroup,
    integer_kernel,
    lattice_index,
    lcm_of_denominators,
    orthogonal_lattice,
    pairing,
    qvector,
    sub,
    zero,
)
from .monge_ampere import DiscreteMeasure, integrate_cellwise, ma_measure
from .polyhedra import Cone, Polyhedron, PolyComplex, Polytope, face_of_cone, faces, lattice_points

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToricDivisorReport:
    ray_coefficients: tuple[tuple[LatticeVector, Fraction], ...]
    base_point_free: bool
    ample: bool

    def coefficient(self, ray: Sequence[int]) -> Fraction:
        return dict(self.ray_coefficients)[tuple(ray)]


@dataclass(frozen=True)
class LatticeFunction:
    """A concave piecewise-affine function read on its complex of linearity domains.

    ``denominator`` is the smallest ``e`` for which ``e·function`` has
    integral slopes and constants in Γ.
    """

    function: ConcavePA
    group: ValueGroup
    denominator: int

    @classmethod
    def from_concave(cls, function: ConcavePA, group: ValueGroup = ValueGroup.divisible()) -> "LatticeFunction":
        return cls(function, group, function.gamma_denominator(group))

    @property
    def complex(self) -> PolyComplex:
        return self.function.induced_complex

    @property
    def defining_data(self) -> tuple[tuple[Polyhedron, QVector, Fraction], ...]:
        return tuple(
            (cell, piece.slope, piece.constant) for cell, piece in zip(self.function.cells, self.function.pieces)
        )


@dataclass(frozen=True)
class OrbitReport:
    cell: Polyhedron
    lattice_rank: int
    mult: int
    vertical_degree: Optional[Fraction] = None


def support_function_of_polytope(polytope: Polytope) -> SupportFunctionData:
    if not polytope.is_lattice:
        raise GeometryError("polytope is not a lattice polytope")
    return support_function_on_normal_fan(polytope)


def classify_support_function(psi: SupportFunctionData) -> dict[str, bool]:
    return psi.flags()


def weil_divisor_coefficients(psi: SupportFunctionData) -> ToricDivisorReport:
    coefficients = tuple(sorted((ray, -psi.evaluate(ray)) for ray in psi.fan.rays))
    return ToricDivisorReport(coefficients, psi.is_concave, psi.is_strictly_concave)


def facet_divisor(polytope: Polytope) -> dict[LatticeVector, Fraction]:
    """``v_F ↦ -<F, v_F>`` over the facets of a full-dimensional lattice polytope."""
    if not polytope.is_full_dimensional or not polytope.is_lattice:
        raise GeometryError("facet divisor needs a full-dimensional lattice polytope")
    result = {}
    for face in faces(polytope, polytope.dimension - 1):
        normal = tuple(int(x) for x in face.normal)
        result[normal] = -pairing(face.polytope.vertices[0], face.normal)
    return result


def _require_concave(psi: SupportFunctionData):
    if not psi.is_concave:
        raise GeometryError("support function is not concave")


def degree(psi: SupportFunctionData) -> Fraction:
    """``n! vol(Δ_Ψ)``."""
    _require_concave(psi)
    n = psi.rank
    value = math.factorial(n) * psi.polytope().volume()
    if value.denominator != 1:
        raise GeometryError("degree is not an integer; slopes must be integral")
    return value


def global_sections_count(psi: SupportFunctionData) -> int:
    _require_concave(psi)
    return len(lattice_points(psi.polytope()))


def orbit_multiplicity(complex_: PolyComplex, cell: Polyhedron, group: ValueGroup) -> OrbitReport:
    """``mult(Λ) = [M(Λ) : M̃(Λ)]`` with ``M(Λ) = M ∩ L_Λ^⊥``."""
    if cell not in complex_:
        raise GeometryError("Λ is not a cell of the complex")
    n = cell.ambient_rank
    base = cell.vertices[0]
    directions = [sub(v, base) for v in cell.vertices[1:]] + list(cell.rays) + list(cell.lineality)
    basis = orthogonal_lattice(directions, n)
    if group.is_divisible or not basis:
        return OrbitReport(cell, len(basis), 1)
    # ⟨m, ·⟩ is constant on Λ for m ∈ M(Λ); the condition is Σ x_i c_i ∈ Z
    c = [pairing(b, base) / group.base for b in basis]
    d = lcm_of_denominators(c)
    row = [int(x * d) for x in c] + [d]
    kernel = integer_kernel([row], len(row))
    generators = [k[:-1] for k in kernel]
    mult = lattice_index(generators)
    logger.debug("orbit multiplicity of %r is %s", cell, mult)
    return OrbitReport(cell, len(basis), int(mult))


def vertical_cycle_degree(phi: LatticeFunction, cell: Polyhedron, point: Sequence) -> Fraction:
    """``(n-k)! vol_{M(Λ)}(∂φ(v)) / mult(Λ)`` for ``v`` in the relative interior of a bounded cell.

    Unbounded cells give 0.
    """
    point = qvector(point)
    if phi.denominator != 1:
        raise GeometryError("φ is not a Γ-lattice function")
    if cell not in phi.complex:
        raise GeometryError("Λ is not a cell of the complex")
    if not cell.relative_interior_contains(point):
        raise GeometryError("v is not in the relative interior of Λ")
    if not cell.is_bounded:
        return Fraction(0)
    n, k = cell.ambient_rank, cell.dimension
    differential = sup_differential(phi.function, point)
    if differential.dimension != n - k:
        return Fraction(0)
    mult = orbit_multiplicity(phi.complex, cell, phi.group).mult
    return math.factorial(n - k) * differential.volume("relative") / mult


def orbit_report(phi: LatticeFunction, cell: Polyhedron) -> OrbitReport:
    """Multiplicity of Λ with the degree of its vertical cycle, read at a relative interior point."""
    report = orbit_multiplicity(phi.complex, cell, phi.group)
    return replace(report, vertical_degree=vertical_cycle_degree(phi, cell, cell.relative_interior_point()))


def special_fiber_degree(phi: LatticeFunction) -> Fraction:
    """``Σ_v mult(v) deg(v)`` over the vertices of the complex; equals the degree of ``rec(φ)``."""
    total = Fraction(0)
    for cell in phi.complex.cells_of_dimension(0):
        report = orbit_report(phi, cell)
        total += report.mult * report.vertical_degree
    return total


def _require_metric(psi: SupportFunctionData, metric: ConcavePA):
    _require_concave(psi)
    if metric.rank != psi.rank or metric.recession() != psi.as_concave():
        raise GeometryError("ψ is not a metric for Ψ")


def toric_local_height(psi: SupportFunctionData, metric: ConcavePA) -> Fraction:
    """``(n+1)! ∫_{Δ_Ψ} ψ^∨``; relative volume when Δ_Ψ is not full-dimensional."""
    _require_metric(psi, metric)
    n = psi.rank
    return math.factorial(n + 1) * integrate_cellwise(legendre_dual(metric))


def trop_pushforward_measure(metric: ConcavePA, n: Optional[int] = None) -> DiscreteMeasure:
    """``n! M(ψ)``."""
    if n is None:
        n = metric.rank
    if n != metric.rank:
        raise GeometryError(f"rank mismatch: {n} != {metric.rank}")
    return ma_measure(metric).scale(math.factorial(n))


def roof_restrict_to_face(
    metric: ConcavePA,
    psi: SupportFunctionData,
    cone: Cone,
    m_sigma: Optional[Sequence] = None,
) -> ConcaveOnPolytope:
    """``m ↦ ψ^∨(m + m_σ)`` on ``F_σ - m_σ``.

    ``m_σ`` defaults to 0 on the smallest cone of the fan and to the slope of
    a maximal cone containing σ otherwise.
    """
    _require_metric(psi, metric)
    if cone not in psi.fan:
        raise GeometryError("σ is not a cone of the fan")
    defining = psi.slope_of(cone)
    if m_sigma is None:
        m_sigma = zero(psi.rank) if not cone.rays else defining
    m_sigma = qvector(m_sigma)
    if any(pairing(sub(m_sigma, defining), r) != 0 for r in cone.generators):
        raise GeometryError("m_σ does not define Ψ on σ")
    face = face_of_cone(psi.polytope(), cone)
    restricted = legendre_dual(metric).restrict(face)
    return restricted.translate(tuple(-x for x in m_sigma))
