import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .concave import ConcaveOnPolytope, ConcavePA, legendre_dual, stability_set, sup_differential
from .errors import GeometryError
from .exact import QVector, pairing, qvector
from .polyhedra import Polytope, faces, simplex_volume, volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finite sum of point masses; zero masses are dropped and atoms kept sorted."""

    atoms: tuple[tuple[QVector, Fraction], ...]

    def __post_init__(self):
        merged = {}
        for location, mass in self.atoms:
            location, mass = qvector(location), Fraction(mass)
            if mass < 0:
                raise GeometryError("masses must be nonnegative")
            if location in merged:
                raise GeometryError("atom locations must be distinct")
            merged[location] = mass
        object.__setattr__(self, "atoms", tuple(sorted((l, m) for l, m in merged.items() if m != 0)))

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[Sequence, Fraction]]) -> "DiscreteMeasure":
        return cls(tuple(atoms))

    def total_mass(self) -> Fraction:
        return sum((mass for _, mass in self.atoms), Fraction(0))

    def scale(self, factor) -> "DiscreteMeasure":
        factor = Fraction(factor)
        if factor < 0:
            raise GeometryError("masses must be nonnegative")
        return DiscreteMeasure(tuple((l, m * factor) for l, m in self.atoms))

    def integrate(self, f: Callable[[QVector], Fraction]) -> Fraction:
        return sum((f(location) * mass for location, mass in self.atoms), Fraction(0))

    def mass_at(self, location: Sequence) -> Fraction:
        return dict(self.atoms).get(qvector(location), Fraction(0))


def ma_measure(f: ConcavePA) -> DiscreteMeasure:
    """Monge–Ampère measure: an atom ``vol(∂f(v))`` at each vertex ``v`` of the induced complex."""
    atoms = []
    for v in f.induced_complex.vertices:
        mass = volume(sup_differential(f, v))
        if mass:
            atoms.append((v, mass))
    return DiscreteMeasure(tuple(atoms))


def integrate_cellwise(g: ConcaveOnPolytope) -> Fraction:
    """Exact ``∫_Δ g``; relative volume of ``M ∩ L_Δ`` when Δ is not full-dimensional."""
    mode = "ambient" if g.domain.is_full_dimensional else "relative"
    domain = g.domain
    total = Fraction(0)
    for cell in g.cells:
        for simplex in cell.polytope.triangulation():
            if mode == "ambient":
                size = simplex_volume(simplex)
            else:
                size = _relative_simplex_volume(domain, simplex)
            mean = sum((cell.form(p) for p in simplex), Fraction(0)) / len(simplex)
            total += size * mean
    return total


def _relative_simplex_volume(domain: Polytope, simplex: Sequence[QVector]) -> Fraction:
    # cells share the affine hull of the domain, so measure in the domain's lattice frame
    if len(simplex) == 1:
        return Fraction(1)
    return simplex_volume([domain.coordinates(p) for p in simplex])


@dataclass(frozen=True)
class IdentityCheck:
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def check_boundary_identity(f: ConcavePA) -> IdentityCheck:
    """Boundary integral identity relating ``∫ f dM(f)`` to integrals of ``f^∨`` over Δ and its facets.

    ``-∫ f dM(f) = (n+1) ∫_Δ f^∨ + Σ_F <F, v_F> ∫_F f^∨ dvol_{M(F)}``.
    """
    domain = stability_set(f)
    if not domain.is_full_dimensional:
        raise GeometryError("stability set is not full-dimensional")
    if not domain.is_lattice:
        raise GeometryError("stability set is not a lattice polytope")
    n = f.rank
    measure = ma_measure(f)
    lhs = -measure.integrate(f.evaluate)
    dual = legendre_dual(f)
    rhs = (n + 1) * integrate_cellwise(dual)
    for face in faces(domain, n - 1):
        values = {pairing(v, face.normal) for v in face.polytope.vertices}
        if len(values) != 1:
            raise GeometryError("facet pairing with its normal is not constant")
        (height,) = values
        rhs += height * integrate_cellwise(dual.restrict(face.polytope))
    logger.debug("boundary identity: lhs=%s rhs=%s", lhs, rhs)
    return IdentityCheck(lhs, rhs)
