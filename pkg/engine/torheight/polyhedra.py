"""Rational polyhedra, cones, fans and polyhedral complexes.

Every object keeps both descriptions: generators (vertices, rays, lineality)
and facet inequalities. Conversions run through cddlib's double description
in exact rational arithmetic; faces are read off the facet incidences.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from typing import Iterable, Optional, Sequence, Union

import cdd

from .errors import GeometryError
from .exact import (
    LatticeVector,
    QVector,
    ValueGroup,
    determinant,
    is_integral,
    lcm_of_denominators,
    nullspace,
    pairing,
    primitive_direction,
    project_out,
    qvector,
    rref,
    saturated_basis,
    solve,
    sub,
)

logger = logging.getLogger(__name__)

NUMBER_TYPE = "fraction"


@dataclass(frozen=True)
class Halfspace:
    """``{u : <normal, u> >= offset}``; as an equation, ``<normal, u> = offset``."""

    normal: QVector
    offset: Fraction

    def __post_init__(self):
        if all(x == 0 for x in self.normal):
            raise GeometryError("halfspace normal must be nonzero")

    def contains(self, point: Sequence) -> bool:
        return pairing(self.normal, point) >= self.offset

    def is_tight(self, point: Sequence) -> bool:
        return pairing(self.normal, point) == self.offset


@dataclass(frozen=True)
class Facet:
    halfspace: Halfspace
    vertices: frozenset[int]
    rays: frozenset[int]


@dataclass(frozen=True)
class AffineHull:
    base: QVector
    basis: tuple[LatticeVector, ...]
    equations: tuple[Halfspace, ...]


def _matrix(rows, linear_rows, rep_type) -> "cdd.Matrix":
    matrix = cdd.Matrix([list(r) for r in rows], number_type=NUMBER_TYPE)
    if linear_rows:
        matrix.extend([list(r) for r in linear_rows], linear=True)
    matrix.rep_type = rep_type
    return matrix


def _rows(matrix) -> list[tuple[bool, tuple[Fraction, ...]]]:
    return [(i in matrix.lin_set, tuple(Fraction(x) for x in matrix[i])) for i in range(matrix.row_size)]


def _primitive_halfspace(normal: Sequence, constant, oriented: bool = True) -> Halfspace:
    """``<normal, x> + constant >= 0`` (or ``= 0``) rescaled to a primitive integral normal."""
    d = lcm_of_denominators(normal)
    ints = [int(Fraction(x) * d) for x in normal]
    g = math.gcd(*ints)
    if not oriented and next(x for x in ints if x != 0) < 0:
        g = -g
    return Halfspace(tuple(Fraction(x // g) for x in ints), -Fraction(constant) * d / g)


def _generators(inequalities, equations, n):
    """``(points, rays, lines)`` of ``{x : b + <a, x> >= 0}`` for rows ``(b, *a)``."""
    trivial = (Fraction(1),) + (Fraction(0),) * n
    matrix = _matrix([trivial, *inequalities], equations, cdd.RepType.INEQUALITY)
    points, rays, lines = [], [], []
    for linear, (t, *x) in _rows(cdd.Polyhedron(matrix).get_generators()):
        if linear:
            lines.append(tuple(x))
        elif t == 0:
            rays.append(tuple(x))
        else:
            points.append(tuple(c / t for c in x))
    return points, rays, lines


def _inequalities(points, rays, lines, n):
    """Irredundant facet halfspaces and equations of ``conv(points) + cone(rays) + span(lines)``."""
    one, nil = Fraction(1), Fraction(0)
    matrix = _matrix(
        [(one, *p) for p in points] + [(nil, *r) for r in rays],
        [(nil, *l) for l in lines],
        cdd.RepType.GENERATOR,
    )
    inequalities, equations = [], []
    for linear, (b, *a) in _rows(cdd.Polyhedron(matrix).get_inequalities()):
        if not any(a):
            # 1 >= 0: the face at infinity
            continue
        if linear:
            equations.append(_primitive_halfspace(a, b, oriented=False))
        else:
            inequalities.append(_primitive_halfspace(a, b))
    return sorted(set(inequalities), key=_halfspace_key), sorted(set(equations), key=_halfspace_key)


def _halfspace_key(h: Halfspace):
    return h.normal, h.offset


def _row(h: Halfspace) -> tuple[Fraction, ...]:
    return (-h.offset, *h.normal)


def _face_lattice(size: int, facet_sets: Sequence[frozenset[int]], base_dimension: int, keep=None):
    """Nonempty faces as generator index sets mapped to their dimension.

    Faces are the intersections of facet incidence sets; the face lattice is
    graded, so a face sits one dimension above its largest proper subface.
    """
    family = {frozenset(range(size))}
    frontier = list(facet_sets)
    while frontier:
        current = frontier.pop()
        if current in family or (keep is not None and not keep(current)):
            continue
        family.add(current)
        frontier.extend(current & f for f in facet_sets)
    dimensions = {}
    for members in sorted(family, key=len):
        below = [d for other, d in dimensions.items() if other < members]
        dimensions[members] = max(below) + 1 if below else base_dimension
    return dimensions


def _canonical_lineality(basis):
    if not basis:
        return ()
    reduced, _ = rref(basis, len(basis[0]))
    return tuple(reduced)


class Polyhedron:
    """``conv(vertices) + cone(rays) + span(lineality)``, kept in both descriptions.

    Build through :meth:`from_generators` or :meth:`from_halfspaces`; bounded
    results come back as :class:`Polytope`.
    """

    def __init__(self, ambient_rank, vertices, rays, lineality, facets, equations, dimension):
        self.ambient_rank = ambient_rank
        self.vertices: tuple[QVector, ...] = vertices
        self.rays: tuple[LatticeVector, ...] = rays
        self.lineality: tuple[LatticeVector, ...] = lineality
        self.facets: tuple[Facet, ...] = facets
        self.equations: tuple[Halfspace, ...] = equations
        self.dimension: int = dimension
        self._faces = None

    # construction

    @classmethod
    def from_generators(
        cls,
        vertices: Iterable[Sequence],
        rays: Iterable[Sequence] = (),
        lineality: Iterable[Sequence] = (),
        ambient_rank: Optional[int] = None,
    ) -> "Polyhedron":
        vertices = [qvector(v) for v in vertices]
        rays = [qvector(r) for r in rays]
        lineality = [qvector(v) for v in lineality]
        if not vertices:
            raise GeometryError("a polyhedron needs at least one point")
        n = ambient_rank if ambient_rank is not None else len(vertices[0])
        if any(len(x) != n for x in vertices + rays + lineality):
            raise GeometryError("mixed ambient ranks")
        rays = [r for r in rays if any(r)]
        lineality = [l for l in lineality if any(l)]
        inequalities, equations = _inequalities(vertices, rays, lineality, n)
        points, rays, lines = _generators([_row(h) for h in inequalities], [_row(e) for e in equations], n)
        return cls._assemble(n, points, rays, lines, inequalities, equations)

    @classmethod
    def from_halfspaces(
        cls,
        halfspaces: Iterable[Halfspace],
        equations: Iterable[Halfspace] = (),
        ambient_rank: Optional[int] = None,
    ) -> "Polyhedron":
        halfspaces, equations = list(halfspaces), list(equations)
        if ambient_rank is None:
            if not halfspaces and not equations:
                raise GeometryError("cannot infer the ambient rank of an empty description")
            ambient_rank = len((halfspaces or equations)[0].normal)
        n = ambient_rank
        points, rays, lines = _generators([_row(h) for h in halfspaces], [_row(e) for e in equations], n)
        if not points:
            raise GeometryError("empty polyhedron")
        inequalities, equations = _inequalities(points, rays, lines, n)
        return cls._assemble(n, points, rays, lines, inequalities, equations)

    @classmethod
    def _assemble(cls, n, points, rays, lines, inequalities, equations):
        lin = tuple(saturated_basis(lines, n))
        verts = sorted({project_out(p, lin) for p in points})
        ray_set = sorted({primitive_direction(project_out(r, lin)) for r in rays})
        facets = tuple(
            Facet(
                h,
                frozenset(i for i, v in enumerate(verts) if h.is_tight(v)),
                frozenset(i for i, r in enumerate(ray_set) if pairing(h.normal, r) == 0),
            )
            for h in inequalities
        )
        result_cls = Polytope if not ray_set and not lin else Polyhedron
        return result_cls(n, tuple(verts), tuple(ray_set), lin, facets, tuple(equations), n - len(equations))

    # queries

    @property
    def key(self):
        return (self.ambient_rank, self.vertices, self.rays, _canonical_lineality(self.lineality))

    def __eq__(self, other):
        return isinstance(other, Polyhedron) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{type(self).__name__}(vertices={list(self.vertices)}, rays={list(self.rays)}, lineality={list(self.lineality)})"

    @property
    def halfspaces(self) -> tuple[Halfspace, ...]:
        return tuple(f.halfspace for f in self.facets)

    @property
    def is_bounded(self) -> bool:
        return not self.rays and not self.lineality

    @property
    def is_strongly_convex(self) -> bool:
        return not self.lineality

    @property
    def is_full_dimensional(self) -> bool:
        return self.dimension == self.ambient_rank

    def contains(self, point: Sequence) -> bool:
        return all(h.contains(point) for h in self.halfspaces) and all(
            e.is_tight(point) for e in self.equations
        )

    def relative_interior_contains(self, point: Sequence) -> bool:
        return self.contains(point) and not any(h.is_tight(point) for h in self.halfspaces)

    def relative_interior_point(self) -> QVector:
        count = len(self.vertices)
        point = [sum((v[i] for v in self.vertices), Fraction(0)) / count for i in range(self.ambient_rank)]
        for r in self.rays:
            for i, x in enumerate(r):
                point[i] += x
        return tuple(point)

    def gamma_multiplier(self, group: ValueGroup) -> int:
        """Smallest ``e`` with every primitive defining inequality scaled by ``e`` having offset in Γ.

        Every rational polyhedron is Γ-rational for a nonzero Γ in ℚ; the
        multiplier is the integer that witnesses it.
        """
        offsets = [h.offset for h in self.halfspaces] + [e.offset for e in self.equations]
        return math.lcm(1, *(group.denominator(b) for b in offsets))

    def recession_cone(self) -> "Cone":
        return Cone.from_halfspaces(
            [h.normal for h in self.halfspaces],
            [e.normal for e in self.equations],
            ambient_rank=self.ambient_rank,
        )

    def _incidence(self, facet: Facet) -> frozenset[int]:
        nv = len(self.vertices)
        return facet.vertices | frozenset(nv + j for j in facet.rays)

    def faces(self, dimension: Optional[int] = None) -> list["Polyhedron"]:
        """All nonempty faces (the polyhedron itself included), sorted by dimension."""
        if self._faces is None:
            nv = len(self.vertices)
            lattice = _face_lattice(
                nv + len(self.rays),
                [self._incidence(f) for f in self.facets],
                len(self.lineality),
                keep=lambda members: any(i < nv for i in members),
            )
            found = [self._face(members, d, lattice) for members, d in lattice.items()]
            found.sort(key=lambda p: (p.dimension, p.key))
            self._faces = found
        if dimension is None:
            return list(self._faces)
        return [f for f in self._faces if f.dimension == dimension]

    def _face(self, members: frozenset[int], dimension: int, lattice: dict) -> "Polyhedron":
        if dimension == self.dimension:
            return self
        nv = len(self.vertices)
        vs = sorted(i for i in members if i < nv)
        rs = sorted(i - nv for i in members if i >= nv)
        vertex_index = {old: new for new, old in enumerate(vs)}
        ray_index = {old: new for new, old in enumerate(rs)}
        facets, seen, equations = [], set(), list(self.equations)
        for f in self.facets:
            incidence = self._incidence(f)
            if members <= incidence:
                equations.append(f.halfspace)
                continue
            cut = incidence & members
            if cut in seen or lattice.get(cut) != dimension - 1:
                continue
            seen.add(cut)
            facets.append(
                Facet(
                    f.halfspace,
                    frozenset(vertex_index[i] for i in f.vertices if i in vertex_index),
                    frozenset(ray_index[j] for j in f.rays if j in ray_index),
                )
            )
        rays = tuple(self.rays[j] for j in rs)
        result_cls = Polytope if not rays and not self.lineality else Polyhedron
        return result_cls(
            self.ambient_rank,
            tuple(self.vertices[i] for i in vs),
            rays,
            self.lineality,
            tuple(facets),
            tuple(equations),
            dimension,
        )

    def is_face_of(self, other: "Polyhedron") -> bool:
        return self in set(other.faces(self.dimension))


class Polytope(Polyhedron):
    """A bounded polyhedron; ``vertices`` are exactly its extreme points."""

    @classmethod
    def from_generators(cls, vertices, rays=(), lineality=(), ambient_rank=None):
        if any(any(Fraction(x) != 0 for x in r) for r in list(rays) + list(lineality)):
            raise GeometryError("a polytope has no rays")
        return Polyhedron.from_generators(vertices, (), (), ambient_rank)

    @property
    def is_lattice(self) -> bool:
        return all(is_integral(v) for v in self.vertices)

    @cached_property
    def lattice_frame(self) -> tuple[LatticeVector, ...]:
        """Lattice basis of ``M ∩ L`` for the linear space ``L`` parallel to the polytope."""
        return affine_hull(self.vertices).basis

    def coordinates(self, point: Sequence) -> QVector:
        """Coordinates of ``point - vertices[0]`` in :attr:`lattice_frame`."""
        frame = self.lattice_frame
        if not frame:
            return ()
        columns = list(zip(*frame))
        result = solve(columns, sub(point, self.vertices[0]), len(frame))
        if result is None:
            raise GeometryError("point is not on the affine hull")
        return result

    def translate(self, vector: Sequence) -> "Polytope":
        return Polytope.from_generators([tuple(a + Fraction(b) for a, b in zip(v, vector)) for v in self.vertices])

    def dilate(self, factor) -> "Polytope":
        factor = Fraction(factor)
        if factor <= 0:
            raise GeometryError("dilation factor must be positive")
        return Polytope.from_generators([tuple(factor * x for x in v) for v in self.vertices])

    def triangulation(self) -> list[tuple[QVector, ...]]:
        """Pulling triangulation from the lexicographically smallest vertex."""
        if self.dimension == 0:
            return [(self.vertices[0],)]
        apex = self.vertices[0]
        simplices = []
        for face in self.faces(self.dimension - 1):
            if apex in face.vertices:
                continue
            for simplex in face.triangulation():
                simplices.append((apex,) + simplex)
        return simplices

    def volume(self, mode: str = "ambient") -> Fraction:
        return volume(self, mode)


def simplex_volume(points: Sequence[Sequence]) -> Fraction:
    d = len(points) - 1
    if d == 0:
        return Fraction(1)
    base = points[0]
    return abs(determinant([sub(p, base) for p in points[1:]])) / math.factorial(d)


def convex_hull(points: Iterable[Sequence]) -> Polytope:
    points = [qvector(p) for p in points]
    if not points:
        raise GeometryError("convex hull of an empty point set")
    n = len(points[0])
    if any(len(p) != n for p in points):
        raise GeometryError("mixed ambient ranks")
    hull = Polytope.from_generators(sorted(set(points)), ambient_rank=n)
    logger.debug("hull of %d points has %d vertices", len(points), len(hull.vertices))
    return hull


def affine_hull(points: Iterable[Sequence]) -> AffineHull:
    points = [qvector(p) for p in points]
    if not points:
        raise GeometryError("affine hull of an empty point set")
    n = len(points[0])
    base = points[0]
    basis = tuple(saturated_basis([sub(p, base) for p in points[1:]], n))
    normals = nullspace(basis, n) if basis else [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    equations = []
    for normal in normals:
        normal = primitive_direction(normal)
        equations.append(Halfspace(tuple(Fraction(x) for x in normal), pairing(normal, base)))
    return AffineHull(base, basis, tuple(equations))


def volume(polytope: Polytope, mode: str = "ambient") -> Fraction:
    """Exact volume; ``relative`` normalizes ``M ∩ L`` to covolume one."""
    if mode == "ambient":
        if polytope.dimension < polytope.ambient_rank:
            return Fraction(0)
        transform = lambda p: p
    elif mode == "relative":
        if polytope.dimension == 0:
            return Fraction(1)
        transform = polytope.coordinates
    else:
        raise GeometryError(f"unknown volume mode {mode!r}")
    return sum(
        (simplex_volume([transform(p) for p in simplex]) for simplex in polytope.triangulation()),
        Fraction(0),
    )


@dataclass(frozen=True)
class Face:
    polytope: Polytope
    normal: Optional[QVector] = None


def faces(polytope: Polytope, k: int) -> list[Face]:
    """The ``k``-faces; facets of a full-dimensional polytope carry their primitive inner normal."""
    if not 0 <= k <= polytope.dimension:
        raise GeometryError(f"face dimension {k} out of range 0..{polytope.dimension}")
    found = polytope.faces(k)
    if k == polytope.dimension - 1 and polytope.is_full_dimensional:
        normals = {}
        for facet in polytope.facets:
            normals[frozenset(polytope.vertices[i] for i in facet.vertices)] = facet.halfspace.normal
        return [Face(f, normals[frozenset(f.vertices)]) for f in found]
    return [Face(f) for f in found]


def lattice_points(polytope: Polytope) -> list[LatticeVector]:
    low = [math.floor(min(v[i] for v in polytope.vertices)) for i in range(polytope.ambient_rank)]
    high = [math.ceil(max(v[i] for v in polytope.vertices)) for i in range(polytope.ambient_rank)]
    return [
        point
        for point in product(*(range(a, b + 1) for a, b in zip(low, high)))
        if polytope.contains(point)
    ]


def refined_lattice_points(polytope: Polytope, resolution: int) -> list[QVector]:
    """Points of ``(1/resolution) M`` inside the polytope, in lexicographic order."""
    if resolution < 1:
        raise GeometryError("resolution must be at least 1")
    dilated = polytope.dilate(resolution)
    return [tuple(Fraction(x, resolution) for x in p) for p in lattice_points(dilated)]


class Cone:
    """A rational polyhedral cone ``cone(rays) + span(lineality)``."""

    def __init__(self, ambient_rank, rays, lineality, facets, equations, dimension):
        self.ambient_rank = ambient_rank
        self.rays: tuple[LatticeVector, ...] = rays
        self.lineality: tuple[LatticeVector, ...] = lineality
        self.facets: tuple[tuple[LatticeVector, frozenset[int]], ...] = facets
        self.equations: tuple[LatticeVector, ...] = equations
        self.dimension = dimension
        self._faces = None

    @classmethod
    def from_rays(cls, rays: Iterable[Sequence], ambient_rank: int, lineality: Iterable[Sequence] = ()) -> "Cone":
        rays = [qvector(r) for r in rays]
        lineality = [qvector(l) for l in lineality]
        n = ambient_rank
        if any(len(x) != n for x in rays + lineality):
            raise GeometryError("mixed ambient ranks")
        origin = (Fraction(0),) * n
        inequalities, equations = _inequalities(
            [origin], [r for r in rays if any(r)], [l for l in lineality if any(l)], n
        )
        _, rays, lines = _generators([_row(h) for h in inequalities], [_row(e) for e in equations], n)
        return cls._assemble(n, rays, lines, inequalities, equations)

    @classmethod
    def from_halfspaces(
        cls, normals: Iterable[Sequence], equations: Iterable[Sequence] = (), ambient_rank: Optional[int] = None
    ) -> "Cone":
        normals = [qvector(a) for a in normals]
        equations = [qvector(e) for e in equations]
        if ambient_rank is None:
            ambient_rank = len((normals or equations)[0])
        n = ambient_rank
        nil = Fraction(0)
        _, rays, lines = _generators(
            [(nil, *a) for a in normals if any(a)], [(nil, *e) for e in equations if any(e)], n
        )
        inequalities, equations = _inequalities([(nil,) * n], rays, lines, n)
        return cls._assemble(n, rays, lines, inequalities, equations)

    @classmethod
    def _assemble(cls, n, rays, lines, inequalities, equations):
        lin = tuple(saturated_basis(lines, n))
        ray_set = sorted({primitive_direction(project_out(r, lin)) for r in rays})
        facets = []
        for h in inequalities:
            normal = tuple(int(x) for x in h.normal)
            facets.append((normal, frozenset(i for i, r in enumerate(ray_set) if pairing(normal, r) == 0)))
        return cls(
            n,
            tuple(ray_set),
            lin,
            tuple(facets),
            tuple(tuple(int(x) for x in e.normal) for e in equations),
            n - len(equations),
        )

    @classmethod
    def zero(cls, ambient_rank: int) -> "Cone":
        return cls.from_rays([], ambient_rank)

    @property
    def key(self):
        return (self.ambient_rank, self.rays, _canonical_lineality(self.lineality))

    def __eq__(self, other):
        return isinstance(other, Cone) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Cone(rays={list(self.rays)}, lineality={list(self.lineality)})"

    @property
    def is_pointed(self) -> bool:
        return not self.lineality

    @property
    def generators(self) -> list[LatticeVector]:
        """Rays plus the lineality basis in both signs."""
        return (
            list(self.rays)
            + list(self.lineality)
            + [tuple(-x for x in l) for l in self.lineality]
        )

    def contains(self, point: Sequence) -> bool:
        return all(pairing(w, point) >= 0 for w, _ in self.facets) and all(
            pairing(e, point) == 0 for e in self.equations
        )

    def relative_interior_contains(self, point: Sequence) -> bool:
        return self.contains(point) and all(pairing(w, point) > 0 for w, _ in self.facets)

    def relative_interior_point(self) -> QVector:
        point = [Fraction(0)] * self.ambient_rank
        for r in self.rays:
            for i, x in enumerate(r):
                point[i] += x
        return tuple(point)

    def faces(self, dimension: Optional[int] = None) -> list["Cone"]:
        if self._faces is None:
            lattice = _face_lattice(len(self.rays), [t for _, t in self.facets], len(self.lineality))
            cones = [self._face(members, d, lattice) for members, d in lattice.items()]
            self._faces = sorted(cones, key=lambda c: (c.dimension, c.key))
        if dimension is None:
            return list(self._faces)
        return [c for c in self._faces if c.dimension == dimension]

    def _face(self, members: frozenset[int], dimension: int, lattice: dict) -> "Cone":
        if dimension == self.dimension:
            return self
        index = {old: new for new, old in enumerate(sorted(members))}
        facets, seen, equations = [], set(), list(self.equations)
        for w, tight in self.facets:
            if members <= tight:
                equations.append(w)
                continue
            cut = tight & members
            if cut in seen or lattice.get(cut) != dimension - 1:
                continue
            seen.add(cut)
            facets.append((w, frozenset(index[i] for i in cut)))
        rays = tuple(self.rays[i] for i in sorted(members))
        return Cone(self.ambient_rank, rays, self.lineality, tuple(facets), tuple(equations), dimension)

    def height_one_slice(self) -> Polyhedron:
        """``σ₁ = {u : (u, 1) ∈ σ}`` for a cone σ in ``N × R``."""
        n = self.ambient_rank - 1
        if any(not any(w[:-1]) and w[-1] < 0 for w, _ in self.facets) or any(
            not any(e[:-1]) for e in self.equations
        ):
            raise GeometryError("cone does not meet height one")
        halfspaces = [
            Halfspace(tuple(Fraction(x) for x in w[:-1]), Fraction(-w[-1])) for w, _ in self.facets if any(w[:-1])
        ]
        equations = [
            Halfspace(tuple(Fraction(x) for x in e[:-1]), Fraction(-e[-1])) for e in self.equations if any(e[:-1])
        ]
        return Polyhedron.from_halfspaces(halfspaces, equations, ambient_rank=n)

    def height_zero_slice(self) -> "Cone":
        """``σ₀ = {u : (u, 0) ∈ σ}`` for a cone σ in ``N × R``."""
        n = self.ambient_rank - 1
        return Cone.from_halfspaces(
            [w[:-1] for w, _ in self.facets if any(w[:-1])],
            [e[:-1] for e in self.equations if any(e[:-1])],
            ambient_rank=n,
        )


def _pseudomanifold(maximal, facets_of, n) -> bool:
    if any(cell.dimension != n for cell in maximal):
        return False
    counts = {}
    for cell in maximal:
        for facet in facets_of(cell):
            counts[facet] = counts.get(facet, 0) + 1
    return all(c == 2 for c in counts.values())


class Fan:
    """A finite set of cones closed under taking faces."""

    def __init__(self, cones: Iterable[Cone], ambient_rank: Optional[int] = None):
        cones = list(cones)
        if ambient_rank is None:
            if not cones:
                raise GeometryError("cannot infer the ambient rank of an empty fan")
            ambient_rank = cones[0].ambient_rank
        self.ambient_rank = ambient_rank
        closed = set()
        for cone in cones:
            closed.update(cone.faces())
        self.cones: tuple[Cone, ...] = tuple(sorted(closed, key=lambda c: (c.dimension, c.key)))
        proper_faces = set()
        for cone in self.cones:
            proper_faces.update(f for f in cone.faces() if f != cone)
        self.maximal_cones: tuple[Cone, ...] = tuple(c for c in self.cones if c not in proper_faces)

    def __repr__(self):
        return f"Fan(maximal_cones={list(self.maximal_cones)})"

    def __contains__(self, cone: Cone) -> bool:
        return cone in set(self.cones)

    def index(self, cone: Cone) -> int:
        try:
            return self.cones.index(cone)
        except ValueError:
            raise GeometryError("cone is not a cone of the fan") from None

    @property
    def rays(self) -> list[LatticeVector]:
        """Primitive generators of the one-dimensional cones."""
        return [c.rays[0] for c in self.cones if c.dimension == 1 and c.rays]

    @property
    def is_strongly_convex(self) -> bool:
        return all(c.is_pointed for c in self.cones)

    @property
    def is_complete(self) -> bool:
        return _pseudomanifold(
            self.maximal_cones, lambda c: c.faces(self.ambient_rank - 1), self.ambient_rank
        )

    def validate(self) -> "Fan":
        """Check that pairwise intersections of maximal cones are common faces."""
        for sigma, tau in combinations(self.maximal_cones, 2):
            meet = Cone.from_halfspaces(
                [w for w, _ in sigma.facets] + [w for w, _ in tau.facets],
                list(sigma.equations) + list(tau.equations),
                ambient_rank=self.ambient_rank,
            )
            if meet not in set(sigma.faces()) or meet not in set(tau.faces()):
                raise GeometryError("cones do not meet in a common face")
        return self


class PolyComplex:
    """A finite set of polyhedra closed under taking faces.

    Only the generating polyhedra are stored; the face closure is taken on
    first use.
    """

    def __init__(self, polyhedra: Iterable[Polyhedron], ambient_rank: Optional[int] = None):
        self.generators: tuple[Polyhedron, ...] = tuple(polyhedra)
        if ambient_rank is None:
            if not self.generators:
                raise GeometryError("cannot infer the ambient rank of an empty complex")
            ambient_rank = self.generators[0].ambient_rank
        self.ambient_rank = ambient_rank

    @cached_property
    def cells(self) -> tuple[Polyhedron, ...]:
        closed = set()
        for cell in self.generators:
            closed.update(cell.faces())
        return tuple(sorted(closed, key=lambda c: (c.dimension, c.key)))

    @cached_property
    def _cell_set(self) -> frozenset[Polyhedron]:
        return frozenset(self.cells)

    @cached_property
    def maximal_cells(self) -> tuple[Polyhedron, ...]:
        proper_faces = set()
        for cell in self.cells:
            proper_faces.update(f for f in cell.faces() if f != cell)
        return tuple(c for c in self.cells if c not in proper_faces)

    def __contains__(self, cell: Polyhedron) -> bool:
        return cell in self._cell_set

    def cells_of_dimension(self, k: int) -> list[Polyhedron]:
        return [c for c in self.cells if c.dimension == k]

    @property
    def vertices(self) -> list[QVector]:
        return sorted({face.vertices[0] for cell in self.generators for face in cell.faces(0)})

    @property
    def is_complete(self) -> bool:
        return _pseudomanifold(
            self.maximal_cells, lambda c: c.faces(self.ambient_rank - 1), self.ambient_rank
        )

    def gamma_multiplier(self, group: ValueGroup) -> int:
        return math.lcm(1, *(cell.gamma_multiplier(group) for cell in self.maximal_cells))

    def validate(self) -> "PolyComplex":
        for lam, mu in combinations(self.maximal_cells, 2):
            try:
                meet = Polyhedron.from_halfspaces(
                    list(lam.halfspaces) + list(mu.halfspaces),
                    list(lam.equations) + list(mu.equations),
                    ambient_rank=self.ambient_rank,
                )
            except GeometryError:
                continue
            if meet not in set(lam.faces()) or meet not in set(mu.faces()):
                raise GeometryError("cells do not meet in a common face")
        return self


def recession(x: Union[Polyhedron, PolyComplex]) -> Union[Cone, Fan]:
    if isinstance(x, Polyhedron):
        return x.recession_cone()
    fan = Fan([cell.recession_cone() for cell in x.cells], x.ambient_rank)
    try:
        return fan.validate()
    except GeometryError:
        raise GeometryError("recession is not a fan") from None


def cone_over(x: Union[Polyhedron, PolyComplex]) -> Union[Cone, Fan]:
    """``cone(Λ)``: the closure of ``R_{>0} (Λ × {1})``; for complexes the fan ``cone(Π)``."""
    if isinstance(x, PolyComplex):
        cones = []
        for cell in x.cells:
            cones.append(cone_over(cell))
            rec = cell.recession_cone()
            cones.append(
                Cone.from_rays([r + (0,) for r in rec.rays], x.ambient_rank + 1, [l + (0,) for l in rec.lineality])
            )
        return Fan(cones, x.ambient_rank + 1)
    if not x.is_strongly_convex:
        raise GeometryError("cone over a polyhedron needs a strongly convex polyhedron")
    n = x.ambient_rank
    rays = [primitive_direction(v + (Fraction(1),)) for v in x.vertices]
    rays += [tuple(r) + (0,) for r in x.rays]
    return Cone.from_rays(rays, n + 1)


def height_slices(fan: Fan) -> tuple[PolyComplex, Fan]:
    """``(Π, Σ)`` with ``Π = {σ₁}`` over the cones leaving ``N × {0}`` and ``Σ = {σ₀}``."""
    n = fan.ambient_rank - 1
    lifted = [sigma for sigma in fan.maximal_cones if any(r[-1] > 0 for r in sigma.rays)]
    complex_ = PolyComplex([sigma.height_one_slice() for sigma in lifted], n)
    recessions = Fan([sigma.height_zero_slice() for sigma in fan.maximal_cones], n)
    return complex_, recessions


def face_of_cone(polytope: Polytope, cone: Cone) -> Polytope:
    """``F_σ``: the face of ``Δ`` on which ``<·, u>`` is minimal for ``u`` in the relative interior of σ."""
    u = cone.relative_interior_point()
    values = [pairing(v, u) for v in polytope.vertices]
    low = min(values)
    return convex_hull([v for v, value in zip(polytope.vertices, values) if value == low])


def normal_cone(polytope: Polytope, face: Polytope) -> Cone:
    """``{u : <·, u> attains its minimum over Δ on the whole face}``."""
    inside = face.vertices[0]
    normals = [sub(v, inside) for v in polytope.vertices]
    equations = [sub(v, inside) for v in face.vertices[1:]]
    return Cone.from_halfspaces(normals, equations, ambient_rank=polytope.ambient_rank)


@dataclass(frozen=True)
class NormalFan:
    polytope: Polytope
    fan: Fan
    pairs: tuple[tuple[Polytope, Cone], ...]

    def cone_of(self, face: Polytope) -> Cone:
        for f, c in self.pairs:
            if f == face:
                return c
        raise GeometryError("not a face of the polytope")

    def face_of(self, cone: Cone) -> Polytope:
        for f, c in self.pairs:
            if c == cone:
                return f
        raise GeometryError("cone is not a cone of the fan")


def normal_fan(polytope: Polytope, allow_lower_dimensional: bool = False) -> NormalFan:
    if not polytope.is_full_dimensional and not allow_lower_dimensional:
        raise GeometryError(
            "normal fan needs a full-dimensional polytope; use support_function_of_polytope instead"
        )
    pairs = tuple((face, normal_cone(polytope, face)) for face in polytope.faces())
    fan = Fan([c for _, c in pairs], polytope.ambient_rank)
    return NormalFan(polytope, fan, pairs)
