from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from torheight.errors import GeometryError
from torheight.exact import ValueGroup
from torheight.polyhedra import (
    Cone,
    Fan,
    Halfspace,
    Polyhedron,
    Polytope,
    PolyComplex,
    affine_hull,
    cone_over,
    convex_hull,
    face_of_cone,
    height_slices,
    faces,
    lattice_points,
    normal_fan,
    recession,
    refined_lattice_points,
    volume,
)

F = Fraction
SQUARE = [(0, 0), (1, 0), (0, 1), (1, 1)]
SIMPLEX = [(0, 0), (1, 0), (0, 1)]


def q(*xs):
    return tuple(F(x) for x in xs)


def point_lists(n):
    return st.lists(st.tuples(*[st.fractions(-3, 3, max_denominator=2)] * n), min_size=1, max_size=7)


class TestConvexHull:
    """Test exact convex hulls"""

    def test_interior_point_dropped(self):
        """Test interior points are not vertices"""
        hull = convex_hull([(0, 0), (1, 0), (0, 1), (F(1, 4), F(1, 4))])
        assert set(hull.vertices) == {q(0, 0), q(1, 0), q(0, 1)}
        assert len(hull.halfspaces) == 3

    def test_segment(self):
        """Test the hull of two points on a line"""
        hull = convex_hull([(0,), (1,)])
        assert hull.vertices == (q(0), q(1))
        assert hull.dimension == 1

    def test_quadrilateral(self):
        """Test a collinear non-vertex is dropped"""
        hull = convex_hull([(0, 0), (1, 0), (2, 2), (0, 1), (1, 1)])
        assert set(hull.vertices) == {q(0, 0), q(1, 0), q(2, 2), q(0, 1)}

    def test_lower_dimensional_hull_carries_equations(self):
        """Test a diagonal segment has one equation"""
        hull = convex_hull([(0, 0), (2, 2)])
        assert hull.dimension == 1
        assert len(hull.equations) == 1
        assert hull.contains((1, 1))
        assert not hull.contains((1, 0))

    def test_empty_input(self):
        """Test the hull of nothing is an error"""
        with pytest.raises(GeometryError):
            convex_hull([])

    def test_mixed_ranks(self):
        """Test points must share an ambient rank"""
        with pytest.raises(GeometryError) as exc_info:
            convex_hull([(0,), (1, 0)])
        assert "mixed ambient ranks" in str(exc_info.value)

    def test_vertices_satisfy_halfspaces(self):
        """Test both descriptions agree on the vertices"""
        hull = convex_hull([(0, 0, 0), (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 1)])
        for v in hull.vertices:
            assert all(h.contains(v) for h in hull.halfspaces)
            assert any(h.is_tight(v) for h in hull.halfspaces)

    def test_from_halfspaces(self):
        """Test the H-description of the unit square"""
        halfspaces = [
            Halfspace(q(1, 0), F(0)),
            Halfspace(q(-1, 0), F(-1)),
            Halfspace(q(0, 1), F(0)),
            Halfspace(q(0, -1), F(-1)),
        ]
        square = Polyhedron.from_halfspaces(halfspaces)
        assert isinstance(square, Polytope)
        assert square == convex_hull(SQUARE)

    def test_empty_halfspaces(self):
        """Test infeasible inequalities are rejected"""
        with pytest.raises(GeometryError) as exc_info:
            Polyhedron.from_halfspaces([Halfspace(q(1), F(1)), Halfspace(q(-1), F(0))])
        assert "empty polyhedron" in str(exc_info.value)

    def test_zero_normal(self):
        """Test halfspace normals are nonzero"""
        with pytest.raises(GeometryError):
            Halfspace(q(0, 0), F(1))

    @given(point_lists(2))
    @settings(max_examples=25, deadline=None)
    def test_hull_idempotent(self, points):
        """Test hulling the vertices or the H-description gives the same polytope"""
        hull = convex_hull(points)
        assert convex_hull(hull.vertices) == hull
        assert Polyhedron.from_halfspaces(hull.halfspaces, hull.equations, ambient_rank=2) == hull

    @given(point_lists(3))
    @settings(max_examples=15, deadline=None)
    def test_hull_idempotent_space(self, points):
        """Test hull idempotence in three dimensions"""
        hull = convex_hull(points)
        assert convex_hull(hull.vertices) == hull

    def test_unbounded_from_halfspaces(self):
        """Test the H-description of the positive quadrant"""
        quadrant = Polyhedron.from_halfspaces([Halfspace(q(1, 0), F(0)), Halfspace(q(0, 1), F(0))])
        assert not isinstance(quadrant, Polytope)
        assert quadrant.vertices == (q(0, 0),)
        assert set(quadrant.rays) == {q(1, 0), q(0, 1)}


class TestVolume:
    """Test ambient and relative volumes"""

    def test_unit_simplex(self):
        """Test the unit triangle has area 1/2"""
        assert volume(convex_hull(SIMPLEX)) == F(1, 2)

    def test_segment_modes(self):
        """Test ambient and relative volume of a diagonal segment"""
        segment = convex_hull([(0, 0), (2, 2)])
        assert volume(segment, "ambient") == 0
        assert volume(segment, "relative") == 2

    def test_quadrilateral(self):
        """Test the volume of conv{(0,0),(1,0),(2,2),(0,1)}"""
        assert volume(convex_hull([(0, 0), (1, 0), (2, 2), (0, 1)])) == 2

    def test_point_relative(self):
        """Test a point has relative volume one"""
        assert volume(convex_hull([(1, 1)]), "relative") == 1

    def test_dilated_cube(self):
        """Test volume scales with the n-th power of a dilation"""
        cube = convex_hull([(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])
        assert volume(cube.dilate(3)) == 27

    @given(point_lists(2), st.tuples(st.fractions(-5, 5, max_denominator=3), st.fractions(-5, 5, max_denominator=3)))
    @settings(max_examples=25, deadline=None)
    def test_translation_invariance(self, points, shift):
        """Test translating a polytope keeps both volumes"""
        hull = convex_hull(points)
        moved = hull.translate(shift)
        assert volume(moved) == volume(hull)
        assert volume(moved, "relative") == volume(hull, "relative")

    def test_unknown_mode(self):
        """Test the volume mode is checked"""
        with pytest.raises(GeometryError):
            volume(convex_hull(SIMPLEX), "surface")


class TestFaces:
    """Test face enumeration and inner normals"""

    def test_facets_of_interval(self):
        """Test the endpoints of [0,1] with their normals"""
        found = {f.polytope.vertices: f.normal for f in faces(convex_hull([(0,), (1,)]), 0)}
        assert found == {(q(0),): q(1), (q(1),): q(-1)}

    def test_facets_of_square(self):
        """Test the unit square has four edges with axis normals"""
        found = faces(convex_hull(SQUARE), 1)
        assert len(found) == 4
        assert {f.normal for f in found} == {q(1, 0), q(-1, 0), q(0, 1), q(0, -1)}

    def test_vertices_of_simplex(self):
        """Test the 0-faces of the unit triangle"""
        assert len(faces(convex_hull(SIMPLEX), 0)) == 3

    def test_out_of_range(self):
        """Test k must lie between 0 and dim P"""
        with pytest.raises(GeometryError) as exc_info:
            faces(convex_hull(SIMPLEX), 3)
        assert "out of range" in str(exc_info.value)

    def test_face_lattice_of_cube(self):
        """Test the f-vector of the cube"""
        cube = convex_hull([(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])
        assert [len(cube.faces(k)) for k in range(4)] == [8, 12, 6, 1]

    def test_face_lattice_of_quadrant(self):
        """Test the quadrant has one vertex, two edges and itself"""
        quadrant = Polyhedron.from_generators([(0, 0)], [(1, 0), (0, 1)])
        assert [len(quadrant.faces(k)) for k in range(3)] == [1, 2, 1]
        edges = quadrant.faces(1)
        assert {edge.rays for edge in edges} == {(q(1, 0),), (q(0, 1),)}
        assert all(edge.is_face_of(quadrant) for edge in edges)

    def test_face_lattice_of_strip(self):
        """Test a strip has no vertices and two boundary lines"""
        strip = Polyhedron.from_generators([(0, 0), (1, 0)], lineality=[(0, 1)])
        assert strip.dimension == 2
        assert [len(strip.faces(k)) for k in range(3)] == [0, 2, 1]
        assert all(line.dimension == 1 and line.lineality for line in strip.faces(1))


class TestNormalFan:
    """Test normal fans and the face correspondence"""

    def test_interval(self):
        """Test [0,1] gives the fan of the projective line"""
        nf = normal_fan(convex_hull([(0,), (1,)]))
        assert nf.cone_of(convex_hull([(0,)])) == Cone.from_rays([(1,)], 1)
        assert nf.cone_of(convex_hull([(1,)])) == Cone.from_rays([(-1,)], 1)
        assert nf.cone_of(convex_hull([(0,), (1,)])) == Cone.zero(1)

    def test_square(self):
        """Test the unit square gives the four quadrants"""
        nf = normal_fan(convex_hull(SQUARE))
        assert len(nf.fan.maximal_cones) == 4
        assert nf.fan.is_complete
        assert nf.face_of(Cone.from_rays([(1, 0), (0, 1)], 2)) == convex_hull([(0, 0)])

    def test_simplex(self):
        """Test the unit triangle gives the fan of the projective plane"""
        nf = normal_fan(convex_hull(SIMPLEX))
        assert len(nf.fan.maximal_cones) == 3
        assert set(nf.fan.rays) == {(1, 0), (0, 1), (-1, -1)}

    def test_order_reversing(self):
        """Test faces map back through face_of_cone"""
        square = convex_hull(SQUARE)
        nf = normal_fan(square)
        for face, cone in nf.pairs:
            assert face_of_cone(square, cone) == face
            assert face.dimension + cone.dimension == 2

    def test_lower_dimensional(self):
        """Test a thin polytope is refused"""
        with pytest.raises(GeometryError) as exc_info:
            normal_fan(convex_hull([(0, 0), (1, 1)]))
        assert "full-dimensional" in str(exc_info.value)


class TestCones:
    """Test cones, fans and recession"""

    def test_recession_of_halfline(self):
        """Test the recession cone of [1, ∞)"""
        halfline = Polyhedron.from_generators([(1,)], [(1,)])
        assert recession(halfline) == Cone.from_rays([(1,)], 1)
        assert not halfline.is_bounded

    def test_recession_of_polytope(self):
        """Test bounded polyhedra recede to the origin"""
        assert recession(convex_hull(SQUARE)) == Cone.zero(2)

    def test_recession_of_complex(self):
        """Test the complex (-∞,0], [0,1], [1,∞) recedes to the fan of P^1"""
        cells = [
            Polyhedron.from_generators([(0,)], [(-1,)]),
            convex_hull([(0,), (1,)]),
            Polyhedron.from_generators([(1,)], [(1,)]),
        ]
        complex_ = PolyComplex(cells)
        assert complex_.is_complete
        fan = recession(complex_)
        assert set(fan.maximal_cones) == {Cone.from_rays([(1,)], 1), Cone.from_rays([(-1,)], 1)}

    def test_rays_are_primitive(self):
        """Test cone rays are stored primitive"""
        cone = Cone.from_rays([(2, 4), (3, 0)], 2)
        assert set(cone.rays) == {(1, 2), (1, 0)}

    def test_redundant_ray(self):
        """Test interior rays are dropped"""
        cone = Cone.from_rays([(1, 0), (0, 1), (1, 1)], 2)
        assert set(cone.rays) == {(1, 0), (0, 1)}

    def test_cone_over_segment(self):
        """Test the cone over [0,1] at height one"""
        cone = cone_over(convex_hull([(0,), (1,)]))
        assert set(cone.rays) == {(0, 1), (1, 1)}

    def test_cone_over_needs_strong_convexity(self):
        """Test polyhedra containing a line have no cone"""
        line = Polyhedron.from_generators([(0, 0)], lineality=[(1, 0)])
        with pytest.raises(GeometryError) as exc_info:
            cone_over(line)
        assert "strongly convex" in str(exc_info.value)

    @pytest.mark.parametrize(
        "cell",
        [
            convex_hull(SQUARE),
            convex_hull([(0,), (F(1, 2),)]),
            Polyhedron.from_generators([(1, 0), (0, 1)], [(1, 0), (0, 1)]),
        ],
    )
    def test_cone_over_slices(self, cell):
        """Test the height one slice of the cone over Λ is Λ and the height zero slice is rec(Λ)"""
        cone = cone_over(cell)
        assert cone.height_one_slice() == cell
        assert cone.height_zero_slice() == recession(cell)

    def test_cone_over_complex_slices(self):
        """Test slicing the fan over a complex gives back the complex and its recession fan"""
        cells = [
            Polyhedron.from_generators([(0,)], [(-1,)]),
            convex_hull([(0,), (F(1, 2),)]),
            Polyhedron.from_generators([(F(1, 2),)], [(1,)]),
        ]
        complex_, fan = height_slices(cone_over(PolyComplex(cells)))
        assert set(complex_.maximal_cells) == set(cells)
        assert set(fan.maximal_cones) == {Cone.from_rays([(1,)], 1), Cone.from_rays([(-1,)], 1)}

    def test_slice_misses_height_one(self):
        """Test cones below or on height zero have no height one slice"""
        for cone in (Cone.from_rays([(1, 0), (0, -1)], 2), Cone.from_rays([(1, 0)], 2)):
            with pytest.raises(GeometryError) as exc_info:
                cone.height_one_slice()
            assert "does not meet height one" in str(exc_info.value)

    def test_gamma_multiplier(self):
        """Test the multiplier making the offsets of [0, 1/2] lie in Γ"""
        segment = convex_hull([(0,), (F(1, 2),)])
        assert segment.gamma_multiplier(ValueGroup.discrete(1)) == 2
        assert segment.gamma_multiplier(ValueGroup.discrete(F(1, 2))) == 1
        assert segment.gamma_multiplier(ValueGroup.divisible()) == 1
        complex_ = PolyComplex([segment, convex_hull([(F(1, 2),), (F(2, 3),)])])
        assert complex_.gamma_multiplier(ValueGroup.discrete(1)) == 6

    def test_incomplete_fan(self):
        """Test a single quadrant is not complete"""
        fan = Fan([Cone.from_rays([(1, 0), (0, 1)], 2)])
        assert not fan.is_complete
        assert fan.is_strongly_convex


class TestLatticePoints:
    """Test lattice point enumeration"""

    def test_square(self):
        """Test the lattice points of the dilated square"""
        assert len(lattice_points(convex_hull(SQUARE).dilate(2))) == 9

    def test_refined_grid(self):
        """Test the 1/2-grid of [0,1]"""
        assert refined_lattice_points(convex_hull([(0,), (1,)]), 2) == [q(0), q(F(1, 2)), q(1)]

    def test_affine_hull(self):
        """Test the affine hull of a diagonal"""
        hull = affine_hull([(0, 0), (2, 2)])
        assert hull.basis in {((1, 1),), ((-1, -1),)}
        assert len(hull.equations) == 1
