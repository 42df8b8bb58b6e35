from fractions import Fraction

import numpy as np
import pytest

from torheight.concave import AffineForm, canonical_min_form, legendre_dual, stability_set, upper_envelope
from torheight.errors import GeometryError
from torheight.monge_ampere import DiscreteMeasure, check_boundary_identity, integrate_cellwise, ma_measure
from torheight.polyhedra import volume

F = Fraction


def pa(*pieces):
    return canonical_min_form(AffineForm(tuple(F(x) for x in s), F(c)) for s, c in pieces)


def random_function(rng, n):
    slopes = [(0,) * n] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    slopes += [tuple(int(x) for x in rng.integers(-2, 3, size=n)) for _ in range(3)]
    return pa(*((s, F(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))) for s in slopes))


class TestDiscreteMeasure:
    """Test finite sums of point masses"""

    def test_zero_masses_dropped(self):
        """Test atoms of mass zero disappear"""
        mu = DiscreteMeasure.from_atoms([((1,), F(0)), ((0,), F(2))])
        assert mu.atoms == (((F(0),), F(2)),)

    def test_negative_mass(self):
        """Test masses are nonnegative"""
        with pytest.raises(GeometryError) as exc_info:
            DiscreteMeasure.from_atoms([((0,), F(-1))])
        assert "nonnegative" in str(exc_info.value)

    def test_duplicate_location(self):
        """Test atom locations are distinct"""
        with pytest.raises(GeometryError):
            DiscreteMeasure.from_atoms([((0,), F(1)), ((0,), F(2))])

    def test_arithmetic(self):
        """Test total mass, scaling and integration"""
        mu = DiscreteMeasure.from_atoms([((0,), F(1)), ((2,), F(1, 2))])
        assert mu.total_mass() == F(3, 2)
        assert mu.scale(2).mass_at((2,)) == 1
        assert mu.integrate(lambda v: v[0] + 1) == F(1) + F(3, 2)

    def test_canonical_equality(self):
        """Test atom order does not matter"""
        a = DiscreteMeasure.from_atoms([((0,), F(1)), ((1,), F(1))])
        b = DiscreteMeasure.from_atoms([((1,), F(1)), ((0,), F(1))])
        assert a == b


class TestMongeAmpere:
    """Test Monge-Ampère measures"""

    def test_support_function_of_interval(self):
        """Test min(0,u) has one unit atom at 0"""
        mu = ma_measure(pa(((0,), 0), ((1,), 0)))
        assert mu.atoms == (((F(0),), F(1)),)

    def test_absolute_value(self):
        """Test min(u,-u) has mass 2 at 0"""
        assert ma_measure(pa(((1,), 0), ((-1,), 0))).mass_at((0,)) == 2

    def test_simplex(self):
        """Test min(0,u1,u2) has mass 1/2 at the origin"""
        mu = ma_measure(pa(((0, 0), 0), ((1, 0), 0), ((0, 1), 0)))
        assert mu.atoms == (((F(0), F(0)), F(1, 2)),)

    def test_affine_invariance(self):
        """Test adding an affine function keeps the masses"""
        f = pa(((0, 0), 0), ((1, 0), 1), ((0, 1), 2), ((1, 1), 2))
        assert ma_measure(f.twist((3, -1)).shift(5)) == ma_measure(f)

    def test_mass_conservation(self):
        """Test total mass equals the volume of the stability set"""
        rng = np.random.default_rng(11)
        for n in (1, 2, 3):
            for _ in range(5):
                f = random_function(rng, n)
                assert ma_measure(f).total_mass() == volume(stability_set(f))


class TestIntegrateCellwise:
    """Test exact integration of envelopes"""

    def test_zero(self):
        """Test the zero function integrates to zero"""
        assert integrate_cellwise(upper_envelope([((0, 0), 0), ((2, 0), 0), ((0, 3), 0)])) == 0

    def test_linear(self):
        """Test m-1 on [0,1]"""
        assert integrate_cellwise(legendre_dual(pa(((0,), 1), ((1,), 0)))) == F(-1, 2)

    def test_tent(self):
        """Test min(m, 2-m) on [0,2]"""
        assert integrate_cellwise(upper_envelope([((0,), 0), ((1,), 1), ((2,), 0)])) == 1

    def test_refinement(self):
        """Test adding points on the graph does not change the integral"""
        coarse = upper_envelope([((0,), 0), ((2,), 2)])
        fine = upper_envelope([((0,), 0), ((1,), 1), ((2,), 2)])
        assert integrate_cellwise(coarse) == integrate_cellwise(fine) == 2

    def test_relative(self):
        """Test a thin domain is measured in its own lattice"""
        g = upper_envelope([((0, 0), 0), ((1, 1), 2)])
        assert integrate_cellwise(g) == 1


class TestBoundaryIdentity:
    """Test the facet-sum identity for ∫ f dM(f)"""

    def test_support_function(self):
        """Test both sides vanish for min(0,u)"""
        result = check_boundary_identity(pa(((0,), 0), ((1,), 0)))
        assert result.lhs == result.rhs == 0

    def test_min_one_u(self):
        """Test both sides are -1 for min(1,u)"""
        result = check_boundary_identity(pa(((0,), 1), ((1,), 0)))
        assert result.lhs == result.rhs == -1

    def test_absolute_value(self):
        """Test both sides vanish for min(u,-u)"""
        result = check_boundary_identity(pa(((1,), 0), ((-1,), 0)))
        assert result.holds and result.lhs == 0

    def test_random_instances(self):
        """Test the identity on seeded instances in dimensions 1 to 3"""
        rng = np.random.default_rng(5)
        for n in (1, 2, 3):
            for _ in range(4):
                assert check_boundary_identity(random_function(rng, n)).holds

    def test_thin_stability_set(self):
        """Test a lower-dimensional stability set is refused"""
        with pytest.raises(GeometryError) as exc_info:
            check_boundary_identity(pa(((0, 0), 0), ((1, 1), 0)))
        assert "full-dimensional" in str(exc_info.value)

    def test_non_lattice(self):
        """Test a non-lattice stability set is refused"""
        with pytest.raises(GeometryError) as exc_info:
            check_boundary_identity(pa(((0,), 0), ((F(1, 2),), 0)))
        assert "lattice" in str(exc_info.value)
