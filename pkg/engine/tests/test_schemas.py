from fractions import Fraction

import pytest
from pydantic import ValidationError

from torheight.concave import legendre_dual
from torheight.errors import InputError
from torheight.heights import CirclePlace, FinitePlace, global_height
from torheight.monge_ampere import ma_measure
from torheight.polyhedra import convex_hull
from torheight.schemas import (
    ConcaveOnPolytopeIn,
    ConcavePAIn,
    DualIn,
    LocalHeightIn,
    MeasureIn,
    PolytopeIn,
    RoofInstanceIn,
    SupportFunctionIn,
    concave_payload,
    decimal_out,
    dump_json,
    envelope_payload,
    height_payload,
    measure_payload,
    polytope_payload,
)

F = Fraction


def elliptic_document():
    return {
        "dimension": 1,
        "exponents": [[0], [1]],
        "places": [
            {"id": "p", "kind": "finite", "weight": 1, "height": 1, "orders": [0, -1]},
            {
                "id": "tate",
                "kind": "circle",
                "weight": 1,
                "length": 1,
                "lambdas": [[["0", "0"]], [["0", "0"], ["1/2", "1/2"]]],
            },
        ],
    }


class TestRationalFields:
    """Test parsing of exact rational fields"""

    def test_strings_and_integers(self):
        """Test 'p/q' strings and integers are accepted"""
        piece = ConcavePAIn(pieces=[{"slope": ["1/2", 3], "constant": "-2/4"}]).pieces[0]
        assert piece.slope == [F(1, 2), F(3)]
        assert piece.constant == F(-1, 2)

    def test_float_rejected(self):
        """Test floats are refused for exact fields"""
        with pytest.raises(ValidationError) as exc_info:
            ConcavePAIn(pieces=[{"slope": [0.5], "constant": 0}])
        assert "'p/q' strings" in str(exc_info.value)

    def test_garbage_rejected(self):
        """Test malformed rationals are refused"""
        with pytest.raises(ValidationError) as exc_info:
            ConcavePAIn(pieces=[{"slope": ["one"], "constant": 0}])
        assert "not a rational" in str(exc_info.value)

    def test_zero_denominator(self):
        """Test a zero denominator is refused"""
        with pytest.raises(ValidationError) as exc_info:
            ConcavePAIn(pieces=[{"slope": ["1/0"], "constant": 0}])
        assert "zero denominator" in str(exc_info.value)


class TestGeometrySchemas:
    """Test polytope, function and measure documents"""

    def test_polytope_from_vertices(self):
        """Test a vertex list builds the hull"""
        polytope = PolytopeIn(vertices=[[0, 0], [1, 0], [0, 1]]).to_polytope()
        assert polytope == convex_hull([(0, 0), (1, 0), (0, 1)])

    def test_polytope_from_halfspaces(self):
        """Test an H-description of [0,1]"""
        document = {"halfspaces": [{"normal": [1], "offset": 0}, {"normal": [-1], "offset": -1}]}
        assert PolytopeIn.model_validate(document).to_polytope() == convex_hull([(0,), (1,)])

    def test_unbounded_halfspaces(self):
        """Test halfspaces must bound a polytope"""
        with pytest.raises(InputError) as exc_info:
            PolytopeIn(halfspaces=[{"normal": [1], "offset": 0}]).to_polytope()
        assert "unbounded" in str(exc_info.value)

    def test_polytope_needs_description(self):
        """Test an empty polytope document"""
        with pytest.raises(ValidationError) as exc_info:
            PolytopeIn()
        assert "needs 'vertices' or 'halfspaces'" in str(exc_info.value)

    def test_mixed_ranks(self):
        """Test vertices share a rank"""
        with pytest.raises(ValidationError) as exc_info:
            PolytopeIn(vertices=[[0], [1, 0]])
        assert "uniform rank" in str(exc_info.value)

    def test_no_pieces(self):
        """Test a concave function needs pieces"""
        with pytest.raises(ValidationError) as exc_info:
            ConcavePAIn(pieces=[])
        assert "at least one piece" in str(exc_info.value)

    def test_dual_sides(self):
        """Test exactly one side of the duality is given"""
        with pytest.raises(ValidationError) as exc_info:
            DualIn()
        assert "exactly one of 'pieces' or 'lift'" in str(exc_info.value)
        both = {"pieces": [{"slope": [0], "constant": 0}], "lift": [{"point": [0], "value": 0}]}
        with pytest.raises(ValidationError):
            DualIn.model_validate(both)

    def test_support_function_from_fan(self):
        """Test rays, cones and slopes of min(0,u)"""
        document = {"rays": [[1], [-1]], "cones": [[0], [1]], "slopes": [[0], [1]]}
        psi = SupportFunctionIn.model_validate(document).to_support_function()
        assert psi((2,)) == 0 and psi((-2,)) == -2

    def test_incomplete_fan(self):
        """Test a fan covering a half-line is refused"""
        document = {"rays": [[1]], "cones": [[0]], "slopes": [[0]]}
        with pytest.raises(InputError) as exc_info:
            SupportFunctionIn.model_validate(document).to_support_function()
        assert "not complete" in str(exc_info.value)

    def test_unknown_ray_index(self):
        """Test cones refer to existing rays"""
        with pytest.raises(ValidationError) as exc_info:
            SupportFunctionIn.model_validate({"rays": [[1]], "cones": [[3]], "slopes": [[0]]})
        assert "unknown ray index" in str(exc_info.value)

    def test_local_height_document(self):
        """Test the local height input parses both parts"""
        document = {
            "support": {"polytope": {"vertices": [[0], [1]]}},
            "metric": {"pieces": [{"slope": [0], "constant": 1}, {"slope": [1], "constant": 0}]},
        }
        parsed = LocalHeightIn.model_validate(document)
        assert parsed.metric.to_concave()((5,)) == 1

    def test_measure_negative_mass(self):
        """Test measure documents keep masses nonnegative"""
        with pytest.raises(InputError) as exc_info:
            MeasureIn(atoms=[{"at": [0], "mass": -1}]).to_measure()
        assert "nonnegative" in str(exc_info.value)


class TestInstanceSchema:
    """Test roof instance documents"""

    def test_elliptic_document(self):
        """Test one finite and one circle place"""
        instance = RoofInstanceIn.model_validate(elliptic_document()).to_instance()
        finite, circle = instance.places
        assert isinstance(finite, FinitePlace) and finite.lambdas == (0, 1)
        assert isinstance(circle, CirclePlace) and circle.lambdas_at(F(1, 4)) == (0, F(1, 4))

    def test_finite_lambda_sign(self):
        """Test finite places give λ = -h·ord"""
        document = elliptic_document()
        document["places"][0]["height"] = 3
        finite = RoofInstanceIn.model_validate(document).to_instance().places[0]
        assert finite.lambdas == (0, 3)

    def test_unknown_kind(self):
        """Test the place kind selects the schema"""
        document = elliptic_document()
        document["places"][0]["kind"] = "adelic"
        with pytest.raises(ValidationError):
            RoofInstanceIn.model_validate(document)

    def test_first_exponent(self):
        """Test m_0 is the origin"""
        document = elliptic_document()
        document["exponents"] = [[1], [0]]
        with pytest.raises(ValidationError) as exc_info:
            RoofInstanceIn.model_validate(document)
        assert "the first exponent must be 0" in str(exc_info.value)

    def test_negative_weight(self):
        """Test place weights are nonnegative"""
        document = elliptic_document()
        document["places"][0]["weight"] = -1
        with pytest.raises(ValidationError) as exc_info:
            RoofInstanceIn.model_validate(document)
        assert "nonnegative" in str(exc_info.value)

    def test_circle_breakpoints(self):
        """Test circle breakpoints stay inside one period"""
        document = elliptic_document()
        document["places"][1]["lambdas"][1] = [["0", "0"], ["1", "1"]]
        with pytest.raises(ValidationError) as exc_info:
            RoofInstanceIn.model_validate(document)
        assert "[0, length)" in str(exc_info.value)

    def test_subweights(self):
        """Test sampled subweights sum to one"""
        document = elliptic_document()
        document["places"].append(
            {"id": "inf", "kind": "sampled", "weight": 1, "nodes": [{"subweight": 0.5, "lambdas": [0, 1]}]}
        )
        with pytest.raises(ValidationError) as exc_info:
            RoofInstanceIn.model_validate(document)
        assert "sum to 1" in str(exc_info.value)

    def test_non_generating_exponents(self):
        """Test geometric failures become input errors"""
        document = elliptic_document()
        document["exponents"] = [[0], [2]]
        with pytest.raises(InputError) as exc_info:
            RoofInstanceIn.model_validate(document).to_instance()
        assert "invalid instance" in str(exc_info.value)


class TestPayloads:
    """Test that payloads parse back into the same objects"""

    def test_polytope_payload(self):
        """Test vertices of a hull payload rebuild the hull"""
        square = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1)])
        payload = polytope_payload(square)
        assert payload["dimension"] == 2
        assert PolytopeIn.model_validate(payload).to_polytope() == square
        halfspaces_only = {"halfspaces": payload["halfspaces"]}
        assert PolytopeIn.model_validate(halfspaces_only).to_polytope() == square

    def test_dual_payloads(self):
        """Test envelope and piece payloads parse back"""
        f = ConcavePAIn(pieces=[{"slope": [0], "constant": 1}, {"slope": [1], "constant": 0}]).to_concave()
        g = legendre_dual(f)
        lift = envelope_payload(g)["lift"]
        assert ConcaveOnPolytopeIn(lift=lift).to_function()((F(1, 2),)) == F(-1, 2)
        assert ConcavePAIn.model_validate(concave_payload(f)).to_concave() == f

    def test_measure_payload(self):
        """Test atoms of min(u,-u)"""
        f = ConcavePAIn(pieces=[{"slope": [1], "constant": 0}, {"slope": [-1], "constant": 0}]).to_concave()
        payload = measure_payload(ma_measure(f))
        assert payload == {"atoms": [{"at": ["0"], "mass": "2"}], "total_mass": "2"}
        assert MeasureIn.model_validate(payload).to_measure() == ma_measure(f)

    def test_height_payload(self):
        """Test the elliptic example reports 5/4"""
        report = global_height(RoofInstanceIn.model_validate(elliptic_document()).to_instance())
        payload = height_payload(report)
        assert payload["exact_total"] == "5/4"
        assert payload["factor"] == 2
        assert payload["places"]["tate"] == {"integral": "1/8", "exact": True}


class TestSerialization:
    """Test canonical JSON and decimal rendering"""

    def test_sorted_keys(self):
        """Test keys are sorted at every level"""
        assert dump_json({"b": 1, "a": {"d": [F(1, 2)], "c": None}}) == '{"a": {"c": null, "d": ["1/2"]}, "b": 1}'

    def test_floats(self):
        """Test floats use the requested significant digits"""
        assert dump_json(1.25, 6) == "1.25"
        assert dump_json(1 / 3, 3) == "0.333"

    def test_non_finite(self):
        """Test NaN is refused"""
        with pytest.raises(ValueError):
            dump_json(float("nan"))

    def test_decimal_out(self):
        """Test exact rationals rendered to fixed decimals"""
        assert decimal_out(F(1, 3), 4) == "0.3333"
        assert decimal_out(F(1, 2), 2) == "0.50"
        assert decimal_out(F(0), 12) == "0.000000000000"
        assert decimal_out(F(-3, 2), 1) == "-1.5"
