import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

from .concave import (
    AffineForm,
    ConcaveOnPolytope,
    ConcavePA,
    SupportFunctionData,
    canonical_min_form,
    upper_envelope,
)
from .errors import GeometryError, InputError
from .exact import format_rational, parse_rational
from .heights import (
    CirclePlace,
    FinitePlace,
    HeightReport,
    PeriodicPL,
    PointPlace,
    RoofInstance,
    SampledNode,
    SampledPlace,
)
from .monge_ampere import DiscreteMeasure
from .polyhedra import Cone, Fan, Halfspace, Polyhedron, Polytope, convex_hull


def _rational(value):
    if isinstance(value, float):
        raise ValueError(f"rationals must be given as 'p/q' strings or integers, not {value!r}")
    return parse_rational(value)


Rational = Annotated[Fraction, BeforeValidator(_rational)]
RationalVector = list[Rational]


def _uniform(vectors, what: str) -> int:
    ranks = {len(v) for v in vectors}
    if len(ranks) > 1:
        raise ValueError(f"{what} must have a uniform rank")
    (n,) = ranks or {0}
    if n == 0:
        raise ValueError(f"{what} must be nonempty vectors")
    return n


class TorheightSchema(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="ignore")


class HalfspaceIn(TorheightSchema):
    normal: RationalVector
    offset: Rational


class PolytopeIn(TorheightSchema):
    vertices: Optional[list[RationalVector]] = None
    halfspaces: Optional[list[HalfspaceIn]] = None

    @model_validator(mode="after")
    def check_description(self):
        if self.vertices:
            _uniform(self.vertices, "vertices")
        elif self.halfspaces:
            _uniform([h.normal for h in self.halfspaces], "halfspace normals")
        else:
            raise ValueError("a polytope needs 'vertices' or 'halfspaces'")
        return self

    def to_polytope(self) -> Polytope:
        if self.vertices:
            return convex_hull(self.vertices)
        try:
            result = Polyhedron.from_halfspaces(Halfspace(tuple(h.normal), h.offset) for h in self.halfspaces)
        except GeometryError as exc:
            raise InputError(f"invalid polytope: {exc.detail}") from None
        if not isinstance(result, Polytope):
            raise InputError("halfspaces describe an unbounded polyhedron")
        return result


class AffinePieceIn(TorheightSchema):
    slope: RationalVector
    constant: Rational


class ConcavePAIn(TorheightSchema):
    pieces: list[AffinePieceIn]

    @field_validator("pieces")
    @classmethod
    def check_pieces(cls, v):
        if not v:
            raise ValueError("a concave function needs at least one piece")
        _uniform([p.slope for p in v], "slopes")
        return v

    def to_concave(self) -> ConcavePA:
        return canonical_min_form(AffineForm(tuple(p.slope), p.constant) for p in self.pieces)


class LiftPointIn(TorheightSchema):
    point: RationalVector
    value: Rational


class ConcaveOnPolytopeIn(TorheightSchema):
    lift: list[LiftPointIn]

    @field_validator("lift")
    @classmethod
    def check_lift(cls, v):
        if not v:
            raise ValueError("an envelope needs at least one lifted point")
        _uniform([p.point for p in v], "lifted points")
        return v

    def to_function(self) -> ConcaveOnPolytope:
        return upper_envelope((tuple(p.point), p.value) for p in self.lift)


class DualIn(TorheightSchema):
    """Either side of the duality: ``pieces`` of a min of affine forms or a ``lift``."""

    pieces: Optional[list[AffinePieceIn]] = None
    lift: Optional[list[LiftPointIn]] = None

    @model_validator(mode="after")
    def check_side(self):
        if bool(self.pieces) == bool(self.lift):
            raise ValueError("give exactly one of 'pieces' or 'lift'")
        return self

    def to_concave(self) -> ConcavePA:
        return ConcavePAIn(pieces=self.pieces).to_concave()

    def to_function(self) -> ConcaveOnPolytope:
        return ConcaveOnPolytopeIn(lift=self.lift).to_function()


class SupportFunctionIn(TorheightSchema):
    """A polytope, or the rays of a complete fan with cones as ray indices and one slope per cone."""

    polytope: Optional[PolytopeIn] = None
    rays: Optional[list[list[int]]] = None
    cones: Optional[list[list[int]]] = None
    slopes: Optional[list[RationalVector]] = None

    @model_validator(mode="after")
    def check_form(self):
        if self.polytope is not None:
            return self
        if self.rays is None or self.cones is None or self.slopes is None:
            raise ValueError("a support function needs 'polytope' or 'rays', 'cones' and 'slopes'")
        if len(self.cones) != len(self.slopes):
            raise ValueError("need one slope per cone")
        n = _uniform(self.rays, "rays") if self.rays else len(self.slopes[0])
        if any(len(s) != n for s in self.slopes):
            raise ValueError("slopes must match the rank of the rays")
        for cone in self.cones:
            if any(not 0 <= i < len(self.rays) for i in cone):
                raise ValueError("cone refers to an unknown ray index")
        return self

    def to_support_function(self) -> SupportFunctionData:
        from .toric import support_function_of_polytope

        if self.polytope is not None:
            return support_function_of_polytope(self.polytope.to_polytope())
        n = len(self.slopes[0])
        cones = [Cone.from_rays([self.rays[i] for i in cone], n) for cone in self.cones]
        fan = Fan(cones, n)
        if set(fan.maximal_cones) != set(cones):
            raise InputError("cones must be exactly the maximal cones of the fan")
        if not fan.is_complete:
            raise InputError("fan is not complete")
        fan.validate()
        return SupportFunctionData.from_cones(fan, dict(zip(cones, (tuple(s) for s in self.slopes))))


class LocalHeightIn(TorheightSchema):
    support: SupportFunctionIn
    metric: ConcavePAIn


class AtomIn(TorheightSchema):
    at: RationalVector
    mass: Rational


class MeasureIn(TorheightSchema):
    atoms: list[AtomIn]

    def to_measure(self) -> DiscreteMeasure:
        try:
            return DiscreteMeasure(tuple((tuple(a.at), a.mass) for a in self.atoms))
        except GeometryError as exc:
            raise InputError(exc.detail) from None


class PlaceBase(TorheightSchema):
    id: str
    weight: Rational

    @field_validator("weight")
    @classmethod
    def check_weight(cls, v):
        if v < 0:
            raise ValueError("place weights must be nonnegative")
        return v


class FinitePlaceIn(PlaceBase):
    kind: Literal["finite"]
    height: Rational
    orders: list[int]

    @field_validator("height")
    @classmethod
    def check_height(cls, v):
        if v < 0:
            raise ValueError("heights of finite places must be nonnegative")
        return v

    def to_place(self) -> FinitePlace:
        return FinitePlace(self.id, self.weight, self.height, tuple(self.orders))


class PointPlaceIn(PlaceBase):
    kind: Literal["point"]
    lambdas: RationalVector

    def to_place(self) -> PointPlace:
        return PointPlace(self.id, self.weight, tuple(self.lambdas))


class CirclePlaceIn(PlaceBase):
    kind: Literal["circle"]
    length: Rational
    lambdas: list[list[tuple[Rational, Rational]]]

    @model_validator(mode="after")
    def check_profiles(self):
        if self.length <= 0:
            raise ValueError("circle length must be positive")
        for profile in self.lambdas:
            knots = [u for u, _ in profile]
            if not knots:
                raise ValueError("a periodic profile needs at least one breakpoint")
            if knots[0] < 0 or knots[-1] >= self.length or any(a >= b for a, b in zip(knots, knots[1:])):
                raise ValueError("circle breakpoints must increase strictly within [0, length)")
        return self

    def to_place(self) -> CirclePlace:
        profiles = tuple(PeriodicPL(self.length, tuple(tuple(p) for p in profile)) for profile in self.lambdas)
        return CirclePlace(self.id, self.weight, self.length, profiles)


class SampledNodeIn(TorheightSchema):
    subweight: NonNegativeFloat
    lambdas: list[float]


class SampledPlaceIn(PlaceBase):
    kind: Literal["sampled"]
    nodes: list[SampledNodeIn]

    @field_validator("nodes")
    @classmethod
    def check_subweights(cls, v):
        if v and abs(math.fsum(node.subweight for node in v) - 1.0) > 1e-9:
            raise ValueError("subweights must sum to 1")
        return v

    def to_place(self) -> SampledPlace:
        return SampledPlace(
            self.id,
            self.weight,
            tuple(SampledNode(node.subweight, tuple(node.lambdas)) for node in self.nodes),
        )


PlaceIn = Annotated[
    Union[FinitePlaceIn, PointPlaceIn, CirclePlaceIn, SampledPlaceIn],
    Field(discriminator="kind"),
]


class RoofInstanceIn(TorheightSchema):
    dimension: PositiveInt
    exponents: list[list[int]]
    places: list[PlaceIn]

    @model_validator(mode="after")
    def check_exponents(self):
        if not self.exponents:
            raise ValueError("an instance needs at least one exponent")
        if any(len(m) != self.dimension for m in self.exponents):
            raise ValueError("exponents must have rank equal to the dimension")
        if any(self.exponents[0]):
            raise ValueError("the first exponent must be 0")
        return self

    def to_instance(self) -> RoofInstance:
        try:
            return RoofInstance(
                self.dimension,
                tuple(tuple(m) for m in self.exponents),
                tuple(p.to_place() for p in self.places),
            )
        except GeometryError as exc:
            raise InputError(f"invalid instance: {exc.detail}") from None


class CommandResult(BaseModel):
    command: str
    inputs_digest: str
    payload: dict[str, Any]
    exact: bool
    elapsed_ms: float


# payload builders


def vector_out(vector) -> list[str]:
    return [format_rational(Fraction(x)) for x in vector]


def polytope_payload(polytope: Polytope) -> dict:
    return {
        "dimension": polytope.dimension,
        "vertices": [vector_out(v) for v in polytope.vertices],
        "halfspaces": [
            {"normal": vector_out(h.normal), "offset": format_rational(h.offset)} for h in polytope.halfspaces
        ],
        "equations": [
            {"normal": vector_out(e.normal), "offset": format_rational(e.offset)} for e in polytope.equations
        ],
    }


def concave_payload(f: ConcavePA) -> dict:
    return {
        "pieces": [{"slope": vector_out(p.slope), "constant": format_rational(p.constant)} for p in f.pieces]
    }


def envelope_payload(g: ConcaveOnPolytope) -> dict:
    return {
        "lift": [{"point": vector_out(p), "value": format_rational(value)} for p, value in g.vertices()],
        "domain": polytope_payload(g.domain),
        "cells": [
            {
                "vertices": [vector_out(v) for v in cell.polytope.vertices],
                "slope": vector_out(cell.form.slope),
                "constant": format_rational(cell.form.constant),
            }
            for cell in g.cells
        ],
    }


def measure_payload(measure: DiscreteMeasure) -> dict:
    return {
        "atoms": [{"at": vector_out(location), "mass": format_rational(mass)} for location, mass in measure.atoms],
        "total_mass": format_rational(measure.total_mass()),
    }


def height_payload(report: HeightReport) -> dict:
    def value_out(value):
        return format_rational(value) if isinstance(value, Fraction) else value

    return {
        "factor": report.factor,
        "total": report.total,
        "exact_total": format_rational(report.exact_total) if report.exact else None,
        "places": {
            place_id: {"integral": value_out(r.value), "exact": r.exact} for place_id, r in report.per_place
        },
    }


def decimal_out(value: Fraction, digits: int) -> str:
    with localcontext() as context:
        context.prec = 60
        number = Decimal(value.numerator) / Decimal(value.denominator)
        return format(number.quantize(Decimal(1).scaleb(-digits)), "f")


def dump_json(value: Any, digits: int = 17) -> str:
    """Canonical JSON: sorted keys, floats with ``digits`` significant digits."""
    if isinstance(value, dict):
        items = (f"{dump_json(str(k))}: {dump_json(v, digits)}" for k, v in sorted(value.items()))
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(dump_json(v, digits) for v in value) + "]"
    if isinstance(value, bool) or value is None:
        return {True: "true", False: "false", None: "null"}[value]
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise GeometryError("cannot serialize a non-finite float")
        return format(value, f".{digits}g")
    if isinstance(value, Fraction):
        return dump_json(format_rational(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(value).__name__}")
