from ..concave import dual_to_concave, legendre_dual
from ..config import settings
from ..errors import InputError
from ..exact import format_rational
from ..heights import global_height, tabulate_roof
from ..monge_ampere import ma_measure
from ..polyhedra import volume
from ..schemas import (
    ConcavePAIn,
    DualIn,
    LocalHeightIn,
    PolytopeIn,
    RoofInstanceIn,
    SupportFunctionIn,
    concave_payload,
    decimal_out,
    envelope_payload,
    height_payload,
    measure_payload,
    polytope_payload,
    vector_out,
)
from ..toric import degree, toric_local_height, trop_pushforward_measure
from . import CommandContext, CommandOutput, CommandRouter

router = CommandRouter(tags=("compute",))


@router.command("hull", schema=PolytopeIn)
def hull(ctx: CommandContext) -> CommandOutput:
    """Convex hull with irredundant vertices and facet inequalities."""
    return CommandOutput(polytope_payload(ctx.document.to_polytope()))


@router.command("volume", schema=PolytopeIn)
def volume_command(ctx: CommandContext) -> CommandOutput:
    """Exact volume, ambient or relative to the affine hull."""
    value = volume(ctx.document.to_polytope(), ctx.args.mode)
    return CommandOutput({"value": format_rational(value), "mode": ctx.args.mode})


@router.command("dual", schema=DualIn)
def dual(ctx: CommandContext) -> CommandOutput:
    """Legendre-Fenchel dual in either direction."""
    document = ctx.document
    if document.pieces:
        f = document.to_concave()
        payload = envelope_payload(legendre_dual(f))
        payload["gamma_denominator"] = f.gamma_denominator(ctx.group)
        return CommandOutput(payload)
    return CommandOutput(concave_payload(dual_to_concave(document.to_function())))


@router.command("ma", schema=ConcavePAIn)
def monge_ampere(ctx: CommandContext) -> CommandOutput:
    """Monge-Ampère measure of a concave function."""
    return CommandOutput(measure_payload(ma_measure(ctx.document.to_concave())))


@router.command("degree", schema=SupportFunctionIn)
def degree_command(ctx: CommandContext) -> CommandOutput:
    """Degree of the toric variety polarized by a concave support function."""
    return CommandOutput({"value": format_rational(degree(ctx.document.to_support_function()))})


@router.command("local-height", schema=LocalHeightIn)
def local_height(ctx: CommandContext) -> CommandOutput:
    """Toric local height of a metric against its support function."""
    psi = ctx.document.support.to_support_function()
    value = toric_local_height(psi, ctx.document.metric.to_concave())
    return CommandOutput({"value": format_rational(value), "exact": True, "dimension": psi.rank})


@router.command("pushforward", schema=ConcavePAIn)
def pushforward(ctx: CommandContext) -> CommandOutput:
    """Tropical push-forward of the Monge-Ampère measure, scaled by n!."""
    return CommandOutput(measure_payload(trop_pushforward_measure(ctx.document.to_concave())))


@router.command("global-height", schema=RoofInstanceIn)
def global_height_command(ctx: CommandContext) -> CommandOutput:
    """Global height assembled from per-place roof integrals."""
    report = global_height(ctx.document.to_instance(), tolerance=ctx.tolerance)
    return CommandOutput(height_payload(report), exact=report.exact)


@router.command("emit-roof", schema=RoofInstanceIn)
def emit_roof(ctx: CommandContext) -> CommandOutput:
    """Tabulate the roof of one place on the refined lattice grid of Δ."""
    if ctx.args.place is None:
        raise InputError("emit-roof needs --place")
    if ctx.args.resolution < 1:
        raise InputError("--resolution must be a positive integer")
    instance = ctx.document.to_instance()
    samples = tabulate_roof(instance, ctx.args.place, ctx.args.resolution)
    header = [f"m{i + 1}" for i in range(instance.dimension)] + ["theta"]
    digits = settings.CSV_DIGITS
    rows = [[decimal_out(x, digits) for x in m] + [decimal_out(value, digits)] for m, value in samples]
    payload = {
        "place": ctx.args.place,
        "resolution": ctx.args.resolution,
        "rows": [{"m": vector_out(m), "theta": format_rational(value)} for m, value in samples],
    }
    return CommandOutput(payload, table=(header, rows))
