"""Randomized property suite.

Instances come from a seeded numpy generator so a run is reproducible from
its seed. Each property is an exact identity; a property that raises counts
as failed.
"""
import logging
import math
from collections import Counter
from fractions import Fraction
from typing import Callable, Collection, Optional

import numpy as np

from ..concave import AffineForm, ConcavePA, canonical_min_form, dual_to_concave, legendre_dual, stability_set
from ..config import settings
from ..errors import TorheightError
from ..exact import ValueGroup
from ..heights import (
    CirclePlace,
    FinitePlace,
    HeightReport,
    PeriodicPL,
    PointPlace,
    RoofInstance,
    SampledNode,
    SampledPlace,
    global_height,
)
from ..monge_ampere import check_boundary_identity, ma_measure
from ..polyhedra import volume
from ..schemas import ConcavePAIn
from ..toric import (
    LatticeFunction,
    degree,
    special_fiber_degree,
    support_function_of_polytope,
    toric_local_height,
    trop_pushforward_measure,
)
from . import CommandContext, CommandOutput, CommandRouter

logger = logging.getLogger(__name__)

router = CommandRouter(tags=("check",))

PROPERTIES = (
    "involution",
    "mass",
    "boundary-identity",
    "nullity",
    "scaling",
    "pushforward-mass",
    "special-fiber-degree",
    "product-formula",
)


def _constant(rng: np.random.Generator, group: ValueGroup) -> Fraction:
    if group.is_divisible:
        return Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
    return group.base * int(rng.integers(-4, 5))


def random_concave(rng: np.random.Generator, n: int, group: ValueGroup = ValueGroup.divisible()) -> ConcavePA:
    """Integral slopes containing 0 and the unit vectors, so Δ_f is a full-dimensional lattice polytope."""
    slopes = [tuple([0] * n)] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    for _ in range(int(rng.integers(0, 4))):
        slopes.append(tuple(int(x) for x in rng.integers(-2, 3, size=n)))
    return canonical_min_form(AffineForm(tuple(Fraction(x) for x in m), _constant(rng, group)) for m in slopes)


def _random_lambdas(rng: np.random.Generator, r: int) -> tuple[Fraction, ...]:
    return (Fraction(0),) + tuple(Fraction(int(x), 2) for x in rng.integers(-3, 4, size=r - 1))


def _random_circle(rng: np.random.Generator, r: int, weight: Fraction) -> CirclePlace:
    """A circle place whose λ(u) is a periodic tent times a fixed λ vector, so its integral is exact."""
    length = Fraction(int(rng.integers(1, 4)))
    peak = Fraction(int(rng.integers(1, 3)))
    profiles = tuple(
        PeriodicPL(length, ((Fraction(0), Fraction(0)), (length / 2, peak * x))) for x in _random_lambdas(rng, r)
    )
    return CirclePlace("tate", weight, length, profiles)


def _random_sampled(rng: np.random.Generator, r: int, weight: Fraction) -> SampledPlace:
    nodes = tuple(
        SampledNode(subweight, tuple(float(x) + float(rng.uniform(-0.5, 0.5)) * (j > 0) for j, x in enumerate(_random_lambdas(rng, r))))
        for subweight in (0.25, 0.75)
    )
    return SampledPlace("inf", weight, nodes)


def random_instance(rng: np.random.Generator, n: int) -> RoofInstance:
    """One finite place, one or two point places, and optionally a circle and a sampled place."""
    exponents = [tuple([0] * n)] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    for _ in range(int(rng.integers(0, 3))):
        m = tuple(int(x) for x in rng.integers(0, 3, size=n))
        if m not in exponents:
            exponents.append(m)
    r = len(exponents)
    orders = (0,) + tuple(int(x) for x in rng.integers(-2, 3, size=r - 1))
    places = [FinitePlace("p", Fraction(1), Fraction(int(rng.integers(1, 3))), orders)]
    for k in range(int(rng.integers(1, 3))):
        places.append(PointPlace(f"w{k}", Fraction(int(rng.integers(1, 4))), _random_lambdas(rng, r)))
    if rng.integers(0, 2):
        places.append(_random_circle(rng, r, Fraction(int(rng.integers(1, 3)))))
    if rng.integers(0, 2):
        places.append(_random_sampled(rng, r, Fraction(int(rng.integers(1, 3)))))
    return RoofInstance(n, tuple(exponents), tuple(places))


def _balanced_shifts(rng: np.random.Generator, instance: RoofInstance) -> dict[str, Fraction]:
    """Per-place constants with zero weighted sum."""
    places = instance.places
    shifts = {p.id: Fraction(int(rng.integers(-3, 4)), 2) for p in places[:-1]}
    last = places[-1]
    shifts[last.id] = -sum((p.weight * shifts[p.id] for p in places[:-1]), Fraction(0)) / last.weight
    return shifts


def same_height(a: HeightReport, b: HeightReport, tolerance: Optional[float] = None) -> bool:
    """Exact equality for exact reports; otherwise relative agreement within ``tolerance``."""
    if a.exact and b.exact:
        return a.exact_total == b.exact_total
    tolerance = settings.TOLERANCE if tolerance is None else tolerance
    return abs(a.total - b.total) <= tolerance * max(1.0, abs(a.total))


def function_properties(
    f: ConcavePA, c: Fraction, group: ValueGroup = ValueGroup.divisible()
) -> dict[str, Callable[[], bool]]:
    """Properties of a single concave function; ``c`` is the scaling shift."""
    n = f.rank
    domain = stability_set(f)
    checks = {
        "involution": lambda: dual_to_concave(legendre_dual(f)) == f,
        "mass": lambda: ma_measure(f).total_mass() == volume(domain),
    }
    if not (domain.is_full_dimensional and domain.is_lattice):
        return checks
    psi = support_function_of_polytope(domain)
    checks.update(
        {
            "boundary-identity": lambda: check_boundary_identity(f).holds,
            "nullity": lambda: toric_local_height(psi, psi.as_concave()) == 0,
            "scaling": lambda: toric_local_height(psi, f.shift(c)) - toric_local_height(psi, f)
            == -math.factorial(n + 1) * c * domain.volume(),
            "pushforward-mass": lambda: trop_pushforward_measure(f).total_mass() == degree(psi),
        }
    )
    phi = LatticeFunction.from_concave(f, group)
    if phi.denominator == 1:
        checks["special-fiber-degree"] = lambda: special_fiber_degree(phi) == degree(psi)
    return checks


def instance_properties(
    instance: RoofInstance, shifts: dict[str, Fraction], tolerance: Optional[float] = None
) -> dict[str, Callable[[], bool]]:
    return {
        "product-formula": lambda: same_height(
            global_height(instance, tolerance), global_height(instance.with_section_change(shifts), tolerance)
        )
    }


def _record(
    tally: dict[str, Counter],
    checks: dict[str, Callable[[], bool]],
    label: str,
    only: Optional[Collection[str]] = None,
):
    for name, check in checks.items():
        if only is not None and name not in only:
            continue
        try:
            ok = check()
        except TorheightError as exc:
            logger.warning("%s raised on %s: %s", name, label, exc.detail)
            ok = False
        if not ok:
            logger.warning("property %s failed on %s", name, label)
        tally[name]["passed" if ok else "failed"] += 1


def run_suite(
    seed: int,
    instances: Optional[int] = None,
    group: ValueGroup = ValueGroup.divisible(),
    extra: Optional[ConcavePA] = None,
    only: Optional[Collection[str]] = None,
) -> dict[str, dict[str, int]]:
    """Pass/fail counts per property over ``instances`` random cases per dimension 1..3.

    ``only`` restricts the evaluated properties; instances are drawn the same way regardless.
    """
    instances = instances or settings.CHECK_INSTANCES
    if only is not None and not set(only) <= set(PROPERTIES):
        raise ValueError(f"unknown properties: {', '.join(sorted(set(only) - set(PROPERTIES)))}")
    rng = np.random.default_rng(seed)
    tally = {name: Counter(passed=0, failed=0) for name in PROPERTIES if only is None or name in only}
    for n in (1, 2, 3):
        for k in range(instances):
            label = f"dimension {n} instance {k}"
            f = random_concave(rng, n, group)
            _record(tally, function_properties(f, _constant(rng, group), group), label, only)
            instance = random_instance(rng, n)
            _record(tally, instance_properties(instance, _balanced_shifts(rng, instance)), label, only)
    if extra is not None:
        _record(tally, function_properties(extra, Fraction(1), group), "input function", only)
    logger.info("check seed %d: %d instances per dimension", seed, instances)
    return {name: dict(counts) for name, counts in tally.items()}


@router.command("check", schema=ConcavePAIn, input_required=False)
def check(ctx: CommandContext) -> CommandOutput:
    """Run the randomized property suite, plus the input function when one is given."""
    extra = ctx.document.to_concave() if ctx.document is not None else None
    results = run_suite(ctx.args.seed, instances=ctx.args.instances, group=ctx.group, extra=extra)
    failed = sorted(name for name, counts in results.items() if counts["failed"])
    payload = {"seed": ctx.args.seed, "properties": results, "passed": not failed}
    failure = f"properties failed: {', '.join(failed)}" if failed else None
    return CommandOutput(payload, failure=failure)
