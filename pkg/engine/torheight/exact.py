"""Exact rational and integer linear algebra.

Scalars are ``fractions.Fraction``; vectors are tuples of them. Heavy lifting
(row reduction, determinants, Smith normal form) is delegated to sympy's
``DomainMatrix`` over ``QQ`` and ``ZZ``.
"""
import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors, smith_normal_decomp

from .errors import GeometryError, InputError

logger = logging.getLogger(__name__)

QScalar = Fraction
QVector = tuple[Fraction, ...]
LatticeVector = tuple[int, ...]

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(value: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or an integer. Floats are rejected."""
    if isinstance(value, bool):
        raise InputError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL.match(value)
        if match:
            numerator, denominator = match.groups()
            if denominator is not None and int(denominator) == 0:
                raise InputError(f"zero denominator in {value!r}")
            return Fraction(int(numerator), int(denominator or 1))
    raise InputError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def qvector(values: Iterable) -> QVector:
    return tuple(parse_rational(v) if not isinstance(v, Fraction) else v for v in values)


def pairing(m: Sequence, u: Sequence) -> Fraction:
    if len(m) != len(u):
        raise GeometryError(f"rank mismatch: {len(m)} != {len(u)}")
    return sum((Fraction(a) * b for a, b in zip(m, u)), Fraction(0))


def add(a: Sequence, b: Sequence) -> QVector:
    return tuple(Fraction(x) + y for x, y in zip(a, b))


def sub(a: Sequence, b: Sequence) -> QVector:
    return tuple(Fraction(x) - y for x, y in zip(a, b))


def scale(c, a: Sequence) -> QVector:
    return tuple(Fraction(c) * x for x in a)


def zero(n: int) -> QVector:
    return (Fraction(0),) * n


def is_integral(vector: Sequence) -> bool:
    return all(Fraction(x).denominator == 1 for x in vector)


def lcm_of_denominators(values: Iterable) -> int:
    return math.lcm(1, *(Fraction(v).denominator for v in values))


def _domain(rows: Sequence[Sequence], ncols: int, domain=QQ) -> DomainMatrix:
    if domain is ZZ:
        data = [[ZZ(int(x)) for x in row] for row in rows]
    else:
        data = [[QQ(Fraction(x).numerator, Fraction(x).denominator) for x in row] for row in rows]
    return DomainMatrix(data, (len(rows), ncols), domain)


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[QVector], tuple[int, ...]]:
    """Reduced row echelon form; returns the nonzero rows and pivot columns."""
    if not rows:
        return [], ()
    reduced, pivots = _domain(rows, ncols).rref()
    out = [tuple(_to_fraction(x) for x in row) for row in reduced.to_list()[: len(pivots)]]
    return out, tuple(pivots)


def rank(rows: Sequence[Sequence], ncols: int) -> int:
    if not rows:
        return 0
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[QVector]:
    """Basis of ``{x : <row, x> = 0 for every row}``."""
    reduced, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def determinant(rows: Sequence[Sequence]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    return _to_fraction(QQ.convert(_domain(rows, n).det()))


def solve(rows: Sequence[Sequence], rhs: Sequence, ncols: int) -> Optional[QVector]:
    """One solution of ``A x = rhs`` or None when the system is inconsistent."""
    augmented = [tuple(row) + (b,) for row, b in zip(rows, rhs)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(reduced, pivots):
        x[p] = row[ncols]
    return tuple(x)


def project_out(vector: Sequence, basis: Sequence[Sequence]) -> QVector:
    """Orthogonal projection of ``vector`` onto the complement of ``span(basis)``."""
    if not basis:
        return tuple(Fraction(x) for x in vector)
    gram = [[pairing(a, b) for b in basis] for a in basis]
    coefficients = solve(gram, [pairing(a, vector) for a in basis], len(basis))
    result = list(Fraction(x) for x in vector)
    for c, b in zip(coefficients, basis):
        for i, x in enumerate(b):
            result[i] -= c * x
    return tuple(result)


def primitive_vector(vector: Sequence[int]) -> LatticeVector:
    """Divide an integral vector by the gcd of its entries."""
    ints = [int(x) for x in vector]
    g = math.gcd(*ints)
    if g == 0:
        raise GeometryError("zero has no primitive representative")
    return tuple(x // g for x in ints)


def primitive_direction(vector: Sequence) -> LatticeVector:
    """Primitive lattice vector on the ray through a rational vector."""
    d = lcm_of_denominators(vector)
    return primitive_vector([Fraction(x) * d for x in vector])


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[LatticeVector]:
    """Lattice basis of ``{x in Z^n : A x = 0}`` via Smith normal form."""
    if not rows or all(int(x) == 0 for row in rows for x in row):
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    smith, _, right = smith_normal_decomp(_domain(rows, ncols, ZZ))
    diagonal = smith.to_list()
    r = sum(1 for i in range(min(len(rows), ncols)) if diagonal[i][i] != 0)
    columns = right.to_list()
    return [tuple(int(columns[i][j]) for i in range(ncols)) for j in range(r, ncols)]


def orthogonal_lattice(vectors: Sequence[Sequence], ncols: int) -> list[LatticeVector]:
    """Basis of ``M ∩ span(vectors)^⊥``."""
    rows = [primitive_direction(v) for v in vectors if any(Fraction(x) != 0 for x in v)]
    return integer_kernel(rows, ncols)


def saturated_basis(vectors: Sequence[Sequence], ncols: int) -> list[LatticeVector]:
    """Basis of ``Z^n ∩ span(vectors)``."""
    vectors = [v for v in vectors if any(Fraction(x) != 0 for x in v)]
    if not vectors:
        return []
    if rank(vectors, ncols) == ncols:
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    complement = [primitive_direction(v) for v in nullspace(vectors, ncols)]
    return integer_kernel(complement, ncols)


def lattice_index(
    generators: Sequence[Sequence], basis: Optional[Sequence[Sequence]] = None
) -> Union[int, float]:
    """Index ``[L : span_Z(generators)]``; ``math.inf`` if the span is too small.

    ``L`` is ``Z^n`` unless a lattice ``basis`` is given, in which case the
    generators are first written in that basis.
    """
    if basis is not None:
        basis = [tuple(b) for b in basis]
        rows = []
        for g in generators:
            coordinates = solve(list(zip(*basis)), g, len(basis))
            if coordinates is None or not is_integral(coordinates):
                raise GeometryError("generator does not lie in the lattice")
            rows.append(tuple(int(c) for c in coordinates))
        n = len(basis)
    else:
        rows = [tuple(g) for g in generators]
        if not rows:
            return math.inf
        n = len(rows[0])
        if not all(is_integral(g) for g in rows):
            raise GeometryError("generators must be integral")
    if n == 0:
        return 1
    if not rows or rank(rows, n) < n:
        return math.inf
    factors = invariant_factors(_domain(rows, n, ZZ))
    return math.prod(abs(int(f)) for f in factors if f != 0)


@dataclass(frozen=True)
class ValueGroup:
    """Value group Γ: either divisible (ℚ) or discrete ``base·ℤ``."""

    base: Optional[Fraction] = None

    def __post_init__(self):
        if self.base is not None and self.base <= 0:
            raise GeometryError("a discrete value group needs a positive generator")

    @classmethod
    def divisible(cls) -> "ValueGroup":
        return cls(None)

    @classmethod
    def discrete(cls, base) -> "ValueGroup":
        return cls(Fraction(base))

    @classmethod
    def parse(cls, text: str) -> "ValueGroup":
        text = text.strip()
        if text == "divisible":
            return cls.divisible()
        if text.startswith("discrete:"):
            return cls.discrete(parse_rational(text[len("discrete:"):]))
        raise InputError(f"unknown value group {text!r}; use 'divisible' or 'discrete:P/Q'")

    @property
    def is_divisible(self) -> bool:
        return self.base is None

    def contains(self, value: Fraction) -> bool:
        if self.base is None:
            return True
        return (Fraction(value) / self.base).denominator == 1

    def denominator(self, value: Fraction) -> int:
        """Smallest ``e >= 1`` with ``e * value`` in Γ."""
        if self.base is None:
            return 1
        return (Fraction(value) / self.base).denominator

    def __str__(self) -> str:
        return "divisible" if self.base is None else f"discrete:{format_rational(self.base)}"
