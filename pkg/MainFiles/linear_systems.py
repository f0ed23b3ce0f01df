import logging
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Tuple

import sympy
from sympy.polys.domains import GF, QQ
from sympy.polys.matrices import DomainMatrix

from .finite_fields import PrimeField, RationalField
from .plane_geometry import (
    AMBIENT_MONOMIALS,
    PlaneCurve,
    ProjPoint,
    line_direction,
    monomial_row,
    partial_row,
)
from .workbench_errors import (
    BadPrime,
    BadReduction,
    InconsistentConditions,
    InvalidCondition,
    UsageError,
)

logger = logging.getLogger(__name__)

QQ_FIELD = RationalField()
DEFAULT_BAD_PRIMES: FrozenSet[int] = frozenset({2, 3, 5})


# ---------- Exact linear algebra ----------

def _domain(field):
    return QQ if isinstance(field, RationalField) else GF(field.p)


def _to_domain_matrix(rows: Sequence[Sequence], ncols: int, field) -> DomainMatrix:
    entries = []
    for row in rows:
        for value in row:
            if isinstance(value, Fraction):
                entries.append(sympy.Rational(value.numerator, value.denominator))
            else:
                entries.append(sympy.Integer(int(value)))
    matrix = sympy.Matrix(len(rows), ncols, entries)
    return DomainMatrix.from_Matrix(matrix).convert_to(_domain(field))


def _from_sympy(value, field):
    if isinstance(field, RationalField):
        value = sympy.Rational(value)
        return Fraction(int(value.p), int(value.q))
    return int(value) % field.p


def _rref(rows: Sequence[Sequence], ncols: int, field) -> Tuple[List[List], Tuple[int, ...]]:
    if not rows:
        return [], ()
    reduced, pivots = _to_domain_matrix(rows, ncols, field).rref()
    dense = reduced.to_Matrix()
    return [[_from_sympy(dense[i, j], field) for j in range(ncols)] for i in range(len(pivots))], tuple(pivots)


def matrix_rank(rows: Sequence[Sequence], ncols: int, field) -> int:
    """
    Exact rank over the rationals or F_p.
    """
    return len(_rref(rows, ncols, field)[1])


def matrix_determinant(rows: Sequence[Sequence], field):
    """
    Exact determinant of a square matrix over the rationals or F_p.
    """
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise UsageError("determinant of a non-square matrix")
    if n == 0:
        return field.element(1)
    matrix = _to_domain_matrix(rows, n, field)
    return _from_sympy(matrix.domain.to_sympy(matrix.det()), field)


def echelon_form(rows: Sequence[Sequence], ncols: int, field) -> List[Tuple]:
    """
    The nonzero rows of the reduced row echelon form (pivot entries 1).
    """
    return [tuple(row) for row in _rref(rows, ncols, field)[0]]


def nullspace_basis(rows: Sequence[Sequence], ncols: int, field) -> List[Tuple]:
    """
    A basis of the right kernel, in canonical echelon form.
    """
    reduced, pivots = _rref(rows, ncols, field)
    zero, one = field.element(0), field.element(1)
    vectors = []
    for free in (c for c in range(ncols) if c not in pivots):
        vector = [zero] * ncols
        vector[free] = one
        for i, pivot in enumerate(pivots):
            vector[pivot] = field.neg(reduced[i][free])
        vectors.append(vector)
    return echelon_form(vectors, ncols, field)


# ---------- Lines and conditions ----------

class Line:
    """
    A line aX + bY + cZ = 0 in P^2 with rational coefficients.
    """

    def __init__(self, a, b, c):
        self.covector: Tuple[Fraction, ...] = tuple(Fraction(x) for x in (a, b, c))
        if not any(self.covector):
            raise InvalidCondition("the zero covector is not a line")

    ambient = "P2"

    def contains(self, point: ProjPoint) -> bool:
        return sum(a * x for a, x in zip(self.covector, point.coords)) == 0

    def __eq__(self, other) -> bool:
        return isinstance(other, Line) and ProjPoint(self.covector, QQ_FIELD) == ProjPoint(other.covector, QQ_FIELD)

    def __hash__(self) -> int:
        return hash(ProjPoint(self.covector, QQ_FIELD))

    def __str__(self) -> str:
        return ":".join(str(a) for a in self.covector)


class RulingLine:
    """
    A ruling of P^1 x P^1: {u} x P^1 (factor 0) or P^1 x {v} (factor 1).
    """

    def __init__(self, factor: int, value: Sequence):
        """
        :param factor: Which factor is held fixed, 0 or 1.
        :param value: Homogeneous coordinates of the fixed value.
        """
        if factor not in (0, 1):
            raise InvalidCondition("ruling factor must be 0 or 1")
        self.factor: int = factor
        self.value: ProjPoint = ProjPoint(value, QQ_FIELD, (2,))

    ambient = "P1xP1"

    def contains(self, point: ProjPoint) -> bool:
        return ProjPoint(point.block(self.factor), QQ_FIELD, (2,)) == self.value

    def __eq__(self, other) -> bool:
        return isinstance(other, RulingLine) and (self.factor, self.value) == (other.factor, other.value)

    def __hash__(self) -> int:
        return hash((self.factor, self.value))

    def __str__(self) -> str:
        return f"{'uv'[self.factor]}={self.value}"


class Condition:
    """
    An incidence condition on curves; each one contributes linear rows in the curve coefficients.
    """

    kind: str = ""

    def __init__(self, point: ProjPoint, line=None):
        if not isinstance(point.field, RationalField):
            point = ProjPoint(point.coords, QQ_FIELD, point.blocks)
        self.point: ProjPoint = point
        self.line = line
        if line is not None:
            if line.ambient != point.ambient:
                raise InvalidCondition(f"line {line} and point {point} live in different ambients")
            if not line.contains(point):
                raise InvalidCondition(f"point {point} is not on the line {line}")

    @property
    def ambient(self) -> str:
        return self.point.ambient

    def rows(self) -> List[List[Fraction]]:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and (self.point, self.line) == (other.point, other.line)

    def __hash__(self) -> int:
        return hash((self.kind, self.point, self.line))

    def __str__(self) -> str:
        if self.line is None:
            return f"{self.kind} {self.point}"
        return f"{self.kind} {self.line} @ {self.point}"


class PassThrough(Condition):
    """F(P) = 0."""

    kind = "pass"

    def __init__(self, point: ProjPoint):
        super().__init__(point)

    def rows(self) -> List[List[Fraction]]:
        return [monomial_row(self.ambient, QQ_FIELD, self.point.coords)]


class TangentAt(Condition):
    """
    F(P) = 0 and the tangent line of F at P is the given line.
    """

    kind = "tangent"

    def __init__(self, line, point: ProjPoint):
        super().__init__(point, line)

    def rows(self) -> List[List[Fraction]]:
        coords = self.point.coords
        rows = [monomial_row(self.ambient, QQ_FIELD, coords)]
        if self.ambient == "P2":
            gradient_rows = [partial_row("P2", QQ_FIELD, coords, i) for i in range(3)]
            covector = self.line.covector
            k = next(i for i, a in enumerate(covector) if a != 0)
            for i in range(3):
                if i != k:
                    # F_i(P) L_k - F_k(P) L_i = 0
                    rows.append([covector[k] * gi - covector[i] * gk
                                 for gi, gk in zip(gradient_rows[i], gradient_rows[k])])
            return rows
        # Tangent to a ruling: the derivative along the ruling vanishes.
        other = 1 - self.line.factor
        block = self.point.block(other)
        direction = (1, 0) if block[1] != 0 else (0, 1)
        first = 2 * other
        partials = [partial_row("P1xP1", QQ_FIELD, coords, first + j) for j in range(2)]
        rows.append([direction[0] * a + direction[1] * b for a, b in zip(*partials)])
        return rows


class InflectionAt(Condition):
    """
    The line meets the cubic at P with multiplicity at least three.
    """

    kind = "flex"

    def __init__(self, line, point: ProjPoint):
        if point.ambient != "P2":
            raise InvalidCondition("inflection conditions are only supported on P^2")
        super().__init__(point, line)

    def rows(self) -> List[List[Fraction]]:
        P = self.point.coords
        D = line_direction(QQ_FIELD, self.line.covector, P)
        rows: List[List[Fraction]] = [[], [], []]
        for exps in AMBIENT_MONOMIALS["P2"]:
            # coefficients in s of prod (P_i + s D_i)^e_i, up to s^2
            poly = [Fraction(1)]
            for p_i, d_i, e in zip(P, D, exps):
                for _ in range(e):
                    poly = [
                        (poly[j] if j < len(poly) else 0) * p_i + (poly[j - 1] * d_i if j >= 1 else 0)
                        for j in range(len(poly) + 1)
                    ]
            for j in range(3):
                rows[j].append(poly[j] if j < len(poly) else Fraction(0))
        return rows


# ---------- Linear systems ----------

def _denominator_primes(vectors: Iterable[Sequence[Fraction]]) -> FrozenSet[int]:
    primes = set()
    for vector in vectors:
        for value in vector:
            if value.denominator != 1:
                primes.update(sympy.primefactors(value.denominator))
    return frozenset(primes)


class LinearSystem:
    """
    The space of curves satisfying a list of conditions, held as an exact canonical basis.
    """

    def __init__(self, ambient: str, basis: Sequence[Sequence[Fraction]], conditions: Sequence[Condition],
                 bad_primes: FrozenSet[int]):
        """
        :param ambient: "P2" or "P1xP1".
        :param basis: Canonical echelon basis of coefficient vectors.
        :param conditions: The defining conditions.
        :param bad_primes: Primes where reduction is refused.
        """
        self.ambient: str = ambient
        self.basis: Tuple[Tuple[Fraction, ...], ...] = tuple(tuple(Fraction(x) for x in v) for v in basis)
        self.conditions: Tuple[Condition, ...] = tuple(conditions)
        self.bad_primes: FrozenSet[int] = frozenset(bad_primes)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def coefficient_dimension(self) -> int:
        return len(AMBIENT_MONOMIALS[self.ambient])

    def condition_matrix(self) -> List[List[Fraction]]:
        return [row for condition in self.conditions for row in condition.rows()]

    def curves(self) -> List[PlaneCurve]:
        return [PlaneCurve(self.ambient, vector, QQ_FIELD) for vector in self.basis]

    def __str__(self) -> str:
        lines = [f"{self.ambient} linear system of dimension {self.dimension}"]
        for vector in self.basis:
            lines.append("[" + ", ".join(str(x) for x in vector) + "]")
        return "\n".join(lines)


def solve_conditions(ambient: str, conditions: Sequence[Condition],
                     policy_bad_primes: FrozenSet[int] = DEFAULT_BAD_PRIMES) -> LinearSystem:
    """
    Solve the incidence conditions exactly.

    :param ambient: "P2" or "P1xP1".
    :param conditions: PassThrough, TangentAt and InflectionAt conditions.
    :param policy_bad_primes: Primes always refused on reduction.
    :return: The LinearSystem with a canonical echelon basis; InconsistentConditions if it is zero.
    """
    if ambient not in AMBIENT_MONOMIALS:
        raise UsageError(f"unknown ambient '{ambient}'")
    for condition in conditions:
        if condition.ambient != ambient:
            raise InvalidCondition(f"condition '{condition}' is not on {ambient}")
    ncols = len(AMBIENT_MONOMIALS[ambient])
    rows = [row for condition in conditions for row in condition.rows()]
    basis = nullspace_basis(rows, ncols, QQ_FIELD)
    if not basis:
        raise InconsistentConditions("only the zero curve satisfies the conditions")
    bad = frozenset(policy_bad_primes) | _denominator_primes(basis) | _denominator_primes(rows)
    logger.debug("solved %d conditions on %s: dimension %d", len(conditions), ambient, len(basis))
    return LinearSystem(ambient, basis, conditions, bad)


def same_subspace(system: LinearSystem, vectors: Sequence[Sequence]) -> bool:
    """
    Whether the given vectors span exactly the system's space over the rationals.
    """
    ncols = system.coefficient_dimension
    vectors = [[Fraction(x) for x in v] for v in vectors]
    if any(len(v) != ncols for v in vectors):
        raise UsageError(f"{system.ambient} coefficient vectors have length {ncols}")
    own = matrix_rank(system.basis, ncols, QQ_FIELD)
    theirs = matrix_rank(vectors, ncols, QQ_FIELD)
    joint = matrix_rank(list(system.basis) + vectors, ncols, QQ_FIELD)
    return own == theirs == joint


def slice_system(system: LinearSystem, extra: Sequence[Condition]) -> LinearSystem:
    """
    The subsystem that also satisfies the extra conditions.
    """
    return solve_conditions(system.ambient, list(system.conditions) + list(extra),
                            system.bad_primes - _denominator_primes(system.basis))


def reduce_mod_p(system: LinearSystem, p: int) -> List[PlaneCurve]:
    """
    Specialise the canonical basis to F_p.

    :param system: The rational system.
    :param p: A prime outside the system's bad primes.
    :return: Basis curves over F_p; BadPrime when the prime is refused or the dimension drops.
    """
    field = PrimeField(p)
    if p in system.bad_primes:
        raise BadPrime(f"{p} is a bad prime for this linear system")
    ncols = system.coefficient_dimension
    try:
        reduced = [[field.element(x) for x in vector] for vector in system.basis]
        conditions = [[field.element(x) for x in row] for row in system.condition_matrix()]
    except BadReduction as error:
        raise BadPrime(str(error))
    if matrix_rank(reduced, ncols, field) != system.dimension:
        raise BadPrime(f"basis loses rank mod {p}")
    rational_rank = ncols - system.dimension
    if matrix_rank(conditions, ncols, field) != rational_rank:
        raise BadPrime(f"condition matrix changes rank mod {p}")
    return [PlaneCurve(system.ambient, vector, field) for vector in reduced]


# ---------- Condition sets of the built-in families ----------

def plane_point(x, y, z) -> ProjPoint:
    return ProjPoint((x, y, z), QQ_FIELD)


def pair_point(u, v) -> ProjPoint:
    """
    The point (u, v) of P^1 x P^1; a value u means (u:1) and "inf" means (1:0).
    """
    def block(value) -> Tuple:
        return (1, 0) if value == "inf" else (Fraction(value), 1)

    return ProjPoint(block(u) + block(v), QQ_FIELD, (2, 2))


def vertical(u) -> RulingLine:
    """{u} x P^1."""
    return RulingLine(0, (1, 0) if u == "inf" else (u, 1))


def horizontal(v) -> RulingLine:
    """P^1 x {v}."""
    return RulingLine(1, (1, 0) if v == "inf" else (v, 1))


def level2_cubic_conditions() -> List[Condition]:
    return [
        PassThrough(plane_point(0, 0, 1)),
        PassThrough(plane_point(0, 1, 0)),
        PassThrough(plane_point(1, 0, 0)),
        PassThrough(plane_point(1, 1, 1)),
        TangentAt(Line(0, 1, 0), plane_point(0, 0, 1)),
        TangentAt(Line(0, 0, 1), plane_point(0, 1, 0)),
    ]


def level3_cubic_conditions() -> List[Condition]:
    return [
        TangentAt(Line(0, 0, 1), plane_point(0, 1, 0)),
        TangentAt(Line(1, 0, 0), plane_point(0, 0, 1)),
        TangentAt(Line(0, 1, 0), plane_point(1, 0, 0)),
        PassThrough(plane_point(1, 1, 1)),
    ]


def level4_cubic_conditions() -> List[Condition]:
    return [
        PassThrough(plane_point(0, 1, 0)),
        PassThrough(plane_point(0, 0, 1)),
        PassThrough(plane_point(1, 1, 1)),
        PassThrough(plane_point(1, 0, 1)),
        InflectionAt(Line(0, 0, 1), plane_point(0, 1, 0)),
        TangentAt(Line(1, 0, 0), plane_point(0, 0, 1)),
        TangentAt(Line(0, 1, 0), plane_point(1, 0, 1)),
    ]


def level5_cubic_conditions() -> List[Condition]:
    # X+Y+Z=0 touches at x=(0:1:-1) and Y=0 at q=(1:0:-1): the line sections 2x+q and 2q+p.
    return [
        PassThrough(plane_point(0, 1, 0)),
        PassThrough(plane_point(0, 1, -1)),
        PassThrough(plane_point(1, 0, -1)),
        PassThrough(plane_point(0, 0, 1)),
        InflectionAt(Line(0, 0, 1), plane_point(0, 1, 0)),
        TangentAt(Line(1, 1, 1), plane_point(0, 1, -1)),
        TangentAt(Line(0, 1, 0), plane_point(1, 0, -1)),
    ]


def level2_22_conditions() -> List[Condition]:
    return [
        PassThrough(pair_point(0, 0)),
        PassThrough(pair_point(1, 1)),
        PassThrough(pair_point("inf", "inf")),
        TangentAt(vertical(0), pair_point(0, 0)),
    ]


def level3_22_conditions() -> List[Condition]:
    return [
        TangentAt(vertical(0), pair_point(0, 0)),
        TangentAt(horizontal(1), pair_point(1, 1)),
        PassThrough(pair_point(1, 0)),
        PassThrough(pair_point("inf", "inf")),
    ]


def level4_22_conditions() -> List[Condition]:
    return [
        TangentAt(vertical(0), pair_point(0, 0)),
        TangentAt(vertical(1), pair_point(1, 1)),
        PassThrough(pair_point("inf", "inf")),
    ]


def level5_22_conditions() -> List[Condition]:
    return [
        TangentAt(horizontal(0), pair_point(1, 0)),
        TangentAt(vertical(0), pair_point(0, 1)),
        PassThrough(pair_point("inf", 1)),
        PassThrough(pair_point("inf", "inf")),
        PassThrough(pair_point(1, "inf")),
    ]


def anticanonical_conditions() -> List[Condition]:
    return [PassThrough(plane_point(*coords)) for coords in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))]


CONDITION_SETS: Dict[str, Tuple[str, Callable[[], List[Condition]]]] = {
    "level2_cubic": ("P2", level2_cubic_conditions),
    "level3_cubic": ("P2", level3_cubic_conditions),
    "level4_cubic": ("P2", level4_cubic_conditions),
    "level5_cubic": ("P2", level5_cubic_conditions),
    "level2_22": ("P1xP1", level2_22_conditions),
    "level3_22": ("P1xP1", level3_22_conditions),
    "level4_22": ("P1xP1", level4_22_conditions),
    "level5_22": ("P1xP1", level5_22_conditions),
    "anticanonical": ("P2", anticanonical_conditions),
}

_SYSTEM_CACHE: Dict[str, LinearSystem] = {}


def named_system(name: str) -> LinearSystem:
    """
    Solve (once) one of the built-in condition sets.
    """
    if name not in CONDITION_SETS:
        raise UsageError(f"unknown linear system '{name}', choose from {', '.join(CONDITION_SETS)}")
    if name not in _SYSTEM_CACHE:
        ambient, builder = CONDITION_SETS[name]
        _SYSTEM_CACHE[name] = solve_conditions(ambient, builder())
    return _SYSTEM_CACHE[name]


# ---------- Condition text ----------

def _parse_line(text: str, ambient: str):
    text = text.strip()
    if ambient == "P2":
        try:
            return Line(*[Fraction(x) for x in text.split(":")])
        except (TypeError, ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse line '{text}'")
    if len(text) < 2 or text[0] not in "uv" or text[1] != "=":
        raise UsageError(f"ruling lines are written u=a:b or v=a:b, got '{text}'")
    try:
        value = [Fraction(x) for x in text[2:].split(":")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse ruling '{text}'")
    if len(value) != 2:
        raise UsageError(f"cannot parse ruling '{text}'")
    return RulingLine("uv".index(text[0]), value)


def parse_conditions(text: str, ambient: str) -> List[Condition]:
    """
    Parse "pass P; tangent L @ P; flex L @ P" (semicolon separated).
    """
    conditions: List[Condition] = []
    for item in (part.strip() for part in text.split(";")):
        if not item:
            continue
        kind, _, rest = item.partition(" ")
        if kind == "pass":
            conditions.append(PassThrough(ProjPoint.parse(rest, QQ_FIELD, ambient)))
        elif kind in ("tangent", "flex"):
            line_text, at, point_text = rest.partition("@")
            if not at:
                raise UsageError(f"'{item}' needs 'LINE @ POINT'")
            line = _parse_line(line_text, ambient)
            point = ProjPoint.parse(point_text.strip(), QQ_FIELD, ambient)
            conditions.append(TangentAt(line, point) if kind == "tangent" else InflectionAt(line, point))
        else:
            raise UsageError(f"unknown condition kind '{kind}'")
    return conditions
