import logging
import random
from typing import List, Optional, Sequence, Tuple

from .finite_fields import PrimeField, RationalField
from .linear_systems import LinearSystem, matrix_determinant, matrix_rank, named_system, nullspace_basis
from .plane_geometry import (
    CubicWithOrigin,
    PlaneCurve,
    ProjPoint,
    certify_smooth,
    monomial_row,
    rational_points,
)
from .workbench_errors import DegeneratePoint, NotGeneral, SingularFibre, UsageError

logger = logging.getLogger(__name__)

BASE_POINTS: Tuple[Tuple[int, int, int], ...] = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1))
SECTIONS = 6


def _field(p: Optional[int]):
    return RationalField() if p is None else PrimeField(p)


class AnticanonicalBasis:
    """
    The six cubics through the standard frame, i.e. anticanonical sections of the blow-up of
    P^2 in four general points.
    """

    def __init__(self, system: LinearSystem):
        """
        :param system: The solved system of cubics through the four base points.
        """
        if system.dimension != SECTIONS:
            raise UsageError(f"expected {SECTIONS} anticanonical sections, got {system.dimension}")
        self.system: LinearSystem = system
        self.base_points: Tuple[ProjPoint, ...] = tuple(ProjPoint(c, RationalField()) for c in BASE_POINTS)
        self.basis: Tuple[PlaneCurve, ...] = tuple(system.curves())

    def over(self, field) -> List[PlaneCurve]:
        """
        The basis cubics with coefficients in the given field.
        """
        if isinstance(field, RationalField):
            return list(self.basis)
        return [curve.reduce(field.p) for curve in self.basis]

    def is_base_point(self, point: ProjPoint) -> bool:
        return any(point == base.over(point.field) for base in self.base_points)

    def __len__(self) -> int:
        return len(self.basis)


_BASIS: Optional[AnticanonicalBasis] = None


def anticanonical_basis() -> AnticanonicalBasis:
    global _BASIS
    if _BASIS is None:
        _BASIS = AnticanonicalBasis(named_system("anticanonical"))
    return _BASIS


def _as_point(point, field) -> ProjPoint:
    if isinstance(point, str):
        return ProjPoint.parse(point, field)
    if isinstance(point, ProjPoint):
        return point.over(field)
    return ProjPoint(point, field)


class SectionMatrix:
    """
    The 6 x n matrix of basis sections evaluated at n points in normalized coordinates.
    """

    def __init__(self, points: Sequence, p: Optional[int] = None):
        """
        :param points: ProjPoints, coordinate tuples or "x:y:z" strings, none a base point.
        :param p: A prime, or None for exact rationals.
        """
        self.field = _field(p)
        self.p: Optional[int] = p
        basis = anticanonical_basis()
        self.points: List[ProjPoint] = [_as_point(point, self.field) for point in points]
        for point in self.points:
            if basis.is_base_point(point):
                raise DegeneratePoint(f"{point} is a base point of the anticanonical system")
        # Column j is the monomial row of P_j pushed through each basis cubic.
        columns = [monomial_row("P2", self.field, point.coords) for point in self.points]
        self.entries: List[List] = [
            [_inner(self.field, curve.coeffs, column) for column in columns]
            for curve in basis.over(self.field)
        ]

    @property
    def columns(self) -> int:
        return len(self.points)

    def transpose(self) -> List[List]:
        return [list(row) for row in zip(*self.entries)]

    def rank(self) -> int:
        return matrix_rank(self.entries, self.columns, self.field)

    def determinant(self):
        if self.columns != SECTIONS:
            raise UsageError(f"det6 needs exactly {SECTIONS} points, got {self.columns}")
        return matrix_determinant(self.entries, self.field)


def _inner(field, u: Sequence, v: Sequence):
    total = field.element(0)
    for a, b in zip(u, v):
        total = field.add(total, field.mul(a, b))
    return total


def rank_profile(points: Sequence, p: Optional[int] = None) -> int:
    """
    Rank of the section matrix of at most six points.

    :param points: Points avoiding the base points.
    :param p: A prime, or None for the rationals.
    :return: The exact rank; DegeneratePoint for a base point.
    """
    if len(points) > SECTIONS:
        raise UsageError(f"at most {SECTIONS} points, got {len(points)}")
    return SectionMatrix(points, p).rank()


def det6(points: Sequence, p: Optional[int] = None):
    return SectionMatrix(points, p).determinant()


def v6_member(points: Sequence, p: Optional[int] = None) -> bool:
    """
    Whether six points lie on a common member of the anticanonical system (det = 0).
    """
    matrix = SectionMatrix(points, p)
    return matrix.field.is_zero(matrix.determinant())


def fibre_cubic(fixed5: Sequence, p: Optional[int] = None) -> PlaneCurve:
    """
    The cubic through the base points and five further points in general position.

    :param fixed5: Five points avoiding the base points.
    :param p: A prime, or None for the rationals.
    :return: The fibre cubic; NotGeneral when the section matrix has rank below 5.
    """
    if len(fixed5) != 5:
        raise UsageError(f"fibre_cubic needs 5 points, got {len(fixed5)}")
    matrix = SectionMatrix(fixed5, p)
    kernel = nullspace_basis(matrix.transpose(), SECTIONS, matrix.field)
    if len(kernel) != 1:
        raise NotGeneral(f"section matrix has rank {SECTIONS - len(kernel)}, points are not general")
    field = matrix.field
    basis = anticanonical_basis().over(field)
    coeffs = [field.element(0)] * 10
    for weight, curve in zip(kernel[0], basis):
        coeffs = [field.add(c, field.mul(weight, b)) for c, b in zip(coeffs, curve.coeffs)]
    return PlaneCurve("P2", coeffs, field)


def _smooth_fibre(fixed5: Sequence, p: int, diagnostic_limit: int) -> Tuple[PlaneCurve, ProjPoint]:
    curve = fibre_cubic(fixed5, p)
    if not certify_smooth(curve, p, diagnostic_limit=diagnostic_limit):
        raise SingularFibre(f"fibre cubic {curve} is singular over F_{p}")
    return curve, _as_point(fixed5[4], curve.field)


def fibre_group(fixed5: Sequence, p: int, diagnostic_limit: int = 31) -> CubicWithOrigin:
    """
    The smooth fibre cubic with the fifth fixed point as origin.
    """
    curve, origin = _smooth_fibre(fixed5, p, diagnostic_limit)
    return CubicWithOrigin(curve, origin)


def tau_fibre(fixed5: Sequence, Q, p: int, diagnostic_limit: int = 31) -> ProjPoint:
    """
    The fibrewise involution: Q goes to its inverse for the origin fixed5[4].

    :param fixed5: Five general points whose fibre cubic is smooth.
    :param Q: A point on the fibre cubic.
    :param p: The prime.
    :param diagnostic_limit: Largest p for the F_{p^2} smoothness check.
    :return: The image of Q; SingularFibre or group-law errors otherwise.
    """
    group = fibre_group(fixed5, p, diagnostic_limit)
    return group.neg(_as_point(Q, group.curve.field))


def tau_fixed_points(fixed5: Sequence, p: int, diagnostic_limit: int = 31) -> List[ProjPoint]:
    """
    Rational points of the fibre fixed by the involution: the rational 2-torsion.
    """
    group = fibre_group(fixed5, p, diagnostic_limit)
    return [point for point in rational_points(group.curve, p) if group.neg(point) == point]


# ---------- Sampling ----------

def random_point(p: int, rng: random.Random) -> ProjPoint:
    """
    A uniformly random F_p-point of P^2 that is not a base point.
    """
    field = PrimeField(p)
    basis = anticanonical_basis()
    while True:
        coords = [rng.randrange(p) for _ in range(3)]
        if not any(coords):
            continue
        point = ProjPoint(coords, field)
        if not basis.is_base_point(point):
            return point


def sample_general_points(n: int, p: int, rng: random.Random, attempts: int = 20) -> List[ProjPoint]:
    """
    n random points whose section matrix has full rank n, retrying up to the given attempts.
    """
    if not 1 <= n <= SECTIONS:
        raise UsageError(f"n must be between 1 and {SECTIONS}")
    for attempt in range(attempts):
        points = [random_point(p, rng) for _ in range(n)]
        if rank_profile(points, p) == n:
            return points
        logger.debug("sample of %d points over F_%d not general (attempt %d)", n, p, attempt + 1)
    raise NotGeneral(f"no general {n}-tuple over F_{p} in {attempts} attempts")


def sample_smooth_fibre(p: int, rng: random.Random, attempts: int = 50,
                        diagnostic_limit: int = 31) -> List[ProjPoint]:
    """
    Five general points whose fibre cubic is smooth.
    """
    for _ in range(attempts):
        fixed5 = sample_general_points(5, p, rng)
        if certify_smooth(fibre_cubic(fixed5, p), p, diagnostic_limit=diagnostic_limit):
            return fixed5
    raise NotGeneral(f"no smooth fibre over F_{p} in {attempts} attempts")
