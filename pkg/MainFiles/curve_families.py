import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .finite_fields import PrimeField
from .linear_systems import LinearSystem, named_system, reduce_mod_p
from .plane_geometry import (
    AMBIENT_BLOCKS,
    PlaneCurve,
    ProjPoint,
    linear_system_scan,
    projective_points,
    weierstrass_curve,
    weierstrass_trace_row,
)
from .power_series import NEWFORM_REGISTRY, NewformSpec
from .workbench_errors import BadPrime, NotPrime, UsageError

logger = logging.getLogger(__name__)

Predicate = Callable[[np.ndarray, int], np.ndarray]


def _bidegree_index(a: int, b: int) -> int:
    """Column of U^a S^(2-a) V^b T^(2-b) in the (2,2) monomial order."""
    return (2 - a) * 3 + (2 - b)


def _residual_on_zero_ruling(coeffs: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Residual point (u0:u1) of each curve on P^1 x {0}, given that (0,0) is on it.
    The restriction is U (alpha U + beta S), so the residual root is (-beta : alpha).
    """
    alpha = coeffs[:, _bidegree_index(2, 0)]
    beta = coeffs[:, _bidegree_index(1, 0)]
    return (-beta) % p, alpha % p


def level4_22_predicate(coeffs: np.ndarray, p: int) -> np.ndarray:
    """
    Residual points on P^1 x {0} and P^1 x {1} have the same u-coordinate.
    """
    u0, u1 = _residual_on_zero_ruling(coeffs, p)
    # Restriction to P^1 x {1} is (U - S)(A U - C S) with A, C the U^2 and S^2 coefficients.
    A = sum(coeffs[:, _bidegree_index(2, b)] for b in range(3)) % p
    C = sum(coeffs[:, _bidegree_index(0, b)] for b in range(3)) % p
    defined = ((u0 != 0) | (u1 != 0)) & ((A != 0) | (C != 0))
    return defined & ((u0 * A - u1 * C) % p == 0)


def level2_22_predicate(coeffs: np.ndarray, p: int) -> np.ndarray:
    """
    The ruling {u} x P^1 through the residual point (u, 0) is tangent there.
    """
    u0, u1 = _residual_on_zero_ruling(coeffs, p)
    # d/dV at V = 0, T = 1 keeps the b = 1 monomials.
    derivative = np.zeros(coeffs.shape[0], dtype=np.int64)
    for a in range(3):
        term = coeffs[:, _bidegree_index(a, 1)] % p
        for _ in range(a):
            term = term * u0 % p
        for _ in range(2 - a):
            term = term * u1 % p
        derivative = (derivative + term) % p
    defined = (u0 != 0) | (u1 != 0)
    return defined & (derivative == 0)


@dataclass(frozen=True)
class FitFixture:
    """
    The pinned fit for a family: basis names, fit primes and the validation range.
    """

    basis: Tuple[str, ...]
    fit_primes: Tuple[int, ...]
    validate_max: int


@dataclass
class FibreSet:
    """
    The fibres of a family over F_p in scan order.
    """

    params: List[str]
    coeffs: Optional[np.ndarray] = None
    weierstrass: Optional[np.ndarray] = None
    rows: Optional[np.ndarray] = None


class Family:
    """
    A family of genus-one curves over a parameter space, tied to a newform.
    """

    def __init__(self, family_id: str, ambient: str, newform_label: str, description: str,
                 system_name: Optional[str] = None, predicate: Optional[Predicate] = None,
                 origin: Optional[Tuple[int, ...]] = None, marked: Optional[Tuple[int, ...]] = None,
                 torsion: Optional[int] = None, fixture: Optional[FitFixture] = None):
        """
        :param family_id: Registry identifier.
        :param ambient: "P2" or "P1xP1".
        :param newform_label: Label of the associated registry form.
        :param description: One line for reports.
        :param system_name: Built-in linear system giving the parameter space; None for the Weierstrass plane.
        :param predicate: Filter on reduced fibre coefficients.
        :param origin: Group-law origin (plane cubic families).
        :param marked: Marked torsion point (plane cubic families).
        :param torsion: Expected order of the marked point.
        :param fixture: Pinned fit basis and primes.
        """
        self.family_id: str = family_id
        self.ambient: str = ambient
        self.newform_label: str = newform_label
        self.description: str = description
        self.system_name: Optional[str] = system_name
        self.predicate: Optional[Predicate] = predicate
        self.origin: Optional[Tuple[int, ...]] = origin
        self.marked: Optional[Tuple[int, ...]] = marked
        self.torsion: Optional[int] = torsion
        self.fixture: Optional[FitFixture] = fixture

    @property
    def newform(self) -> NewformSpec:
        return NEWFORM_REGISTRY[self.newform_label]

    @property
    def level(self) -> int:
        return self.newform.level

    @property
    def exponent(self) -> int:
        return self.newform.weight - 2

    @property
    def is_weierstrass(self) -> bool:
        return self.system_name is None

    def system(self) -> LinearSystem:
        if self.system_name is None:
            raise UsageError(f"{self.family_id} has no linear system")
        return named_system(self.system_name)

    def is_good_prime(self, p: int) -> bool:
        if p <= 5 or self.level % p == 0:
            return False
        return self.is_weierstrass or p not in self.system().bad_primes

    def check_prime(self, p: int) -> None:
        """
        BadPrime unless p > 5, p does not divide the level, and the linear system reduces well.
        """
        if not sympy.isprime(p):
            raise NotPrime(f"{p} is not prime")
        if not self.is_good_prime(p):
            raise BadPrime(f"{p} is not a good prime for {self.family_id} (level {self.level})")

    def good_primes(self, upto: int, start: int = 7) -> List[int]:
        return [p for p in sympy.primerange(start, upto + 1) if self.is_good_prime(p)]

    def fibre_set(self, p: int) -> FibreSet:
        self.check_prime(p)
        return _fibre_set(self, p)

    def count(self, fibres: FibreSet, indices: Sequence[int], p: int) -> np.ndarray:
        """
        F_p point counts of the selected fibres.
        """
        indices = np.asarray(indices, dtype=np.int64)
        if self.is_weierstrass:
            pairs = fibres.weierstrass[indices]
            traces = _weierstrass_traces(p)
            return p + 1 - traces[pairs[:, 0], pairs[:, 1]]
        counts, _ = _system_scan(self, p)
        return counts[fibres.rows[indices]]

    def singular_flags(self, fibres: FibreSet, p: int) -> np.ndarray:
        if self.is_weierstrass:
            return np.zeros(len(fibres.params), dtype=bool)
        _, singular = _system_scan(self, p)
        return singular[fibres.rows]

    def fibre_curve(self, fibres: FibreSet, index: int, p: int) -> PlaneCurve:
        field = PrimeField(p)
        if self.is_weierstrass:
            A, B = fibres.weierstrass[index]
            return weierstrass_curve(int(A), int(B), field)
        return PlaneCurve(self.ambient, [int(c) for c in fibres.coeffs[index]], field)

    def origin_point(self, p: int) -> ProjPoint:
        return ProjPoint(self.origin, PrimeField(p), AMBIENT_BLOCKS[self.ambient])

    def marked_point(self, p: int) -> ProjPoint:
        return ProjPoint(self.marked, PrimeField(p), AMBIENT_BLOCKS[self.ambient])

    def __str__(self) -> str:
        return f"{self.family_id}: {self.description} (form {self.newform_label}, r={self.exponent})"


@lru_cache(maxsize=8)
def _weierstrass_traces(p: int) -> np.ndarray:
    return np.stack([weierstrass_trace_row(A, p) for A in range(p)])


@lru_cache(maxsize=16)
def _fibre_set(family: Family, p: int) -> FibreSet:
    if family.is_weierstrass:
        grid = np.indices((p, p), dtype=np.int64).reshape(2, -1).T
        A, B = grid[:, 0], grid[:, 1]
        good = (4 * (A * A % p) * A + 27 * (B * B % p)) % p != 0
        grid = grid[good]
        return FibreSet([f"{a}:{b}" for a, b in grid.tolist()], weierstrass=grid)
    basis = _reduced_basis(family, p)
    params = projective_points(basis.shape[0], p)
    coeffs = params @ basis % p
    rows = np.arange(params.shape[0])
    if family.predicate is not None:
        keep = family.predicate(coeffs, p)
        params, coeffs, rows = params[keep], coeffs[keep], rows[keep]
    logger.debug("%s over F_%d: %d fibres", family.family_id, p, len(params))
    return FibreSet([":".join(map(str, row)) for row in params.tolist()], coeffs=coeffs, rows=rows)


def _reduced_basis(family: Family, p: int) -> np.ndarray:
    return np.array([c.coeffs for c in reduce_mod_p(family.system(), p)], dtype=np.int64)


@lru_cache(maxsize=8)
def _system_scan(family: Family, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Counts and singular flags of every member of the family's linear system, predicate or not.
    """
    counts, singular = linear_system_scan(family.ambient, p, _reduced_basis(family, p))
    counts.flags.writeable = False
    singular.flags.writeable = False
    return counts, singular


FAMILY_REGISTRY: Dict[str, Family] = {
    family.family_id: family for family in (
        Family("level5_cubic", "P2", "5.4", "pencil of plane cubics with a 5-torsion point",
               system_name="level5_cubic", origin=(0, 1, 0), marked=(0, 1, -1), torsion=5,
               fixture=FitFixture(("ap", "p", "p^2", "p*chi5"), (7, 11, 13, 17), 199)),
        Family("level4_cubic", "P2", "4.6", "pencil of plane cubics with a 4-torsion point",
               system_name="level4_cubic", origin=(0, 1, 0), marked=(1, 0, 1), torsion=4,
               fixture=FitFixture(("ap", "1", "p", "p^2", "p^3", "p^4"), (7, 11, 13, 17, 19, 23), 149)),
        Family("level3_cubic", "P2", "3.6", "net of plane cubics with a 3-torsion point",
               system_name="level3_cubic", origin=(1, 0, 0), marked=(0, 1, 0), torsion=3,
               fixture=FitFixture(("ap", "p*ap", "p^2*ap", "ap@3.7", "1", "p", "p^2", "p^3", "p^4", "p^5",
                                   "p^6", "chi3", "p*chi3", "p^2*chi3", "p^3*chi3", "p^4*chi3"),
                                  (7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67), 109)),
        Family("level2_cubic", "P2", "2.8", "web of plane cubics with a 2-torsion point",
               system_name="level2_cubic", origin=(0, 0, 1), marked=(0, 1, 0), torsion=2,
               fixture=FitFixture(("ap", "p*ap", "p^2*ap", "ap@2.10", "ap@4.6", "p*ap@4.6", "1", "p", "p^2",
                                   "p^3", "p^4", "p^5", "p^6", "p^7", "p^8"),
                                  (7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61), 109)),
        Family("level1_weierstrass", "P2", "1.12", "all Weierstrass curves y^2 = x^3 + Ax + B",
               fixture=FitFixture(("ap", "p*ap", "1", "p", "p^2", "p^3", "p^4", "p^5", "p^6", "p^7"),
                                  (7, 11, 13, 17, 19, 23, 29, 31, 37, 41), 97)),
        Family("level3_22", "P1xP1", "3.6", "net of (2,2) curves for level 3",
               system_name="level3_22"),
        Family("level4_22", "P1xP1", "4.6", "(2,2) curves for level 4 with matching residual points",
               system_name="level4_22", predicate=level4_22_predicate),
        Family("level5_22", "P1xP1", "5.4", "pencil of (2,2) curves for level 5",
               system_name="level5_22"),
        Family("level2_22", "P1xP1", "2.8", "(2,2) curves for level 2 tangent at the residual point",
               system_name="level2_22", predicate=level2_22_predicate),
    )
}


def select_family(family_id: str) -> Family:
    """
    Look up a registry family.

    :param family_id: The identifier, e.g. "level5_cubic".
    :return: The Family; UsageError for an unknown identifier.
    """
    family = FAMILY_REGISTRY.get(family_id)
    if family is None:
        raise UsageError(f"unknown family '{family_id}', choose from {', '.join(FAMILY_REGISTRY)}")
    return family


def cubic_families() -> List[Family]:
    """
    The plane cubic families carrying a marked torsion point.
    """
    return [f for f in FAMILY_REGISTRY.values() if f.torsion is not None]
