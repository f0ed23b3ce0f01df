import logging
import re
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np
import sympy

from .curve_families import Family, select_family
from .finite_fields import PrimeField
from .plane_geometry import PlaneCurve, count_points, weierstrass_trace
from .power_series import NEWFORM_REGISTRY, NewformSpec, ap
from .stat_generator import StatGenerator
from .trace_cache import TraceCache
from .workbench_errors import (
    BadReduction,
    CacheCorrupt,
    InconsistentFit,
    NotPrime,
    SingularFit,
    UsageError,
)

logger = logging.getLogger(__name__)

SHIMURA_MODEL = "Y^2*Z + Y*Z^2 - X^3 + X^2*Z + 10*X*Z^2 + 20*Z^3"


# ---------- Scans and moments ----------

@dataclass(frozen=True)
class TraceRecord:
    param: str
    count: int
    trace: int
    singular: bool


@dataclass(frozen=True)
class TraceTable:
    """
    Point counts of every fibre of a family over F_p, in parameter order.
    """

    family_id: str
    p: int
    records: Tuple[TraceRecord, ...]

    def traces(self) -> List[int]:
        return [record.trace for record in self.records]


@dataclass(frozen=True)
class MomentReport:
    family_id: str
    p: int
    exponent: int
    total: int
    smooth: int
    singular_fibres: int
    fibres: int


def scan(family: Family, p: int, cache: Optional[TraceCache] = None,
         stats: Optional[StatGenerator] = None) -> TraceTable:
    """
    Count points on every fibre of the family over F_p.

    :param family: The family.
    :param p: A good prime for it.
    :param cache: Optional count store, read first and filled with whatever was missing.
    :param stats: Optional statistics accumulator.
    :return: The TraceTable; BadPrime or CacheCorrupt on failure.
    """
    fibres = family.fibre_set(p)
    params = fibres.params
    known: Dict[str, int] = cache.load(family.family_id, p) if cache is not None else {}
    if known:
        stray = set(known) - set(params)
        if stray:
            raise CacheCorrupt(f"cache for {family.family_id} at p={p} has unknown parameter {min(stray)}")
    missing = [i for i, param in enumerate(params) if param not in known]
    counts = np.zeros(len(params), dtype=np.int64)
    if missing:
        counts[missing] = family.count(fibres, missing, p)
        if cache is not None:
            if known:
                logger.warning("cache for %s at p=%d was partial, counted %d fibres",
                               family.family_id, p, len(missing))
            cache.append(family.family_id, p, ((params[i], int(counts[i])) for i in missing))
    for i, param in enumerate(params):
        if param in known:
            counts[i] = known[param]
    singular = family.singular_flags(fibres, p)
    records = tuple(
        TraceRecord(param, int(n), p + 1 - int(n), bool(flag))
        for param, n, flag in zip(params, counts.tolist(), singular.tolist())
    )
    if stats is not None:
        stats.reset_current_stats()
        stats.update_fibres(len(records))
        stats.update_cache(len(params) - len(missing), len(missing))
        stats.update_singular(int(singular.sum()))
        for record in records:
            if not record.singular:
                stats.update_trace_bound(record.trace)
    logger.info("scanned %s at p=%d: %d fibres, %d from cache",
                family.family_id, p, len(records), len(params) - len(missing))
    return TraceTable(family.family_id, p, records)


def moment(table: TraceTable, r: int) -> MomentReport:
    """
    Power sums of the traces, over all fibres and over the F_p-nonsingular ones.

    :param table: A scan result.
    :param r: Positive exponent.
    :return: The MomentReport.
    """
    if r < 1:
        raise UsageError("moment exponent must be positive")
    total = sum(record.trace ** r for record in table.records)
    smooth = sum(record.trace ** r for record in table.records if not record.singular)
    singular = sum(1 for record in table.records if record.singular)
    return MomentReport(table.family_id, table.p, r, total, smooth, singular, len(table.records))


# ---------- Fitting ----------

_POWER = re.compile(r"^p(?:\^(\d+))?$")
_CHI = re.compile(r"^chi(\d+)$")
_FORM = re.compile(r"^ap@(\d+\.\d+)$")


def _parse_basis_name(name: str) -> Tuple[int, str]:
    """
    Split a basis name into (power of p, atom) with atom "1", "ap", "ap@N.k" or "chiQ".
    """
    name = name.strip()
    if "*" in name:
        prefix, atom = name.split("*", 1)
        match = _POWER.match(prefix)
        if match is None:
            raise UsageError(f"cannot parse basis function '{name}'")
        power = int(match.group(1) or 1)
    elif _POWER.match(name):
        match = _POWER.match(name)
        return int(match.group(1) or 1), "1"
    else:
        power, atom = 0, name
    if atom in ("1", "ap"):
        return power, atom
    form = _FORM.match(atom)
    if form and form.group(1) in NEWFORM_REGISTRY:
        return power, atom
    chi = _CHI.match(atom)
    if chi and sympy.isprime(int(chi.group(1))) and int(chi.group(1)) > 2:
        return power, atom
    raise UsageError(f"cannot parse basis function '{name}'")


def basis_value(name: str, p: int, newform: NewformSpec) -> int:
    """
    Value at p of a named basis function: "1", "p^j", "ap", "p^j*ap", "chiq", "p^j*chiq".

    "ap" is the coefficient of the family's form; "ap@N.k" names another registry form.
    """
    power, atom = _parse_basis_name(name)
    if atom == "1":
        value = 1
    elif atom == "ap":
        value = ap(newform, p)
    elif atom.startswith("ap@"):
        value = ap(NEWFORM_REGISTRY[atom[3:]], p)
    else:
        q = int(atom[3:])
        value = int(sympy.legendre_symbol(p % q, q))
    return p ** power * value


@dataclass(frozen=True)
class FitModel:
    """
    An exact model M_r(p) = sum c_i basis_i(p).
    """

    family_id: str
    exponent: int
    newform_label: str
    basis: Tuple[str, ...]
    coefficients: Tuple[Fraction, ...]
    fit_primes: Tuple[int, ...]

    def evaluate(self, p: int) -> Fraction:
        newform = NEWFORM_REGISTRY[self.newform_label]
        return sum((c * basis_value(name, p, newform) for c, name in zip(self.coefficients, self.basis)),
                   Fraction(0))

    def coefficient(self, name: str) -> Fraction:
        return self.coefficients[self.basis.index(name)]

    def perturbed(self, index: int, delta: Fraction = Fraction(1)) -> 'FitModel':
        coefficients = list(self.coefficients)
        coefficients[index] += delta
        return FitModel(self.family_id, self.exponent, self.newform_label, self.basis,
                        tuple(coefficients), self.fit_primes)


@dataclass(frozen=True)
class ResidualReport:
    family_id: str
    residuals: Tuple[Tuple[int, Fraction], ...]
    moments: Dict[int, int] = dataclass_field(default_factory=dict, compare=False)

    @property
    def success(self) -> bool:
        return all(residual == 0 for _, residual in self.residuals)

    def first_failure(self) -> Optional[Tuple[int, Fraction]]:
        return next(((p, r) for p, r in self.residuals if r != 0), None)


def fit_moments(family_id: str, exponent: int, newform_label: str, basis: Sequence[str],
                moments: Dict[int, int]) -> FitModel:
    """
    Solve M_r(p) = sum c_i basis_i(p) exactly on the given primes.

    :param family_id: Family the moments came from.
    :param exponent: The moment exponent r.
    :param newform_label: The associated form.
    :param basis: Basis function names.
    :param moments: {fit prime: M_r(p)}.
    :return: The FitModel; SingularFit or InconsistentFit.
    """
    basis = tuple(basis)
    primes = tuple(moments)
    if not basis:
        raise UsageError("empty fit basis")
    if len(primes) < len(basis):
        raise SingularFit(f"{len(primes)} fit primes for {len(basis)} basis functions")
    newform = NEWFORM_REGISTRY[newform_label]
    A = sympy.Matrix([[basis_value(name, p, newform) for name in basis] for p in primes])
    rhs = sympy.Matrix([moments[p] for p in primes])
    rank = A.rank()
    if rank < len(basis):
        raise SingularFit(f"fit matrix has rank {rank} < {len(basis)}")
    if A.row_join(rhs).rank() > rank:
        raise InconsistentFit(f"moments on {list(primes)} have no exact solution in {', '.join(basis)}")
    solution, _ = A.gauss_jordan_solve(rhs)
    coefficients = tuple(Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q)) for c in solution)
    logger.debug("fit %s: %s", family_id, coefficients)
    return FitModel(family_id, exponent, newform_label, basis, coefficients, primes)


def family_moments(family: Family, primes: Sequence[int], cache: Optional[TraceCache] = None,
                   stats: Optional[StatGenerator] = None) -> Dict[int, int]:
    return {p: moment(scan(family, p, cache, stats), family.exponent).total for p in primes}


def fit(family: Family, basis: Sequence[str], fit_primes: Sequence[int],
        cache: Optional[TraceCache] = None, stats: Optional[StatGenerator] = None) -> FitModel:
    """
    Scan the family on the fit primes and fit its moment exactly.
    """
    if len(fit_primes) < len(basis):
        raise SingularFit(f"{len(fit_primes)} fit primes for {len(basis)} basis functions")
    if stats is not None:
        stats.update_fits()
    moments = family_moments(family, fit_primes, cache, stats)
    return fit_moments(family.family_id, family.exponent, family.newform_label, basis, moments)


def validate_moments(model: FitModel, moments: Dict[int, int]) -> ResidualReport:
    residuals = tuple((p, Fraction(m) - model.evaluate(p)) for p, m in moments.items())
    return ResidualReport(model.family_id, residuals, dict(moments))


def validate(model: FitModel, primes: Sequence[int], cache: Optional[TraceCache] = None,
             stats: Optional[StatGenerator] = None) -> ResidualReport:
    """
    Residuals M_r(p) - model(p) on primes disjoint from the fit primes.
    """
    overlap = set(primes) & set(model.fit_primes)
    if overlap:
        raise UsageError(f"validation primes {sorted(overlap)} were used in the fit")
    family = select_family(model.family_id)
    return validate_moments(model, family_moments(family, primes, cache, stats))


# ---------- Symmetric powers and Rankin-Selberg ----------

def _power_trace(a: int, q: int, m: int) -> int:
    """
    alpha^m + beta^m for alpha + beta = a, alpha * beta = q.
    """
    previous, current = 2, a
    if m == 0:
        return 2
    for _ in range(m - 1):
        previous, current = current, a * current - q * previous
    return current


def _sym_power(a: int, q: int, m: int) -> int:
    previous, current = 1, a
    if m == 0:
        return 1
    for _ in range(m - 1):
        previous, current = current, a * current - q * previous
    return current


def sym_trace(a: int, p: int, k: int, m: int) -> int:
    """
    Trace of Frobenius on sym^m for eigenvalues with sum a and product p^(k-1).

    :param a: The trace a_p.
    :param p: The prime.
    :param k: The weight.
    :param m: Nonnegative symmetric power.
    :return: t_m from t_0 = 1, t_1 = a, t_m = a t_(m-1) - p^(k-1) t_(m-2).
    """
    if m < 0:
        raise UsageError("symmetric power must be nonnegative")
    return _sym_power(a, p ** (k - 1), m)


def _polynomial_from_power_sums(power_sums: Sequence[int], degree: int) -> Tuple[int, ...]:
    """
    Coefficients of prod (1 - lambda_i T) from the power sums s_1..s_degree (Newton's identities).
    """
    e = [1]
    for i in range(1, degree + 1):
        total = sum((-1) ** (j - 1) * e[i - j] * power_sums[j - 1] for j in range(1, i + 1))
        if total % i:
            raise UsageError("power sums do not come from integral roots")
        e.append(total // i)
    return tuple((-1) ** i * value for i, value in enumerate(e))


def sym_euler_factor(a: int, p: int, k: int, m: int) -> Tuple[int, ...]:
    """
    prod_{i=0..m} (1 - alpha^i beta^(m-i) T), as coefficients of 1, T, ..., T^(m+1).
    """
    if m < 0:
        raise UsageError("symmetric power must be nonnegative")
    q = p ** (k - 1)
    sums = [_sym_power(_power_trace(a, q, j), q ** j, m) for j in range(1, m + 2)]
    return _polynomial_from_power_sums(sums, m + 1)


def rankin_trace(a_g: int, a_h: int) -> int:
    return a_g * a_h


def rankin_weight(k: int, r: int) -> int:
    """
    Motivic weight of the Rankin-Selberg product of weight-k and weight-r forms, k + r - 2.
    """
    return k + r - 2


def rankin_euler_factor(a_g: int, k: int, a_h: int, r: int, p: int) -> Tuple[int, ...]:
    """
    The degree-4 local factor with roots the pairwise products of the two eigenvalue pairs.
    """
    q_g, q_h = p ** (k - 1), p ** (r - 1)
    sums = [_power_trace(a_g, q_g, j) * _power_trace(a_h, q_h, j) for j in range(1, 5)]
    return _polynomial_from_power_sums(sums, 4)


# ---------- Kummer surfaces ----------

@dataclass(frozen=True)
class KummerCounts:
    a: int
    f2: int
    singular_quotient_count: int
    smooth_model_count: int


def _good_weierstrass(A: int, B: int, p: int) -> PrimeField:
    field = PrimeField(p)
    if p == 2:
        raise NotPrime("Kummer counts need an odd prime")
    if (4 * field.element(A) ** 3 + 27 * field.element(B) ** 2) % p == 0:
        raise BadReduction(f"4A^3+27B^2 vanishes mod {p}")
    return field


def kummer_counts(A: int, B: int, p: int) -> KummerCounts:
    """
    Point counts of the Kummer surface of E x E for E: y^2 = x^3 + Ax + B over F_p.

    :return: KummerCounts with the singular quotient (p+1)^2 + a^2 and the blown-up model
        adding p points over each rational 2-torsion pair.
    """
    field = _good_weierstrass(A, B, p)
    a = weierstrass_trace(A, B, p)
    x = np.arange(p, dtype=np.int64)
    roots = int(((x * x % p * x + field.element(A) * x + field.element(B)) % p == 0).sum())
    f2 = (1 + roots) ** 2
    singular = (p + 1) ** 2 + a * a
    return KummerCounts(a, f2, singular, singular + p * f2)


def kummer_orbit_count(A: int, B: int, p: int) -> Tuple[int, int]:
    """
    Count the Kummer surface directly: Frobenius-stable orbits of (P, Q) -> (-P, -Q) on E x E.

    A stable orbit has P and Q both rational, or both mapped to their negatives by Frobenius
    (points of the quadratic twist, written (x, r) for y = r sqrt(n)).

    :return: (singular quotient count, smooth model count).
    """
    field = _good_weierstrass(A, B, p)
    A, B = field.element(A), field.element(B)
    n = field.nonresidue()
    inverse_n = field.inv(n)
    rational: List = ["O"]
    twisted: List = ["O"]
    fixed: Set = {"O"}
    for x in range(p):
        f = (x * x * x + A * x + B) % p
        if f == 0:
            rational.append((x, 0))
            twisted.append((x, 0))
            fixed.add((x, 0))
            continue
        y = field.sqrt(f)
        if y is not None:
            rational.extend([(x, y), (x, -y % p)])
        else:
            r = field.sqrt(f * inverse_n % p)
            twisted.extend([(x, r), (x, -r % p)])

    def neg(point):
        return point if point == "O" else (point[0], -point[1] % p)

    orbits: Set[FrozenSet] = set()
    for points in (rational, twisted):
        for P in points:
            for Q in points:
                orbits.add(frozenset({(P, Q), (neg(P), neg(Q))}))
    fixed_pairs = len(fixed) ** 2
    return len(orbits), len(orbits) + p * fixed_pairs


# ---------- Shimura consistency ----------

def shimura_check(bound: int) -> List[int]:
    """
    Primes p < bound, p != 11, where the conductor-11 model's trace differs from ap of form 11.2.
    """
    model = PlaneCurve.from_polynomial("P2", SHIMURA_MODEL)
    newform = NEWFORM_REGISTRY["11.2"]
    newform.coefficients(bound + 1)
    mismatches = []
    for p in sympy.primerange(2, bound):
        if p == 11:
            continue
        trace = p + 1 - count_points(model, p)
        if trace != ap(newform, p):
            mismatches.append(p)
    logger.info("shimura check below %d: %d mismatches", bound, len(mismatches))
    return mismatches
