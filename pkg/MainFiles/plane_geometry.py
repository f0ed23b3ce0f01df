import logging
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .finite_fields import PrimeField, QuadraticExtension, RationalField, extension_mul
from .workbench_errors import (
    BadReduction,
    DegenerateLine,
    DegeneratePoint,
    NotFound,
    NotOnCurve,
    UsageError,
)

logger = logging.getLogger(__name__)

# ---------- Monomial orders ----------

CUBIC_MONOMIALS: Tuple[Tuple[int, ...], ...] = (
    (3, 0, 0), (2, 1, 0), (2, 0, 1), (1, 2, 0), (1, 1, 1),
    (1, 0, 2), (0, 3, 0), (0, 2, 1), (0, 1, 2), (0, 0, 3),
)
# U^a S^(2-a) V^b T^(2-b), a and b running 2, 1, 0.
BIDEGREE_MONOMIALS: Tuple[Tuple[int, ...], ...] = tuple(
    (a, 2 - a, b, 2 - b) for a in (2, 1, 0) for b in (2, 1, 0)
)

AMBIENT_MONOMIALS: Dict[str, Tuple[Tuple[int, ...], ...]] = {
    "P2": CUBIC_MONOMIALS,
    "P1xP1": BIDEGREE_MONOMIALS,
}
AMBIENT_BLOCKS: Dict[str, Tuple[int, ...]] = {"P2": (3,), "P1xP1": (2, 2)}
VARIABLE_NAMES: Dict[str, Tuple[str, ...]] = {"P2": ("X", "Y", "Z"), "P1xP1": ("U", "S", "V", "T")}

# Float64 matrix products stay exact while every partial sum is below 2^53.
_CHUNK_CELLS = 4_000_000
_EXTENSION_BATCH = 65_536


def _check_ambient(ambient: str) -> None:
    if ambient not in AMBIENT_MONOMIALS:
        raise UsageError(f"unknown ambient '{ambient}', expected P2 or P1xP1")


class ProjPoint:
    """
    A point of a product of projective spaces, stored in normalized form: the first nonzero
    coordinate of each block is 1. The normalized form drives equality, hashing and printing.
    """

    def __init__(self, coords: Sequence, field, blocks: Tuple[int, ...] = (3,)):
        """
        :param coords: Homogeneous coordinates, all blocks concatenated.
        :param field: RationalField, PrimeField or QuadraticExtension.
        :param blocks: Block sizes, (3,) for P^2 and (2, 2) for P^1 x P^1.
        """
        values = [field.element(c) for c in coords]
        if len(values) != sum(blocks):
            raise UsageError(f"expected {sum(blocks)} coordinates, got {len(values)}")
        normalized = []
        start = 0
        for size in blocks:
            block = values[start:start + size]
            lead = next((c for c in block if not field.is_zero(c)), None)
            if lead is None:
                raise DegeneratePoint("every coordinate of a block is zero")
            scale = field.inv(lead)
            normalized.extend(field.mul(c, scale) for c in block)
            start += size
        self.coords: Tuple = tuple(normalized)
        self.field = field
        self.blocks: Tuple[int, ...] = tuple(blocks)

    @classmethod
    def parse(cls, text: str, field, ambient: str = "P2") -> 'ProjPoint':
        """
        Parse "x:y:z" (P2) or "u0:u1|v0:v1" (P1xP1). Entries may be "n/d" rationals.
        """
        _check_ambient(ambient)
        try:
            parts = [Fraction(entry.strip()) for block in text.split("|") for entry in block.split(":")]
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse point '{text}'")
        return cls(parts, field, AMBIENT_BLOCKS[ambient])

    @property
    def ambient(self) -> str:
        if self.blocks == (3,):
            return "P2"
        if self.blocks == (2, 2):
            return "P1xP1"
        return f"P{sum(self.blocks) - 1}"

    def block(self, index: int) -> Tuple:
        start = sum(self.blocks[:index])
        return self.coords[start:start + self.blocks[index]]

    def over(self, field) -> 'ProjPoint':
        """
        The same point with coordinates moved into another field (rational to F_p).
        """
        if field == self.field:
            return self
        return ProjPoint(self.coords, field, self.blocks)

    def is_rational(self) -> bool:
        """
        False only for F_{p^2} points with a coordinate outside F_p.
        """
        if isinstance(self.field, QuadraticExtension):
            return all(c[1] == 0 for c in self.coords)
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjPoint):
            return False
        return self.field == other.field and self.blocks == other.blocks and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.coords, self.blocks))

    def __str__(self) -> str:
        pieces = []
        start = 0
        for size in self.blocks:
            pieces.append(":".join(self.field.format(c) for c in self.coords[start:start + size]))
            start += size
        return "|".join(pieces)

    def __repr__(self) -> str:
        return f"ProjPoint({self})"


def _monomial_value(field, coords: Sequence, exps: Sequence[int]):
    value = field.element(1)
    for c, e in zip(coords, exps):
        for _ in range(e):
            value = field.mul(value, c)
    return value


@lru_cache(maxsize=None)
def _partial_terms(monomials, variable: int) -> List[Tuple[int, Optional[Tuple[int, ...]]]]:
    """
    Per monomial, the multiplier and reduced exponents of its derivative in one variable.
    """
    terms = []
    for exps in monomials:
        e = exps[variable]
        if e == 0:
            terms.append((0, None))
        else:
            reduced = list(exps)
            reduced[variable] -= 1
            terms.append((e, tuple(reduced)))
    return terms


def monomial_row(ambient: str, field, coords: Sequence) -> List:
    """
    Values of every monomial of the ambient at the given coordinates.
    """
    return [_monomial_value(field, coords, exps) for exps in AMBIENT_MONOMIALS[ambient]]


def partial_row(ambient: str, field, coords: Sequence, variable: int) -> List:
    """
    Values at coords of the derivative of every monomial in one variable.
    """
    row = []
    for multiplier, exps in _partial_terms(AMBIENT_MONOMIALS[ambient], variable):
        if exps is None:
            row.append(field.element(0))
        else:
            row.append(field.mul(field.element(multiplier), _monomial_value(field, coords, exps)))
    return row


class PlaneCurve:
    """
    A ternary cubic on P^2 or a bidegree (2,2) form on P^1 x P^1, given by its coefficient
    vector in the fixed monomial order.
    """

    def __init__(self, ambient: str, coeffs: Sequence, field):
        """
        :param ambient: "P2" or "P1xP1".
        :param coeffs: 10 or 9 coefficients in the fixed monomial order.
        :param field: RationalField or PrimeField.
        """
        _check_ambient(ambient)
        monomials = AMBIENT_MONOMIALS[ambient]
        if len(coeffs) != len(monomials):
            raise UsageError(f"{ambient} curves need {len(monomials)} coefficients, got {len(coeffs)}")
        self.ambient: str = ambient
        self.field = field
        self.coeffs: Tuple = tuple(field.element(c) for c in coeffs)
        if all(field.is_zero(c) for c in self.coeffs):
            raise BadReduction("coefficient vector is identically zero")

    @classmethod
    def from_polynomial(cls, ambient: str, text: str, field=None) -> 'PlaneCurve':
        """
        Build a curve from a polynomial written in X, Y, Z (or U, S, V, T).

        :param ambient: "P2" or "P1xP1".
        :param text: For example "X^2*Z + Y^2*X + Z^2*Y - 3*X*Y*Z".
        :param field: Target field, rationals by default.
        :return: The curve.
        """
        _check_ambient(ambient)
        names = VARIABLE_NAMES[ambient]
        symbols = sympy.symbols(" ".join(names))
        expression = sympy.sympify(text.replace("^", "**"), locals=dict(zip(names, symbols)))
        poly = sympy.Poly(expression, *symbols)
        monomials = AMBIENT_MONOMIALS[ambient]
        if any(m not in monomials for m in poly.monoms()):
            raise UsageError(f"'{text}' is not a form of the right multidegree")
        coeffs = []
        for exps in monomials:
            c = sympy.Rational(poly.coeff_monomial(exps))
            coeffs.append(Fraction(int(c.p), int(c.q)))
        return cls(ambient, coeffs, field if field is not None else RationalField())

    @property
    def monomials(self) -> Tuple[Tuple[int, ...], ...]:
        return AMBIENT_MONOMIALS[self.ambient]

    @property
    def variables(self) -> int:
        return len(VARIABLE_NAMES[self.ambient])

    def _coords(self, point) -> Sequence:
        if isinstance(point, ProjPoint):
            if point.ambient != self.ambient:
                raise UsageError(f"point {point} is not in {self.ambient}")
            return point.over(self.field).coords
        return [self.field.element(c) for c in point]

    def evaluate(self, point):
        """
        Value of the form at a point or coordinate sequence.
        """
        coords = self._coords(point)
        total = self.field.element(0)
        for c, exps in zip(self.coeffs, self.monomials):
            if not self.field.is_zero(c):
                total = self.field.add(total, self.field.mul(c, _monomial_value(self.field, coords, exps)))
        return total

    def gradient(self, point) -> Tuple:
        """
        All partial derivatives at a point, in variable order.
        """
        coords = self._coords(point)
        field = self.field
        grad = []
        for variable in range(self.variables):
            total = field.element(0)
            for c, (multiplier, exps) in zip(self.coeffs, _partial_terms(self.monomials, variable)):
                if exps is None or field.is_zero(c):
                    continue
                term = field.mul(field.mul(c, field.element(multiplier)), _monomial_value(field, coords, exps))
                total = field.add(total, term)
            grad.append(total)
        return tuple(grad)

    def contains(self, point) -> bool:
        return self.field.is_zero(self.evaluate(point))

    def reduce(self, p: int) -> 'PlaneCurve':
        """
        The curve over F_p.

        :param p: The prime.
        :return: The reduced curve; BadReduction for a denominator or an all-zero reduction.
        """
        if isinstance(self.field, PrimeField):
            if self.field.p != p:
                raise UsageError(f"curve is defined over F_{self.field.p}, not F_{p}")
            return self
        return PlaneCurve(self.ambient, self.coeffs, PrimeField(p))

    def coefficient_array(self, p: int) -> np.ndarray:
        return np.array(self.reduce(p).coeffs, dtype=np.int64)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PlaneCurve)
            and self.ambient == other.ambient
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.ambient, self.coeffs))

    def __str__(self) -> str:
        names = VARIABLE_NAMES[self.ambient]
        terms = []
        for c, exps in zip(self.coeffs, self.monomials):
            if self.field.is_zero(c):
                continue
            monomial = "*".join(
                name if e == 1 else f"{name}^{e}" for name, e in zip(names, exps) if e
            )
            terms.append(monomial if c == 1 else f"{self.field.format(c)}*{monomial}")
        return " + ".join(terms)


# ---------- Enumeration over F_p ----------

@lru_cache(maxsize=16)
def projective_points(n_coords: int, p: int) -> np.ndarray:
    """
    Every normalized point of P^(n_coords - 1)(F_p), one per row, ordered by position of the
    leading 1 and then lexicographically.
    """
    blocks = []
    for lead in range(n_coords):
        tail = n_coords - lead - 1
        if tail:
            grid = np.indices((p,) * tail, dtype=np.int64).reshape(tail, -1).T
        else:
            grid = np.zeros((1, 0), dtype=np.int64)
        block = np.zeros((grid.shape[0], n_coords), dtype=np.int64)
        block[:, lead] = 1
        block[:, lead + 1:] = grid
        blocks.append(block)
    points = np.vstack(blocks)
    points.flags.writeable = False
    return points


@lru_cache(maxsize=16)
def ambient_points(ambient: str, p: int) -> np.ndarray:
    """
    Every normalized F_p-point of the ambient; (p^2+p+1) rows for P2, (p+1)^2 rows for P1xP1.
    """
    _check_ambient(ambient)
    if ambient == "P2":
        return projective_points(3, p)
    line = projective_points(2, p)
    n = line.shape[0]
    points = np.hstack([np.repeat(line, n, axis=0), np.tile(line, (n, 1))])
    points.flags.writeable = False
    return points


def _power_columns(points: np.ndarray, p: int, exps: Sequence[int]) -> np.ndarray:
    column = np.ones(points.shape[0], dtype=np.int64)
    for i, e in enumerate(exps):
        for _ in range(e):
            column = column * points[:, i] % p
    return column


@lru_cache(maxsize=16)
def monomial_matrix(ambient: str, p: int) -> np.ndarray:
    """
    Monomial values mod p at every ambient point, as a float64 matrix (exact small integers).
    """
    points = ambient_points(ambient, p)
    matrix = np.stack([_power_columns(points, p, exps) for exps in AMBIENT_MONOMIALS[ambient]], axis=1)
    return matrix.astype(np.float64)


@lru_cache(maxsize=16)
def derivative_matrices(ambient: str, p: int) -> Tuple[np.ndarray, ...]:
    """
    For each variable, the values mod p of every monomial's partial derivative at every point.
    """
    points = ambient_points(ambient, p)
    matrices = []
    for variable in range(len(VARIABLE_NAMES[ambient])):
        columns = []
        for multiplier, exps in _partial_terms(AMBIENT_MONOMIALS[ambient], variable):
            if exps is None:
                columns.append(np.zeros(points.shape[0], dtype=np.int64))
            else:
                columns.append(multiplier * _power_columns(points, p, exps) % p)
        matrices.append(np.stack(columns, axis=1).astype(np.float64))
    return tuple(matrices)


def _chunks(n_points: int, n_curves: int) -> Iterator[slice]:
    size = max(1, _CHUNK_CELLS // max(1, n_points))
    for start in range(0, n_curves, size):
        yield slice(start, min(n_curves, start + size))


def _values(matrix: np.ndarray, coeffs: np.ndarray, p: int) -> np.ndarray:
    return np.mod(matrix @ coeffs.T.astype(np.float64), p)


def count_points_batch(ambient: str, p: int, coeffs: np.ndarray) -> np.ndarray:
    """
    F_p point counts for many curves at once.

    :param ambient: "P2" or "P1xP1".
    :param p: The prime.
    :param coeffs: (n_curves, n_monomials) int64 array of coefficients already reduced mod p.
    :return: int64 array of counts.
    """
    matrix = monomial_matrix(ambient, p)
    counts = np.zeros(coeffs.shape[0], dtype=np.int64)
    for part in _chunks(matrix.shape[0], coeffs.shape[0]):
        counts[part] = (_values(matrix, coeffs[part], p) == 0).sum(axis=0)
    return counts


def singular_mask(ambient: str, p: int, coeffs: np.ndarray) -> np.ndarray:
    """
    Boolean (n_points, n_curves) mask of F_p-points where a curve and all its partials vanish.
    """
    mask = _values(monomial_matrix(ambient, p), coeffs, p) == 0
    for derivative in derivative_matrices(ambient, p):
        mask &= _values(derivative, coeffs, p) == 0
    return mask


def singular_flags_batch(ambient: str, p: int, coeffs: np.ndarray) -> np.ndarray:
    """
    For each curve, whether it has a singular F_p-point.
    """
    n_points = ambient_points(ambient, p).shape[0]
    flags = np.zeros(coeffs.shape[0], dtype=bool)
    for part in _chunks(n_points, coeffs.shape[0]):
        flags[part] = singular_mask(ambient, p, coeffs[part]).any(axis=0)
    return flags


def _inverses(p: int) -> np.ndarray:
    table = np.zeros(p, dtype=np.int64)
    table[1:] = [pow(x, p - 2, p) for x in range(1, p)]
    return table


def _slice_scan(conditions: List[np.ndarray], heads: np.ndarray, p: int,
                inverse: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Counts and singular flags of the members (head, s) for every s in F_p.

    :param conditions: Values at every point of the curve (first) and of its partials, one
        (n_points, n_coords) int64 array per condition, column i for the i-th basis member.
    :param heads: (n_heads, n_coords - 1) leading parameter coordinates.
    :return: Two (n_heads, p) arrays.
    """
    n_heads = heads.shape[0]
    fixed = [(values[:, :-1] @ heads.T) % p for values in conditions]
    last = np.stack([values[:, -1] for values in conditions], axis=1)
    offsets = np.arange(n_heads, dtype=np.int64) * p

    # A point with w = F(B_last)(P) != 0 lies on exactly one member of each line of members.
    w = last[:, 0]
    moving = w != 0
    roots = (-fixed[0][moving] * inverse[w[moving]][:, np.newaxis]) % p
    counts = np.bincount((roots + offsets).ravel(), minlength=n_heads * p).reshape(n_heads, p)
    counts += (fixed[0][~moving] == 0).sum(axis=0)[:, np.newaxis]

    singular = np.zeros((n_heads, p), dtype=bool)
    active = last != 0
    pivoted = active.any(axis=1)
    if pivoted.any():
        rows = np.flatnonzero(pivoted)
        pivot = active[rows].argmax(axis=1)
        stacked = np.stack(fixed, axis=0)
        u = stacked[pivot, rows, :]
        s = (-u * inverse[last[rows, pivot]][:, np.newaxis]) % p
        ok = np.ones(s.shape, dtype=bool)
        for c, values in enumerate(fixed):
            ok &= (values[rows] + s * last[rows, c][:, np.newaxis]) % p == 0
        hit_rows, hit_heads = np.nonzero(ok)
        singular[hit_heads, s[hit_rows, hit_heads]] = True
    if not pivoted.all():
        still = np.ones((int((~pivoted).sum()), n_heads), dtype=bool)
        for values in fixed:
            still &= values[~pivoted] == 0
        singular[still.any(axis=0)] = True
    return counts, singular


def linear_system_scan(ambient: str, p: int, basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Point counts and singular flags of every member of a linear system over F_p.

    Members are sum t_i B_i over the rows t of projective_points(len(basis), p). With the
    leading coordinates fixed, each point with B_last(P) != 0 lies on exactly one member of
    the line t_last -> (head, t_last), so a line of p members costs one pass over the points.

    :param ambient: "P2" or "P1xP1".
    :param p: The prime.
    :param basis: (n_coords, n_monomials) int64 array reduced mod p.
    :return: (counts, singular) aligned with projective_points(n_coords, p).
    """
    n_coords = basis.shape[0]
    if n_coords == 1:
        return count_points_batch(ambient, p, basis), singular_flags_batch(ambient, p, basis)
    matrices = (monomial_matrix(ambient, p),) + derivative_matrices(ambient, p)
    transposed = basis.T.astype(np.int64)
    conditions = [(matrix.astype(np.int64) @ transposed) % p for matrix in matrices]
    heads = projective_points(n_coords - 1, p)
    inverse = _inverses(p)
    n_points = conditions[0].shape[0]
    step = max(1, _CHUNK_CELLS // (n_points * len(conditions)))
    counts = np.zeros((heads.shape[0], p), dtype=np.int64)
    singular = np.zeros((heads.shape[0], p), dtype=bool)
    for start in range(0, heads.shape[0], step):
        part = slice(start, min(heads.shape[0], start + step))
        counts[part], singular[part] = _slice_scan(conditions, heads[part], p, inverse)
    tail = basis[-1:]
    last_count = count_points_batch(ambient, p, tail)
    last_singular = singular_flags_batch(ambient, p, tail)
    return np.concatenate([counts.ravel(), last_count]), np.concatenate([singular.ravel(), last_singular])


def count_points(curve: PlaneCurve, p: int) -> int:
    """
    Number of F_p-points of the curve by enumeration of the ambient.

    :param curve: A rational curve or a curve over F_p.
    :param p: The prime.
    :return: The exact count.
    """
    coeffs = curve.coefficient_array(p)
    return int(count_points_batch(curve.ambient, p, coeffs[np.newaxis, :])[0])


def rational_points(curve: PlaneCurve, p: int) -> List[ProjPoint]:
    """
    The F_p-points of the curve in enumeration order.
    """
    coeffs = curve.coefficient_array(p)
    values = _values(monomial_matrix(curve.ambient, p), coeffs[np.newaxis, :], p)[:, 0]
    field = PrimeField(p)
    points = ambient_points(curve.ambient, p)
    blocks = AMBIENT_BLOCKS[curve.ambient]
    return [ProjPoint(tuple(int(c) for c in points[i]), field, blocks) for i in np.flatnonzero(values == 0)]


def hasse_holds(trace: int, p: int) -> bool:
    """
    |trace| <= 2 sqrt(p), compared exactly.
    """
    return trace * trace <= 4 * p


# ---------- Singular points ----------

def _term_maps(curve: PlaneCurve) -> List[Dict[Tuple[int, ...], int]]:
    """
    The curve and its partials as {exponents: coefficient mod p}.
    """
    p = curve.field.p
    maps = [{exps: c for c, exps in zip(curve.coeffs, curve.monomials) if c}]
    for variable in range(curve.variables):
        terms: Dict[Tuple[int, ...], int] = {}
        for c, (multiplier, exps) in zip(curve.coeffs, _partial_terms(curve.monomials, variable)):
            if exps is not None and c * multiplier % p:
                terms[exps] = (terms.get(exps, 0) + c * multiplier) % p
        maps.append(terms)
    return maps


def _extension_candidates(ambient: str, p: int) -> Iterator[List[Tuple]]:
    """
    Coordinate lists, as pairs of arrays, covering every normalized F_{p^2}-point exactly once.
    """
    size = p * p
    index = np.arange(size, dtype=np.int64)
    free = (index % p, index // p)

    def const(value: Tuple[int, int], length: int) -> Tuple[np.ndarray, np.ndarray]:
        return np.full(length, value[0], dtype=np.int64), np.full(length, value[1], dtype=np.int64)

    one, zero = (1, 0), (0, 0)
    if ambient == "P2":
        step = max(1, _EXTENSION_BATCH // size)
        for start in range(0, size, step):
            ks = np.repeat(np.arange(start, min(size, start + step), dtype=np.int64), size)
            length = ks.shape[0]
            tail = (np.tile(free[0], length // size), np.tile(free[1], length // size))
            yield [const(one, length), (ks % p, ks // p), tail]
        yield [const(zero, size), const(one, size), free]
        yield [const(zero, 1), const(zero, 1), const(one, 1)]
        return
    firsts = [(one, (k % p, k // p)) for k in range(size)] + [(zero, one)]
    for u0, u1 in firsts:
        yield [const(u0, size), const(u1, size), const(one, size), free]
        yield [const(u0, 1), const(u1, 1), const(zero, 1), const(one, 1)]


def _extension_singular_points(curve: PlaneCurve, p: int) -> List[ProjPoint]:
    """
    Singular points of an F_p curve defined over F_{p^2} but not over F_p.
    """
    ext = QuadraticExtension(p)
    term_maps = _term_maps(curve)
    needed = sorted({exps for terms in term_maps for exps in terms})
    found: List[ProjPoint] = []
    for coords in _extension_candidates(curve.ambient, p):
        length = coords[0][0].shape[0]
        values = {}
        for exps in needed:
            value = (np.ones(length, dtype=np.int64), np.zeros(length, dtype=np.int64))
            for c, e in zip(coords, exps):
                for _ in range(e):
                    value = extension_mul(value, c, ext.n, p)
            values[exps] = value
        mask = np.ones(length, dtype=bool)
        for terms in term_maps:
            real = np.zeros(length, dtype=np.int64)
            imag = np.zeros(length, dtype=np.int64)
            for exps, c in terms.items():
                real = (real + c * values[exps][0]) % p
                imag = (imag + c * values[exps][1]) % p
            mask &= (real == 0) & (imag == 0)
            if not mask.any():
                break
        for i in np.flatnonzero(mask):
            point = ProjPoint(
                [(int(c[0][i]), int(c[1][i])) for c in coords], ext, AMBIENT_BLOCKS[curve.ambient]
            )
            if not point.is_rational():
                found.append(point)
    return found


def extension_singular_flags(ambient: str, p: int, coeffs: np.ndarray) -> np.ndarray:
    """
    For each curve, whether it has a singular point over F_{p^2}.

    Real and imaginary parts of the monomials and their partials are tabulated once per batch
    of F_{p^2}-points and shared by all curves; a curve leaves the batch loop once flagged.

    :param ambient: "P2" or "P1xP1".
    :param p: An odd prime.
    :param coeffs: (n_curves, n_monomials) int64 array reduced mod p.
    :return: Boolean array.
    """
    _check_ambient(ambient)
    if p == 2:
        raise UsageError("the F_(p^2) search needs an odd prime")
    ext = QuadraticExtension(p)
    monomials = AMBIENT_MONOMIALS[ambient]
    forms = [[(1, exps) for exps in monomials]]
    forms += [_partial_terms(monomials, v) for v in range(len(VARIABLE_NAMES[ambient]))]
    needed = sorted({exps for terms in forms for _, exps in terms if exps is not None})
    flags = np.zeros(coeffs.shape[0], dtype=bool)
    pending = np.arange(coeffs.shape[0])
    for coords in _extension_candidates(ambient, p):
        if pending.size == 0:
            break
        length = coords[0][0].shape[0]
        zero = np.zeros(length, dtype=np.int64)
        values = {}
        for exps in needed:
            value = (np.ones(length, dtype=np.int64), zero)
            for c, e in zip(coords, exps):
                for _ in range(e):
                    value = extension_mul(value, c, ext.n, p)
            values[exps] = value
        tables = []
        for terms in forms:
            parts = []
            for half in (0, 1):
                columns = [zero if exps is None else multiplier * values[exps][half] % p
                           for multiplier, exps in terms]
                parts.append(np.stack(columns, axis=1).astype(np.float64))
            tables.append(parts)
        for part in _chunks(length, pending.size):
            chosen = pending[part]
            mask = np.ones((length, chosen.size), dtype=bool)
            for real, imag in tables:
                mask &= (_values(real, coeffs[chosen], p) == 0) & (_values(imag, coeffs[chosen], p) == 0)
            flags[chosen] = mask.any(axis=0)
        pending = pending[~flags[pending]]
    return flags


def singular_points(curve: PlaneCurve, p: int, degree_bound: int = 1,
                    diagnostic_limit: int = 31) -> List[ProjPoint]:
    """
    Points where the curve and all its partial derivatives vanish.

    :param curve: The curve (rational or over F_p).
    :param p: The prime.
    :param degree_bound: 1 for F_p-points only, 2 to add the F_{p^2}-points.
    :param diagnostic_limit: Largest p allowed with degree_bound 2.
    :return: F_p-points in enumeration order, then the remaining F_{p^2}-points.
    """
    if degree_bound not in (1, 2):
        raise UsageError("degree_bound must be 1 or 2")
    reduced = curve.reduce(p)
    coeffs = reduced.coefficient_array(p)
    mask = singular_mask(reduced.ambient, p, coeffs[np.newaxis, :])[:, 0]
    field = PrimeField(p)
    points = ambient_points(reduced.ambient, p)
    blocks = AMBIENT_BLOCKS[reduced.ambient]
    result = [ProjPoint(tuple(int(c) for c in points[i]), field, blocks) for i in np.flatnonzero(mask)]
    if degree_bound == 2:
        if p == 2 or p > diagnostic_limit:
            raise UsageError(f"F_(p^2) search needs an odd p <= {diagnostic_limit}, got {p}")
        result.extend(_extension_singular_points(reduced, p))
    return result


def certify_smooth(curve: PlaneCurve, p: int, count: Optional[int] = None,
                   diagnostic_limit: int = 31) -> bool:
    """
    Decide smoothness of a genus-one member that has a rational point.

    An F_p-nonsingular member can only be singular as a rational component meeting the rest
    in a conjugate pair, which puts it outside the Hasse interval. Those are confirmed by the
    F_{p^2} search when p is within the diagnostic limit.

    :param curve: The curve.
    :param p: The prime.
    :param count: Its F_p point count, if already known.
    :param diagnostic_limit: Largest p for the F_{p^2} search.
    :return: True when the curve is smooth.
    """
    reduced = curve.reduce(p)
    coeffs = reduced.coefficient_array(p)
    if singular_flags_batch(reduced.ambient, p, coeffs[np.newaxis, :])[0]:
        return False
    if count is None:
        count = count_points(reduced, p)
    if count == 0:
        return False
    if hasse_holds(p + 1 - count, p):
        return True
    if p == 2 or p > diagnostic_limit:
        return False
    return not _extension_singular_points(reduced, p)


# ---------- Weierstrass counting ----------

def _check_odd(p: int) -> PrimeField:
    field = PrimeField(p)
    if p == 2:
        raise UsageError("Weierstrass counting needs an odd prime")
    return field


def weierstrass_trace(A: int, B: int, p: int) -> int:
    """
    Frobenius trace of y^2 = x^3 + Ax + B over F_p by a quadratic character sum.

    :param A: Coefficient of x.
    :param B: Constant term.
    :param p: Odd prime.
    :return: a = -sum chi(x^3 + Ax + B); BadReduction for zero discriminant.
    """
    field = _check_odd(p)
    A, B = field.element(A), field.element(B)
    if (4 * A ** 3 + 27 * B ** 2) % p == 0:
        raise BadReduction(f"4A^3+27B^2 vanishes mod {p} for A={A}, B={B}")
    x = np.arange(p, dtype=np.int64)
    values = (x * x % p * x + A * x + B) % p
    return -int(field.chi_table()[values].sum())


def weierstrass_trace_row(A: int, p: int) -> np.ndarray:
    """
    Character-sum traces of y^2 = x^3 + Ax + B for every B in F_p at once.
    Entries with zero discriminant are meaningless; callers filter them.
    """
    field = _check_odd(p)
    x = np.arange(p, dtype=np.int64)
    cubic = (x * x % p * x + field.element(A) * x) % p
    values = (cubic[np.newaxis, :] + np.arange(p, dtype=np.int64)[:, np.newaxis]) % p
    return -field.chi_table()[values].sum(axis=1)


def weierstrass_curve(A: int, B: int, field=None) -> PlaneCurve:
    """
    The projective model Y^2 Z - X^3 - A X Z^2 - B Z^3.
    """
    field = field if field is not None else RationalField()
    coeffs = [0] * 10
    coeffs[CUBIC_MONOMIALS.index((3, 0, 0))] = -1
    coeffs[CUBIC_MONOMIALS.index((1, 0, 2))] = -A
    coeffs[CUBIC_MONOMIALS.index((0, 0, 3))] = -B
    coeffs[CUBIC_MONOMIALS.index((0, 2, 1))] = 1
    return PlaneCurve("P2", coeffs, field)


# ---------- Chord and tangent ----------

def _dot(field, u: Sequence, v: Sequence):
    total = field.element(0)
    for a, b in zip(u, v):
        total = field.add(total, field.mul(a, b))
    return total


def _proportional(field, u: Sequence, v: Sequence) -> bool:
    return all(
        field.is_zero(field.sub(field.mul(u[i], v[j]), field.mul(u[j], v[i])))
        for i in range(len(u)) for j in range(i + 1, len(u))
    )


def line_direction(field, covector: Sequence, point: Sequence) -> Tuple:
    """
    A point on the line covector . X = 0 that is different from the given point on it.
    """
    a, b, c = covector
    zero = field.element(0)
    candidates = [(b, field.neg(a), zero), (c, zero, field.neg(a)), (zero, c, field.neg(b))]
    for candidate in candidates:
        if all(field.is_zero(x) for x in candidate):
            continue
        if not _proportional(field, candidate, point):
            return candidate
    raise DegenerateLine("line covector is zero")


def _on_curve(curve: PlaneCurve, point: ProjPoint) -> ProjPoint:
    if curve.ambient != "P2":
        raise UsageError("the group law is only defined for plane cubics")
    point = point.over(curve.field)
    if not curve.contains(point):
        raise NotOnCurve(f"{point} is not on the curve")
    return point


def third_intersection(curve: PlaneCurve, P: ProjPoint, Q: ProjPoint) -> ProjPoint:
    """
    The third point where the line through P and Q (the tangent when P = Q) meets the cubic.

    :param curve: A plane cubic.
    :param P: A point on the curve.
    :param Q: A point on the curve.
    :return: The residual point R, so P + Q + R is a line section.
    """
    field = curve.field
    P = _on_curve(curve, P)
    Q = _on_curve(curve, Q)
    if P != Q:
        # F(lP + mQ) = lm (l grad F(P).Q + m grad F(Q).P)
        a = _dot(field, curve.gradient(P), Q.coords)
        b = _dot(field, curve.gradient(Q), P.coords)
        if field.is_zero(a) and field.is_zero(b):
            raise DegenerateLine(f"the line through {P} and {Q} lies in the curve")
        coords = [field.sub(field.mul(b, x), field.mul(a, y)) for x, y in zip(P.coords, Q.coords)]
        return ProjPoint(coords, field)
    grad = curve.gradient(P)
    if all(field.is_zero(g) for g in grad):
        raise DegenerateLine(f"no tangent line at the singular point {P}")
    D = line_direction(field, grad, P.coords)
    # F(lP + mD) = m^2 (l grad F(D).P + m F(D))
    g = _dot(field, curve.gradient(D), P.coords)
    f = curve.evaluate(D)
    if field.is_zero(g) and field.is_zero(f):
        raise DegenerateLine(f"the tangent line at {P} lies in the curve")
    coords = [field.sub(field.mul(f, x), field.mul(g, d)) for x, d in zip(P.coords, D)]
    return ProjPoint(coords, field)


class CubicWithOrigin:
    """
    A smooth plane cubic with a chosen origin for the chord-tangent group law.
    """

    def __init__(self, curve: PlaneCurve, origin: ProjPoint):
        """
        :param curve: A smooth ternary cubic over F_p (or the rationals).
        :param origin: A point on the curve with nonzero gradient.
        """
        origin = _on_curve(curve, origin)
        if all(curve.field.is_zero(g) for g in curve.gradient(origin)):
            raise DegeneratePoint(f"origin {origin} is a singular point of the curve")
        self.curve: PlaneCurve = curve
        self.origin: ProjPoint = origin
        self._origin_tangent: ProjPoint = third_intersection(curve, origin, origin)

    def add(self, P: ProjPoint, Q: ProjPoint) -> ProjPoint:
        return third_intersection(self.curve, third_intersection(self.curve, P, Q), self.origin)

    def neg(self, P: ProjPoint) -> ProjPoint:
        return third_intersection(self.curve, P, self._origin_tangent)

    def multiple(self, m: int, P: ProjPoint) -> ProjPoint:
        """
        m * P for m >= 0 by repeated addition.
        """
        result = self.origin
        for _ in range(m):
            result = self.add(result, P)
        return result

    def order(self, P: ProjPoint, bound: int) -> int:
        """
        The least m <= bound with m * P = o, else NotFound.
        """
        P = P.over(self.curve.field)
        current = P
        for m in range(1, bound + 1):
            if current == self.origin:
                return m
            current = self.add(current, P)
        raise NotFound(f"{P} has no order <= {bound}")


def cubic_add(G: CubicWithOrigin, P: ProjPoint, Q: ProjPoint) -> ProjPoint:
    return G.add(P, Q)


def cubic_neg(G: CubicWithOrigin, P: ProjPoint) -> ProjPoint:
    return G.neg(P)


def cubic_order(G: CubicWithOrigin, P: ProjPoint, bound: int) -> int:
    return G.order(P, bound)
