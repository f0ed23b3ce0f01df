import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from .workbench_errors import NotPrime, UsageError

logger = logging.getLogger(__name__)


class PowerSeries:
    """
    A power series in q with integer coefficients, known up to (but excluding) q^prec.
    """

    def __init__(self, coeffs: Sequence[int], prec: int):
        """
        :param coeffs: Coefficients from q^0 upwards; extra entries are dropped, missing ones are zero.
        :param prec: Truncation order, at least 1.
        """
        if prec < 1:
            raise UsageError("a power series needs prec >= 1")
        values = [int(c) for c in list(coeffs)[:prec]]
        self.coeffs: Tuple[int, ...] = tuple(values + [0] * (prec - len(values)))
        self.prec: int = prec

    @classmethod
    def one(cls, prec: int) -> 'PowerSeries':
        return cls([1], prec)

    def truncate(self, prec: int) -> 'PowerSeries':
        return PowerSeries(self.coeffs, min(prec, self.prec))

    def __getitem__(self, n: int) -> int:
        if not 0 <= n < self.prec:
            raise IndexError(f"coefficient {n} is beyond the precision {self.prec}")
        return self.coeffs[n]

    def __add__(self, other: 'PowerSeries') -> 'PowerSeries':
        prec = min(self.prec, other.prec)
        return PowerSeries([a + b for a, b in zip(self.coeffs[:prec], other.coeffs[:prec])], prec)

    def __sub__(self, other: 'PowerSeries') -> 'PowerSeries':
        prec = min(self.prec, other.prec)
        return PowerSeries([a - b for a, b in zip(self.coeffs[:prec], other.coeffs[:prec])], prec)

    def __mul__(self, other: 'PowerSeries') -> 'PowerSeries':
        prec = min(self.prec, other.prec)
        result = [0] * prec
        right = [(j, b) for j, b in enumerate(other.coeffs[:prec]) if b]
        for i, a in enumerate(self.coeffs[:prec]):
            if not a:
                continue
            for j, b in right:
                if i + j >= prec:
                    break
                result[i + j] += a * b
        return PowerSeries(result, prec)

    def __pow__(self, exponent: int) -> 'PowerSeries':
        return self.power(exponent)

    def power(self, exponent: int) -> 'PowerSeries':
        """
        Integer power. Negative exponents need constant term 1.

        For constant term 1 this uses the recurrence from f * (f^r)' = r * f' * f^r,
        which needs one pass over the nonzero coefficients of f per output coefficient.
        """
        if exponent >= 0 and self.coeffs[0] != 1:
            result = PowerSeries.one(self.prec)
            base = self
            while exponent:
                if exponent & 1:
                    result = result * base
                base = base * base
                exponent >>= 1
            return result
        if self.coeffs[0] != 1:
            raise UsageError("negative powers need constant term 1")
        nonzero = [(k, f) for k, f in enumerate(self.coeffs) if k and f]
        g = [1] + [0] * (self.prec - 1)
        for n in range(1, self.prec):
            total = 0
            for k, f in nonzero:
                if k > n:
                    break
                total += ((exponent + 1) * k - n) * f * g[n - k]
            if total % n:
                raise ArithmeticError("non-integral coefficient in a unit power")
            g[n] = total // n
        return PowerSeries(g, self.prec)

    def substitute_power(self, d: int) -> 'PowerSeries':
        """
        q -> q^d, keeping the precision.
        """
        result = [0] * self.prec
        for n, c in enumerate(self.coeffs):
            if n * d >= self.prec:
                break
            result[n * d] = c
        return PowerSeries(result, self.prec)

    def shift(self, k: int) -> 'PowerSeries':
        """
        Multiply by q^k, keeping the precision.
        """
        return PowerSeries([0] * k + list(self.coeffs[:max(0, self.prec - k)]), self.prec)

    def __eq__(self, other) -> bool:
        return isinstance(other, PowerSeries) and self.prec == other.prec and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.coeffs, self.prec))

    def __str__(self) -> str:
        terms = []
        for n, c in enumerate(self.coeffs):
            if not c:
                continue
            monomial = "" if n == 0 else ("q" if n == 1 else f"q^{n}")
            if not monomial:
                text = str(abs(c))
            elif abs(c) == 1:
                text = monomial
            else:
                text = f"{abs(c)}*{monomial}"
            if not terms:
                terms.append(text if c > 0 else f"-{text}")
            else:
                terms.append(f"+ {text}" if c > 0 else f"- {text}")
        terms.append(f"+ O(q^{self.prec})")
        return " ".join(terms) if len(terms) > 1 else f"O(q^{self.prec})"


def euler_function(prec: int) -> PowerSeries:
    """
    prod_{m>=1} (1 - q^m) by the pentagonal number theorem.
    """
    coeffs = [0] * prec
    j = 0
    while True:
        placed = False
        for k in ((j, -j) if j else (0,)):
            n = k * (3 * k - 1) // 2
            if n < prec:
                coeffs[n] += -1 if k % 2 else 1
                placed = True
        if not placed:
            break
        j += 1
    return PowerSeries(coeffs, prec)


class EtaQuotient:
    """
    A product of rescaled eta functions, prod eta(d z)^(r_d).
    """

    def __init__(self, factors: Sequence[Tuple[int, int]]):
        """
        :param factors: (d, r) pairs with d >= 1 and r != 0.
        """
        for d, r in factors:
            if d < 1 or r == 0:
                raise UsageError(f"bad eta factor ({d}, {r})")
        self.factors: Tuple[Tuple[int, int], ...] = tuple(factors)

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(r for _, r in self.factors), 2)

    @property
    def q_order(self) -> Fraction:
        return Fraction(sum(d * r for d, r in self.factors), 24)

    def __eq__(self, other) -> bool:
        return isinstance(other, EtaQuotient) and self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        pieces = []
        for d, r in self.factors:
            base = "eta(z)" if d == 1 else f"eta({d}z)"
            pieces.append(base if r == 1 else f"{base}^{r}")
        return "*".join(pieces)


def eta_expand(recipe: EtaQuotient, prec: int) -> PowerSeries:
    """
    Expand q^(q-order) * prod_d prod_m (1 - q^(dm))^(r_d) up to q^prec.

    :param recipe: The eta quotient.
    :param prec: Number of coefficients, at least 1.
    :return: The integer power series.
    """
    if prec < 1:
        raise UsageError("eta_expand needs prec >= 1")
    order = recipe.q_order
    if order.denominator != 1 or order < 0:
        raise UsageError(f"q-order {order} of {recipe} is not a nonnegative integer")
    shift = int(order)
    inner = max(1, prec - shift)
    product = PowerSeries.one(inner)
    base = euler_function(inner)
    for d, r in recipe.factors:
        product = product * base.power(r).substitute_power(d)
    return PowerSeries(product.coeffs, prec).shift(shift) if shift else PowerSeries(product.coeffs, prec)


class DivisorSeries:
    """
    1 + scale * sum_n (sum_{d | n} w(d)) q^n with w(d) = d^power * signs[d mod modulus].

    Covers the weight-2 Eisenstein series of level 2 and the theta series of the hexagonal
    lattice, the factors that turn an eta quotient into a form with no eta-quotient recipe.
    """

    def __init__(self, weight: int, scale: int, power: int, modulus: int, signs: Sequence[int], name: str):
        if len(signs) != modulus:
            raise UsageError(f"{name}: {len(signs)} signs for modulus {modulus}")
        self.weight: int = weight
        self.scale: int = scale
        self.power: int = power
        self.modulus: int = modulus
        self.signs: Tuple[int, ...] = tuple(signs)
        self.name: str = name

    def expand(self, prec: int) -> PowerSeries:
        coeffs = [1] + [0] * (prec - 1)
        for d in range(1, prec):
            w = d ** self.power * self.signs[d % self.modulus]
            if w:
                for n in range(d, prec, d):
                    coeffs[n] += self.scale * w
        return PowerSeries(coeffs, prec)

    def __str__(self) -> str:
        return self.name


class NewformSpec:
    """
    A rational newform of level N and weight k realised as an eta quotient, possibly times a
    divisor series. Coefficients are expanded on demand and the longest expansion is kept.
    """

    def __init__(self, level: int, weight: int, recipe: EtaQuotient, label: str,
                 multiplier: Optional[DivisorSeries] = None, character: Optional[int] = None):
        """
        :param level: The level N.
        :param weight: The weight k.
        :param recipe: Eta quotient of q-order 1, of weight k less the multiplier's weight.
        :param label: Registry label, "N.k".
        :param multiplier: Optional divisor series factor with constant term 1.
        :param character: Odd prime q when the nebentypus is n -> (n/q); None for trivial.
        """
        extra = multiplier.weight if multiplier is not None else 0
        if recipe.weight + extra != weight or recipe.q_order != 1:
            raise UsageError(f"{recipe} does not have weight {weight} and q-order 1")
        if any(level % d for d, _ in recipe.factors):
            raise UsageError(f"{recipe} uses a divisor argument not dividing {level}")
        if character is not None and level % character:
            raise UsageError(f"character modulus {character} does not divide {level}")
        self.level: int = level
        self.weight: int = weight
        self.recipe: EtaQuotient = recipe
        self.label: str = label
        self.multiplier: Optional[DivisorSeries] = multiplier
        self.character: Optional[int] = character
        self._expansion: Optional[PowerSeries] = None

    def character_value(self, n: int) -> int:
        if self.character is None:
            return 1 if math.gcd(n, self.level) == 1 else 0
        return int(sympy.jacobi_symbol(n % self.character, self.character))

    def coefficients(self, prec: int) -> PowerSeries:
        """
        The q-expansion truncated at prec, reusing a longer cached expansion when available.
        """
        if self._expansion is None or self._expansion.prec < prec:
            prec = max(prec, 2)
            expansion = eta_expand(self.recipe, prec)
            if self.multiplier is not None:
                expansion = expansion * self.multiplier.expand(prec)
            self._expansion = expansion
        return self._expansion.truncate(prec)

    def __str__(self) -> str:
        if self.multiplier is None:
            return f"{self.label} = {self.recipe}"
        return f"{self.label} = {self.recipe}*{self.multiplier}"


NEWFORM_REGISTRY: Dict[str, NewformSpec] = {
    spec.label: spec for spec in (
        NewformSpec(1, 12, EtaQuotient([(1, 24)]), "1.12"),
        NewformSpec(2, 8, EtaQuotient([(1, 8), (2, 8)]), "2.8"),
        NewformSpec(3, 6, EtaQuotient([(1, 6), (3, 6)]), "3.6"),
        NewformSpec(4, 6, EtaQuotient([(2, 12)]), "4.6"),
        NewformSpec(5, 4, EtaQuotient([(1, 4), (5, 4)]), "5.4"),
        NewformSpec(6, 4, EtaQuotient([(1, 2), (2, 2), (3, 2), (6, 2)]), "6.4"),
        NewformSpec(11, 2, EtaQuotient([(1, 2), (11, 2)]), "11.2"),
        NewformSpec(2, 10, EtaQuotient([(1, 8), (2, 8)]), "2.10",
                    multiplier=DivisorSeries(2, 24, 1, 2, (0, 1), "E2(2)")),
        NewformSpec(3, 7, EtaQuotient([(1, 6), (3, 6)]), "3.7",
                    multiplier=DivisorSeries(1, 6, 0, 3, (0, 1, -1), "theta(A2)"), character=3),
    )
}

# Gamma_1(N) levels and weights with at most one form.
ADMISSIBLE_PAIRS: Tuple[Tuple[int, str], ...] = (
    (1, "<= 23, 25, 26, odd"),
    (2, "<= 11, odd"),
    (3, "<= 8"),
    (4, "<= 6"),
    (5, "<= 4"),
    (6, "<= 4"),
    (7, "<= 3"),
    (8, "<= 3"),
    (9, "2"),
    (10, "2"),
    (11, "2"),
    (12, "2"),
    (14, "2"),
    (15, "2"),
)


def select_newform(level: int, weight: int) -> NewformSpec:
    """
    Look up a registry form by level and weight.

    :param level: The level N.
    :param weight: The weight k.
    :return: The NewformSpec; UsageError when the pair is not in the registry.
    """
    spec = NEWFORM_REGISTRY.get(f"{level}.{weight}")
    if spec is None:
        raise UsageError(f"no registry form of level {level} and weight {weight}")
    return spec


def admissible_pairs() -> List[Tuple[int, str, List[str]]]:
    """
    The table of levels with small cusp-form spaces, with the registry labels realising each row.
    """
    rows = []
    for level, weights in ADMISSIBLE_PAIRS:
        realised = [label for label, spec in NEWFORM_REGISTRY.items() if spec.level == level]
        rows.append((level, weights, realised))
    return rows


def ap(spec: NewformSpec, n: int) -> int:
    """
    The n-th coefficient of the newform.
    """
    if n < 1:
        raise UsageError("coefficients are indexed from 1")
    return spec.coefficients(n + 1)[n]


class HeckeViolation:
    """
    One failed coefficient identity.
    """

    def __init__(self, identity: str, index: int, expected: int, actual: int):
        """
        :param identity: "normalisation", "multiplicative", "hecke_recursion" or "bad_prime_power".
        :param index: The coefficient index where the identity fails.
        :param expected: Value predicted from smaller coefficients.
        :param actual: The stored coefficient.
        """
        self.identity: str = identity
        self.index: int = index
        self.expected: int = expected
        self.actual: int = actual

    def __eq__(self, other) -> bool:
        return isinstance(other, HeckeViolation) and (
            (self.identity, self.index, self.expected, self.actual)
            == (other.identity, other.index, other.expected, other.actual)
        )

    def __str__(self) -> str:
        return f"{self.identity} at n={self.index}: expected {self.expected}, found {self.actual}"


def hecke_check(spec: NewformSpec, prec: int,
                coefficients: Optional[Sequence[int]] = None) -> List[HeckeViolation]:
    """
    Check the eigenform identities on all indices below prec.

    Every n > 1 is split as p^e * m with p its smallest prime factor; the multiplicative
    identity a_n = a_(p^e) a_m, together with the prime-power identities, is equivalent to
    multiplicativity on coprime pairs.

    :param spec: The form.
    :param prec: Number of coefficients to check, at least 2.
    :param coefficients: Optional replacement coefficient list, indexed from 0.
    :return: Violations in increasing index order; empty on success.
    """
    if prec < 2:
        raise UsageError("hecke_check needs prec >= 2")
    a = list(coefficients) if coefficients is not None else list(spec.coefficients(prec).coeffs)
    if len(a) < prec:
        raise UsageError(f"{len(a)} coefficients given, {prec} needed")
    violations: List[HeckeViolation] = []
    if a[1] != 1:
        violations.append(HeckeViolation("normalisation", 1, 1, a[1]))
    weight_power = spec.weight - 1
    for n in range(2, prec):
        factors = sympy.factorint(n)
        p = min(factors)
        e = factors[p]
        prime_power = p ** e
        if prime_power != n:
            expected = a[prime_power] * a[n // prime_power]
            if expected != a[n]:
                violations.append(HeckeViolation("multiplicative", n, expected, a[n]))
        elif e >= 2:
            if spec.level % p:
                expected = a[p] * a[n // p] - spec.character_value(p) * p ** weight_power * a[n // (p * p)]
                identity = "hecke_recursion"
            else:
                expected = a[p] ** e
                identity = "bad_prime_power"
            if expected != a[n]:
                violations.append(HeckeViolation(identity, n, expected, a[n]))
    logger.debug("hecke_check %s to %d: %d violations", spec.label, prec, len(violations))
    return violations


def euler_factor(spec: NewformSpec, p: int) -> Tuple[int, ...]:
    """
    Local Euler polynomial at p, as coefficients of 1, T, T^2.

    :param spec: The form.
    :param p: A prime.
    :return: (1, -a_p, chi(p) p^(k-1)) for p not dividing N, (1, -a_p) otherwise.
    """
    if not sympy.isprime(p):
        raise NotPrime(f"{p} is not prime")
    a_p = ap(spec, p)
    if spec.level % p == 0:
        return 1, -a_p
    return 1, -a_p, spec.character_value(p) * p ** (spec.weight - 1)


def deligne_bound_holds(spec: NewformSpec, p: int) -> bool:
    """
    a_p^2 <= 4 p^(k-1), compared exactly.
    """
    return ap(spec, p) ** 2 <= 4 * p ** (spec.weight - 1)
