import logging
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, List, Sequence, Tuple

import sympy
from sympy.polys.polyfuncs import symmetrize

from .workbench_errors import UsageError

logger = logging.getLogger(__name__)

DEFAULT_TODD_BOUND = 8


class RationalSeries:
    """
    A truncated power series in t with exact rational coefficients.
    """

    def __init__(self, coeffs: Sequence, prec: int):
        """
        :param coeffs: Coefficients from t^0 upwards; padded with zeros or cut to prec.
        :param prec: Number of coefficients kept, at least 1.
        """
        if prec < 1:
            raise UsageError("series precision must be at least 1")
        values = [Fraction(c) for c in coeffs[:prec]]
        self.coeffs: Tuple[Fraction, ...] = tuple(values + [Fraction(0)] * (prec - len(values)))
        self.prec: int = prec

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n < self.prec else Fraction(0)

    def _common(self, other: 'RationalSeries') -> int:
        return min(self.prec, other.prec)

    def __add__(self, other: 'RationalSeries') -> 'RationalSeries':
        prec = self._common(other)
        return RationalSeries([self[i] + other[i] for i in range(prec)], prec)

    def __sub__(self, other: 'RationalSeries') -> 'RationalSeries':
        prec = self._common(other)
        return RationalSeries([self[i] - other[i] for i in range(prec)], prec)

    def __mul__(self, other: 'RationalSeries') -> 'RationalSeries':
        prec = self._common(other)
        return RationalSeries(
            [sum((self[i] * other[n - i] for i in range(n + 1)), Fraction(0)) for n in range(prec)], prec
        )

    def inverse(self) -> 'RationalSeries':
        """
        1/f, dividing by the leading unit f_0.
        """
        lead = self[0]
        if lead == 0:
            raise UsageError("series with zero constant term has no inverse")
        result = [1 / lead]
        for n in range(1, self.prec):
            result.append(-sum((self[k] * result[n - k] for k in range(1, n + 1)), Fraction(0)) / lead)
        return RationalSeries(result, self.prec)

    def derivative(self) -> 'RationalSeries':
        return RationalSeries([n * self[n] for n in range(1, self.prec)] or [0], max(1, self.prec - 1))

    def log(self) -> 'RationalSeries':
        """
        log f for f_0 = 1, as the integral of f'/f.
        """
        if self[0] != 1:
            raise UsageError("log needs constant term 1")
        quotient = self.derivative() * self.inverse().truncate(max(1, self.prec - 1))
        return RationalSeries([0] + [quotient[n - 1] / n for n in range(1, self.prec)], self.prec)

    def exp(self) -> 'RationalSeries':
        """
        exp f for f_0 = 0 from g_n = (1/n) sum_k k f_k g_(n-k).
        """
        if self[0] != 0:
            raise UsageError("exp needs constant term 0")
        result = [Fraction(1)]
        for n in range(1, self.prec):
            result.append(sum((k * self[k] * result[n - k] for k in range(1, n + 1)), Fraction(0)) / n)
        return RationalSeries(result, self.prec)

    def truncate(self, prec: int) -> 'RationalSeries':
        return RationalSeries(self.coeffs, min(prec, self.prec))

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalSeries) and self.prec == other.prec and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.coeffs, self.prec))

    def __str__(self) -> str:
        terms = []
        for n, c in enumerate(self.coeffs):
            if c == 0:
                continue
            monomial = "" if n == 0 else ("t" if n == 1 else f"t^{n}")
            if not monomial:
                terms.append(str(c))
            elif c == 1:
                terms.append(monomial)
            else:
                terms.append(f"{c}*{monomial}")
        terms.append(f"O(t^{self.prec})")
        return " + ".join(terms)


@lru_cache(maxsize=None)
def td_series(prec: int) -> RationalSeries:
    """
    td(t) = t / (1 - exp(-t)), by inverting (1 - exp(-t)) / t.
    """
    quotient = RationalSeries([Fraction((-1) ** n, factorial(n + 1)) for n in range(prec)], prec)
    return quotient.inverse()


def log_td_coefficient(k: int) -> Fraction:
    return td_series(k + 1).log()[k]


def power_sum(m: int) -> Fraction:
    """
    sum_j beta_j^m where td(t) = prod_j (1 + beta_j t), read off log td.
    """
    if m < 1:
        raise UsageError("power sums are indexed from 1")
    return (-1) ** (m - 1) * m * log_td_coefficient(m)


def beta_power_sum(m: int) -> Fraction:
    """
    The same power sums from the coefficients of td by Newton's identities.
    """
    if m < 1:
        raise UsageError("power sums are indexed from 1")
    e = td_series(m + 1)
    sums: List[Fraction] = []
    for k in range(1, m + 1):
        value = (-1) ** (k - 1) * k * e[k]
        for i in range(1, k):
            value += (-1) ** (i - 1) * e[i] * sums[k - i - 1]
        sums.append(value)
    return sums[m - 1]


# ---------- Polynomials in Chern classes ----------

def chern_symbols(m: int) -> Tuple[sympy.Symbol, ...]:
    return sympy.symbols(" ".join(f"c{i}" for i in range(1, m + 1)), seq=True)


class ChernPolynomial:
    """
    A polynomial in c_1..c_m with rational coefficients, c_i of grade i.
    """

    def __init__(self, m: int, poly: sympy.Poly):
        """
        :param m: Number of Chern classes.
        :param poly: Polynomial over QQ in chern_symbols(m).
        """
        self.m: int = m
        self.poly: sympy.Poly = poly

    @classmethod
    def from_expression(cls, m: int, expression) -> 'ChernPolynomial':
        return cls(m, sympy.Poly(expression, *chern_symbols(m), domain=sympy.QQ))

    def grade(self, exps: Sequence[int]) -> int:
        return sum((i + 1) * e for i, e in enumerate(exps))

    def terms(self) -> List[Tuple[Tuple[int, ...], Fraction]]:
        """
        Nonzero terms in graded-lexicographic order.
        """
        terms = []
        for exps, c in self.poly.as_dict().items():
            c = sympy.Rational(c)
            if c != 0:
                terms.append((tuple(exps), Fraction(int(c.p), int(c.q))))
        return sorted(terms, key=lambda term: (-self.grade(term[0]), tuple(-e for e in term[0])))

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        for term, c in self.terms():
            if term == tuple(exps):
                return c
        return Fraction(0)

    def top_coefficient(self) -> Fraction:
        """
        Coefficient of the monomial c_m.
        """
        return self.coefficient(tuple(0 for _ in range(self.m - 1)) + (1,))

    def evaluate(self, values: Sequence[int]) -> Fraction:
        value = sympy.Rational(self.poly.as_expr().subs(dict(zip(chern_symbols(self.m), values))))
        return Fraction(int(value.p), int(value.q))

    def max_grade(self) -> int:
        return max((self.grade(exps) for exps, _ in self.terms()), default=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChernPolynomial) and self.m == other.m and self.terms() == other.terms()

    def __str__(self) -> str:
        pieces = []
        for exps, c in self.terms():
            monomial = "*".join(
                f"c{i + 1}" if e == 1 else f"c{i + 1}^{e}" for i, e in enumerate(exps) if e
            )
            if not monomial:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(monomial)
            else:
                pieces.append(f"{c}*{monomial}")
        return " + ".join(pieces) if pieces else "0"


def chern_power_sums(m: int) -> List[sympy.Poly]:
    """
    P_1..P_m, the power sums of the Chern roots, as polynomials in c_1..c_m.
    """
    c = chern_symbols(m)
    sums: List[sympy.Poly] = []
    for k in range(1, m + 1):
        value = sympy.Poly((-1) ** (k - 1) * k * c[k - 1], *c, domain=sympy.QQ)
        for i in range(1, k):
            value += sympy.Poly((-1) ** (i - 1) * c[i - 1], *c, domain=sympy.QQ) * sums[k - i - 1]
        sums.append(value)
    return sums


def _check_bound(m: int, bound: int) -> None:
    if m < 1:
        raise UsageError("Todd polynomials are indexed from 1")
    if m > bound:
        raise UsageError(f"Todd_{m} is beyond the configured bound {bound}")


def todd_polynomial(m: int, bound: int = DEFAULT_TODD_BOUND) -> ChernPolynomial:
    """
    Todd_m in c_1..c_m as the grade-m part of exp(sum_k s_k P_k), s_k = [t^k] log td.

    :param m: The dimension.
    :param bound: Largest m allowed.
    :return: The ChernPolynomial.
    """
    _check_bound(m, bound)
    c = chern_symbols(m)
    sums = chern_power_sums(m)
    weighted = [sympy.Poly(0, *c, domain=sympy.QQ)] + [
        sums[k - 1] * sympy.Rational(log_td_coefficient(k).numerator, log_td_coefficient(k).denominator)
        for k in range(1, m + 1)
    ]
    # Exp recurrence on the grading: g_n = (1/n) sum_k k L_k g_(n-k).
    graded = [sympy.Poly(1, *c, domain=sympy.QQ)]
    for n in range(1, m + 1):
        total = sympy.Poly(0, *c, domain=sympy.QQ)
        for k in range(1, n + 1):
            total += weighted[k] * graded[n - k] * k
        graded.append(total * sympy.Rational(1, n))
    logger.debug("Todd_%d has %d terms", m, len(graded[m].terms()))
    return ChernPolynomial(m, graded[m])


def todd_polynomial_direct(m: int, bound: int = DEFAULT_TODD_BOUND) -> ChernPolynomial:
    """
    Todd_m from prod_i td(gamma_i t) in m symbolic roots, reduced to Chern classes.
    """
    _check_bound(m, bound)
    gammas = sympy.symbols(" ".join(f"g{i}" for i in range(1, m + 1)), seq=True)
    t = sympy.Symbol("t")
    td = td_series(m + 1)
    product = sympy.Poly(1, t, *gammas, domain=sympy.QQ)
    for gamma in gammas:
        factor = sympy.Poly(
            sum(sympy.Rational(td[j].numerator, td[j].denominator) * (gamma * t) ** j for j in range(m + 1)),
            t, *gammas, domain=sympy.QQ,
        )
        product = product * factor
        # Drop t-degree above m.
        product = sympy.Poly.from_dict(
            {exps: coeff for exps, coeff in product.terms() if exps[0] <= m}, t, *gammas, domain=sympy.QQ
        )
    top = sympy.expand(product.as_expr()).coeff(t, m)
    symmetric, remainder, definitions = symmetrize(sympy.expand(top), *gammas, formal=True)
    if remainder != 0:
        raise UsageError(f"Todd_{m} root expansion is not symmetric")
    c = chern_symbols(m)
    expression = symmetric.subs({symbol: c[i] for i, (symbol, _) in enumerate(definitions)}, simultaneous=True)
    return ChernPolynomial.from_expression(m, sympy.expand(expression))


def top_chern_coefficient(m: int, bound: int = DEFAULT_TODD_BOUND) -> Fraction:
    """
    Coefficient of c_m in Todd_m: from the full polynomial up to the bound, beyond it from
    the power sums of the td coefficients.
    """
    if m < 1:
        raise UsageError("Todd polynomials are indexed from 1")
    if m <= bound:
        return todd_polynomial(m, bound).top_coefficient()
    return beta_power_sum(m)


def projective_space_chern_classes(m: int) -> List[int]:
    """c_i(P^m) = binomial(m+1, i)."""
    return [comb(m + 1, i) for i in range(1, m + 1)]


def todd_genus_projective(m: int, bound: int = DEFAULT_TODD_BOUND) -> Fraction:
    return todd_polynomial(m, bound).evaluate(projective_space_chern_classes(m))


def odd_vanishing_table(max_m: int, bound: int = DEFAULT_TODD_BOUND) -> List[Tuple[int, Fraction, Fraction]]:
    """
    (m, top Chern coefficient, power sum) for odd 3 <= m <= max_m.
    """
    return [(m, top_chern_coefficient(m, bound), power_sum(m)) for m in range(3, max_m + 1, 2)]


def todd_coefficients(prec: int) -> Dict[int, Fraction]:
    return {n: td_series(prec)[n] for n in range(prec)}
