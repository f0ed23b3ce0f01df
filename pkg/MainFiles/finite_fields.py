from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
import sympy

from .workbench_errors import BadReduction, NotPrime, UsageError

Scalar = Union[int, Fraction]
ExtensionElement = Tuple[int, int]


class RationalField:
    """
    The field of rationals, with values held as Fraction.
    """

    characteristic: int = 0

    def element(self, value) -> Fraction:
        if isinstance(value, tuple):
            raise UsageError(f"{value} is not a rational number")
        return Fraction(value)

    def add(self, a, b) -> Fraction:
        return a + b

    def sub(self, a, b) -> Fraction:
        return a - b

    def mul(self, a, b) -> Fraction:
        return a * b

    def neg(self, a) -> Fraction:
        return -a

    def inv(self, a) -> Fraction:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return 1 / Fraction(a)

    def is_zero(self, a) -> bool:
        return a == 0

    def format(self, a) -> str:
        return str(a)

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalField)

    def __hash__(self) -> int:
        return hash("QQ")

    def __str__(self) -> str:
        return "QQ"


class PrimeField:
    """
    The prime field F_p with values held as Python ints in [0, p).
    """

    def __init__(self, p: int):
        """
        :param p: The prime modulus.
        """
        if not isinstance(p, int) or not sympy.isprime(p):
            raise NotPrime(f"{p} is not prime")
        self.p: int = p
        self.characteristic: int = p

    def element(self, value) -> int:
        """
        Reduce an integer or rational into [0, p).

        :param value: An int or a Fraction.
        :return: The residue.
        """
        if isinstance(value, tuple):
            raise UsageError(f"{value} is not an element of F_{self.p}")
        if isinstance(value, Fraction):
            if value.denominator % self.p == 0:
                raise BadReduction(f"denominator of {value} vanishes mod {self.p}")
            return value.numerator * pow(value.denominator, -1, self.p) % self.p
        return int(value) % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("zero has no inverse")
        return pow(a, -1, self.p)

    def is_zero(self, a: int) -> bool:
        return a % self.p == 0

    def format(self, a: int) -> str:
        return str(a)

    def chi(self, value: int) -> int:
        """
        Quadratic character of value; 0 on zero.
        """
        value %= self.p
        if value == 0:
            return 0
        if self.p == 2:
            return 1
        return 1 if pow(value, (self.p - 1) // 2, self.p) == 1 else -1

    def chi_table(self) -> np.ndarray:
        """
        Quadratic character of every residue, as an int64 array indexed by residue.
        """
        return _chi_table(self.p)

    def nonresidue(self) -> int:
        """
        The smallest quadratic nonresidue (odd p only).
        """
        if self.p == 2:
            raise UsageError("F_2 has no quadratic nonresidue")
        return next(n for n in range(2, self.p) if self.chi(n) == -1)

    def sqrt(self, value: int) -> Optional[int]:
        """
        The smaller square root of value, or None for a nonresidue.
        """
        value %= self.p
        if value == 0:
            return 0
        return sympy.sqrt_mod(value, self.p)

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF", self.p))

    def __str__(self) -> str:
        return f"GF({self.p})"


class QuadraticExtension:
    """
    F_{p^2} = F_p(w) with w^2 = n, n the least nonresidue; values are pairs (a, b) meaning a + b*w.
    Used only by the singular-point diagnostics.
    """

    def __init__(self, p: int):
        self.base: PrimeField = PrimeField(p)
        self.p: int = p
        self.characteristic: int = p
        self.n: int = self.base.nonresidue()

    def element(self, value) -> ExtensionElement:
        if isinstance(value, tuple):
            return value[0] % self.p, value[1] % self.p
        return self.base.element(value), 0

    def add(self, a: ExtensionElement, b: ExtensionElement) -> ExtensionElement:
        return (a[0] + b[0]) % self.p, (a[1] + b[1]) % self.p

    def sub(self, a: ExtensionElement, b: ExtensionElement) -> ExtensionElement:
        return (a[0] - b[0]) % self.p, (a[1] - b[1]) % self.p

    def mul(self, a: ExtensionElement, b: ExtensionElement) -> ExtensionElement:
        return extension_mul(a, b, self.n, self.p)

    def neg(self, a: ExtensionElement) -> ExtensionElement:
        return -a[0] % self.p, -a[1] % self.p

    def inv(self, a: ExtensionElement) -> ExtensionElement:
        norm = (a[0] * a[0] - self.n * a[1] * a[1]) % self.p
        if norm == 0:
            raise ZeroDivisionError("zero has no inverse")
        scale = pow(norm, -1, self.p)
        return a[0] * scale % self.p, -a[1] * scale % self.p

    def is_zero(self, a: ExtensionElement) -> bool:
        return a[0] % self.p == 0 and a[1] % self.p == 0

    def format(self, a: ExtensionElement) -> str:
        if a[1] == 0:
            return str(a[0])
        return f"{a[0]}+{a[1]}w"

    def __eq__(self, other) -> bool:
        return isinstance(other, QuadraticExtension) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF2", self.p))

    def __str__(self) -> str:
        return f"GF({self.p}^2)"


def extension_mul(a, b, n: int, p: int):
    """
    Multiply a + a'w by b + b'w where w^2 = n. Works elementwise on numpy arrays too.
    """
    return (a[0] * b[0] + n * (a[1] * b[1] % p)) % p, (a[0] * b[1] + a[1] * b[0]) % p


@lru_cache(maxsize=None)
def _chi_table(p: int) -> np.ndarray:
    table = np.zeros(p, dtype=np.int64)
    if p == 2:
        table[1] = 1
        return table
    squares = np.unique((np.arange(1, p, dtype=np.int64) ** 2) % p)
    table[1:] = -1
    table[squares] = 1
    return table
