"""
Exact scalar arithmetic used throughout the shelf engine.

This module provides:
- Binomial coefficients with the convention that out-of-range arguments give zero.
- Falling factorials x(x-1)...(x-t+1), zero when t > x.
- Bernoulli numbers with B_1 = -1/2, computed by the defining recurrence and memoized.
- The Bernoulli identity residual and the constants used by the eigenvector norm bounds.
- The "p/q" string form used for every rational written to JSON or CSV.

All scalars are ``fractions.Fraction`` values, which are kept in lowest terms with a positive denominator.
"""
import math
import threading
from fractions import Fraction

from loguru import logger

from shelf_engine.shelf_lib.globals import VERBOSE

Rational = Fraction

# Rational brackets for pi: 333/106 < pi < 355/113.
PI_LOWER = Fraction(333, 106)
PI_UPPER = Fraction(355, 113)


class BernoulliTable:
    """
    Memo of Bernoulli numbers B_0..B_k_max.

    The table grows on demand. Growth is guarded by a lock so that concurrent readers never observe a partially
    filled table.
    """

    def __init__(self):
        self._values: list[Fraction] = [Fraction(1)]
        self._lock = threading.Lock()

    @property
    def k_max(self) -> int:
        return len(self._values) - 1

    def values(self) -> tuple[Fraction, ...]:
        return tuple(self._values)

    def get(self, k: int) -> Fraction:
        """
        Returns B_k, extending the table with the recurrence sum_{j=0}^{m} C(m+1, j) B_j = 0 when needed.

        :param k: Index of the Bernoulli number.
        :type k: int
        :return: The exact Bernoulli number B_k.
        :rtype: Fraction
        """
        if k < 0:
            raise ValueError(f"Bernoulli index must be nonnegative, got {k}.")
        if k < len(self._values):
            return self._values[k]

        with self._lock:
            start = len(self._values)
            for m in range(start, k + 1):
                acc = sum((math.comb(m + 1, j) * self._values[j] for j in range(m)), Fraction(0))
                self._values.append(-acc / (m + 1))
            if start <= k:
                VERBOSE and logger.info(f"Bernoulli table extended from B_{start - 1} to B_{k}.")
        return self._values[k]


_BERNOULLI_TABLE = BernoulliTable()


class Numerics:
    """
    Exact scalar helpers. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def binomial(a: int, b: int) -> Fraction:
        """
        Binomial coefficient C(a, b), with C(0, 0) = 1 and C(a, b) = 0 whenever b < 0, b > a or a < 0.

        :param a: Upper index.
        :type a: int
        :param b: Lower index.
        :type b: int
        :return: The binomial coefficient as a Fraction.
        :rtype: Fraction
        """
        if a < 0 or b < 0 or b > a:
            return Fraction(0)
        return Fraction(math.comb(a, b))

    @staticmethod
    def falling_factorial(x: int, t: int) -> Fraction:
        """
        Falling factorial x(x-1)...(x-t+1). Equals 1 for t = 0 and 0 for t > x.

        :param x: Nonnegative base.
        :type x: int
        :param t: Nonnegative number of factors.
        :type t: int
        :return: The falling factorial as a Fraction.
        :rtype: Fraction
        :raises ValueError: If x or t is negative.
        """
        if x < 0 or t < 0:
            raise ValueError(f"Falling factorial needs x >= 0 and t >= 0, got x={x}, t={t}.")
        return Fraction(math.perm(x, t))

    @staticmethod
    def bernoulli(k: int) -> Fraction:
        """Returns the k-th Bernoulli number (B_1 = -1/2)."""
        return _BERNOULLI_TABLE.get(k)

    @staticmethod
    def bernoulli_table() -> BernoulliTable:
        return _BERNOULLI_TABLE

    @staticmethod
    def bernoulli_identity_residual(n: int) -> Fraction:
        """
        Evaluates sum_{k=0}^{n} C(n, k) B_k 2^k - (2 - 2^n) B_n. The identity holds when the result is zero.

        :param n: Positive integer.
        :type n: int
        :return: The exact residual.
        :rtype: Fraction
        """
        if n < 1:
            raise ValueError(f"Bernoulli identity residual needs n >= 1, got {n}.")
        lhs = sum((math.comb(n, k) * Numerics.bernoulli(k) * 2 ** k for k in range(n + 1)), Fraction(0))
        return lhs - (2 - 2 ** n) * Numerics.bernoulli(n)

    @staticmethod
    def a_constant(i: int) -> Fraction:
        """
        A_i = 1 + i + sum_{s=2}^{i} 2^s |B_s| C(i, s), the weight sum bounding the right eigenvectors.

        :param i: Integer i >= 2.
        :type i: int
        :return: The exact value of A_i.
        :rtype: Fraction
        """
        if i < 2:
            raise ValueError(f"A_i is defined for i >= 2, got {i}.")
        tail = sum((2 ** s * abs(Numerics.bernoulli(s)) * math.comb(i, s) for s in range(2, i + 1)), Fraction(0))
        return 1 + i + tail

    @staticmethod
    def bernoulli_bound(m: int, factor: int = 4, pi: Fraction = PI_UPPER) -> Fraction:
        """
        Rational evaluation of factor * (2m)! / (2 pi)^(2m) with pi replaced by a rational bracket.

        With ``pi = PI_UPPER`` the result is below the real bound, so ``|B_2m| <= result`` proves the real
        inequality. With ``pi = PI_LOWER`` the result is above it, so ``|B_2m| > result`` disproves it.

        :param m: Positive integer.
        :type m: int
        :param factor: Leading constant of the bound.
        :type factor: int
        :param pi: Rational stand-in for pi.
        :type pi: Fraction
        :return: The rational bound.
        :rtype: Fraction
        """
        if m < 1:
            raise ValueError(f"Bernoulli bound needs m >= 1, got {m}.")
        return factor * Fraction(math.factorial(2 * m)) / (2 * pi) ** (2 * m)

    @staticmethod
    def bernoulli_bound_holds(m: int, factor: int = 4) -> bool:
        """Proves |B_2m| <= factor * (2m)! / (2 pi)^(2m) using the upper bracket for pi."""
        return abs(Numerics.bernoulli(2 * m)) <= Numerics.bernoulli_bound(m, factor, PI_UPPER)

    @staticmethod
    def to_str(value: Fraction | int) -> str:
        """Serializes a rational as "numerator/denominator" (integers as "5/1")."""
        value = Fraction(value)
        return f"{value.numerator}/{value.denominator}"

    @staticmethod
    def from_str(text: str) -> Fraction:
        """
        Parses "p/q" or "p" into a Fraction.

        :raises ValueError: If the text is not a rational literal or the denominator is zero.
        """
        try:
            return Fraction(text.strip())
        except ZeroDivisionError as e:
            raise ValueError(f"Rational literal '{text}' has a zero denominator.") from e
        except (ValueError, AttributeError) as e:
            raise ValueError(f"Invalid rational literal '{text}'.") from e

    @staticmethod
    def sign(exponent: int) -> int:
        """(-1)^exponent for any integer exponent, negative ones included."""
        return -1 if exponent % 2 else 1
