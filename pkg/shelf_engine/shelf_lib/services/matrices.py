"""
Exact construction of the matrices attached to the single-shelf shuffle.

This module provides:
- The position matrix M and its factorization M = L(I + P).
- The falling factorial basis B, its closed-form inverse and the diagonal of L in that basis.
- The coefficients c_N(k, m) expanding (N - x) falling m in the falling factorial basis.
- The matrix T of M in the falling factorial basis, and the matrix of P in that basis.
- An enumeration oracle for M that replays every top/bottom transcript of the shuffle.

Builders take 1-based deck positions and card labels (rows i, columns j of M run over 1..n) and 0-based basis
indices (columns of B, rows and columns of T run over 0..n-1), and return 0-based ``RationalMatrix`` storage.
"""
import itertools
import math
from fractions import Fraction

from loguru import logger

from shelf_engine.shelf_lib.globals import VERBOSE
from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix

BRUTE_FORCE_MAX_N = 20


class MatrixBuilder:
    """
    Builds the matrices of the single-shelf shuffle. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def _check_size(n: int) -> None:
        if not isinstance(n, int) or n < 2:
            raise ValueError(f"Deck size must be an integer n >= 2, got {n!r}.")

    @staticmethod
    def position_entry(n: int, i: int, j: int) -> Fraction:
        """
        M(i, j) = 2^-i (C(i-1, j-1) + C(i-1, n-j)), the probability that card i ends at position j.

        :param n: Deck size.
        :type n: int
        :param i: Card label, 1-based.
        :type i: int
        :param j: Deck position, 1-based.
        :type j: int
        :return: The exact probability.
        :rtype: Fraction
        """
        return (Numerics.binomial(i - 1, j - 1) + Numerics.binomial(i - 1, n - j)) / 2 ** i

    @staticmethod
    def position_matrix(n: int) -> RationalMatrix:
        """
        Position matrix M of a single-shelf shuffle of n cards. Doubly stochastic.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The n x n matrix with entry (i-1, j-1) = M(i, j).
        :rtype: RationalMatrix
        :raises ValueError: If n < 2.
        """
        MatrixBuilder._check_size(n)
        return RationalMatrix.from_function(n, n, lambda i, j: MatrixBuilder.position_entry(n, i + 1, j + 1))

    @staticmethod
    def lower_L(n: int) -> RationalMatrix:
        """Lower triangular factor L(i, j) = 2^-i C(i-1, j-1)."""
        MatrixBuilder._check_size(n)
        return RationalMatrix.from_function(n, n, lambda i, j: Numerics.binomial(i, j) / 2 ** (i + 1))

    @staticmethod
    def flip_P(n: int) -> RationalMatrix:
        """Order-reversing permutation matrix, P(i, j) = 1 iff j = n - i + 1."""
        MatrixBuilder._check_size(n)
        return RationalMatrix.from_function(n, n, lambda i, j: 1 if j == n - 1 - i else 0)

    @staticmethod
    def basis_B(n: int) -> RationalMatrix:
        """
        Falling factorial basis: column j holds v^(j)(k) = (k-1) falling j for k = 1..n.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The matrix B whose columns are eigenvectors of L.
        :rtype: RationalMatrix
        """
        MatrixBuilder._check_size(n)
        return RationalMatrix.from_function(n, n, lambda k, j: Numerics.falling_factorial(k, j))

    @staticmethod
    def basis_B_inverse(n: int) -> RationalMatrix:
        """
        Closed-form inverse of B, lower triangular with entry (k, l) = (-1)^(k-l) C(k-1, l-1) / (k-1)!.

        The normalization by (k-1)! is required: without it the rows would hold the monomial coefficients of
        x falling (k-1), which do not invert B.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The exact inverse of ``basis_B(n)``.
        :rtype: RationalMatrix
        """
        MatrixBuilder._check_size(n)

        def entry(k: int, ell: int) -> Fraction:
            if ell > k:
                return Fraction(0)
            return Numerics.sign(k - ell) * Numerics.binomial(k, ell) / math.factorial(k)

        return RationalMatrix.from_function(n, n, entry)

    @staticmethod
    def all_ones(n: int) -> RationalMatrix:
        """All-ones matrix J; J / n is the limit of M^k."""
        MatrixBuilder._check_size(n)
        return RationalMatrix.ones(n)

    @staticmethod
    def lower_diagonal(n: int) -> RationalMatrix:
        """diag(2^-1, ..., 2^-n), the eigenvalues of L in the order of the columns of B."""
        MatrixBuilder._check_size(n)
        return RationalMatrix.diagonal([Fraction(1, 2 ** (j + 1)) for j in range(n)])

    @staticmethod
    def c_coefficients(N: int, m: int) -> tuple[Fraction, ...]:
        """
        Coefficients c_N(k, m) = (-1)^k C(m, k) (N-k)! / (N-m)! for k = 0..m, so that
        (N - x) falling m = sum_k c_N(k, m) x falling k.

        :param N: Nonnegative integer.
        :type N: int
        :param m: Integer with 0 <= m <= N.
        :type m: int
        :return: The coefficients indexed by k.
        :rtype: tuple[Fraction, ...]
        :raises ValueError: If m is negative or exceeds N.
        """
        if N < 0 or m < 0 or m > N:
            raise ValueError(f"c_N(k, m) needs 0 <= m <= N, got N={N}, m={m}.")
        return tuple(
            Numerics.sign(k) * Numerics.binomial(m, k) * Fraction(math.factorial(N - k), math.factorial(N - m))
            for k in range(m + 1))

    @staticmethod
    def t_matrix(n: int) -> RationalMatrix:
        """
        Matrix T of M in the falling factorial basis (0-indexed). Upper triangular with T(j, j) = 2^-j for even j,
        0 for odd j, and T(j, k) = 2^(-1-j) (-1)^j C(k, j) (n-1-j)! / (n-1-k)! above the diagonal.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: T, equal to B^-1 M B.
        :rtype: RationalMatrix
        """
        MatrixBuilder._check_size(n)

        def entry(j: int, k: int) -> Fraction:
            if k < j:
                return Fraction(0)
            if k == j:
                return Fraction(1, 2 ** j) if j % 2 == 0 else Fraction(0)
            return (Numerics.sign(j) * Numerics.binomial(k, j)
                    * Fraction(math.factorial(n - 1 - j), math.factorial(n - 1 - k)) / 2 ** (j + 1))

        return RationalMatrix.from_function(n, n, entry)

    @staticmethod
    def flip_in_basis(n: int) -> RationalMatrix:
        """
        Matrix of P in the falling factorial basis: entry (k, j) = c_{n-1}(k, j) for k <= j, 0 below.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: B^-1 P B, computed from the closed form.
        :rtype: RationalMatrix
        """
        MatrixBuilder._check_size(n)
        columns = [MatrixBuilder.c_coefficients(n - 1, j) for j in range(n)]
        return RationalMatrix.from_function(n, n, lambda k, j: columns[j][k] if k <= j else 0)

    @staticmethod
    def brute_force_position_matrix(n: int) -> RationalMatrix:
        """
        Enumerates all 2^n top/bottom transcripts of a single-shelf shuffle of the identity deck and returns the
        exact frequency with which card i ends at position j.

        :param n: Deck size, 2 <= n <= 20.
        :type n: int
        :return: The enumerated position matrix.
        :rtype: RationalMatrix
        :raises ValueError: If n is outside 2..20.
        """
        # Local import: the simulator owns the shuffle mechanics.
        from shelf_engine.shelf_lib.services.simulation import ShuffleSimulator

        if not isinstance(n, int) or not 2 <= n <= BRUTE_FORCE_MAX_N:
            raise ValueError(f"Brute force enumeration supports 2 <= n <= {BRUTE_FORCE_MAX_N}, got {n!r}.")

        deck = tuple(range(1, n + 1))
        counts = [[0] * n for _ in range(n)]
        for tops in itertools.product((True, False), repeat=n):
            shuffled = ShuffleSimulator.apply_flips(deck, [(0, top) for top in tops], 1)
            for position, card in enumerate(shuffled):
                counts[card - 1][position] += 1

        total = 2 ** n
        VERBOSE and logger.info(f"Enumerated {total} shuffle transcripts for n={n}.")
        return RationalMatrix([[Fraction(c, total) for c in row] for row in counts])
