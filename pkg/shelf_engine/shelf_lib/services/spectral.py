"""
Closed-form eigenstructure of the position matrix M and of its representation T in the falling factorial basis.

This module provides:
- Right eigenvectors w^(i) of T and zeta^(i) = B w^(i) of M, for every even i in 0..n-1.
- Left eigenvectors w~^(i) of T and zeta~^(i) = w~^(i) B^-1 of M, normalized so that <zeta~^(i), zeta^(j)> = delta_ij.
- The kernel basis eta^(j) = e_j - e_(n-j+1).
- The rank-one expansion of M^k, the sup-norm bounds on the eigenvectors and the mixing distance bound.
"""
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from loguru import logger

from shelf_engine.shelf_lib.globals import VERBOSE
from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix, Vector, dot, linf


@dataclass(frozen=True)
class EigenSystem:
    """
    Complete spectral data of M for one deck size.

    ``closed_form_signs[i]`` records, for even i >= 2, the global sign s such that the explicit closed form of the
    left eigenvector equals s * zeta~^(i); 0 means neither sign matched.
    """
    n: int
    even_indices: tuple[int, ...]
    right_T: dict[int, Vector]
    right_M: dict[int, Vector]
    left_T: dict[int, Vector]
    left_M: dict[int, Vector]
    kernel: tuple[Vector, ...]
    closed_form_signs: dict[int, int] = field(default_factory=dict)

    def eigenvalue(self, i: int) -> Fraction:
        return Fraction(1, 2 ** i)

    @property
    def nonzero_indices(self) -> tuple[int, ...]:
        """The even indices without 0, the index set of the non-constant part of the M^k expansion."""
        return tuple(i for i in self.even_indices if i != 0)


@dataclass(frozen=True)
class LinfEntry:
    i: int
    right_norm: Fraction
    right_bound: Fraction
    left_norm: Fraction
    left_bound: Fraction

    @property
    def right_ok(self) -> bool:
        return self.right_norm <= self.right_bound

    @property
    def left_ok(self) -> bool:
        return self.left_norm <= self.left_bound


@dataclass(frozen=True)
class LinfReport:
    n: int
    entries: tuple[LinfEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.right_ok and e.left_ok for e in self.entries)


class SpectralHandler:
    """
    Builds and checks the eigenstructure of M from closed forms. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def even_indices(n: int) -> tuple[int, ...]:
        MatrixBuilder._check_size(n)
        return tuple(range(0, n, 2))

    @staticmethod
    def eigenvalues(n: int) -> tuple[Fraction, ...]:
        """Nonzero eigenvalues 2^-i, i even, in decreasing order. The last one is 2^(-2 floor((n-1)/2))."""
        return tuple(Fraction(1, 2 ** i) for i in SpectralHandler.even_indices(n))

    @staticmethod
    def _check_index(n: int, i: int) -> None:
        MatrixBuilder._check_size(n)
        if i % 2:
            raise ValueError(f"Eigen index must be even, got i={i}.")
        if not 0 <= i <= n - 1:
            raise ValueError(f"Eigen index must satisfy 0 <= i <= n-1 = {n - 1}, got i={i}.")

    @staticmethod
    def kernel_basis(n: int) -> tuple[Vector, ...]:
        """
        Kernel vectors eta^(j) = e_j - e_(n-j+1) for 1 <= j <= floor(n/2).

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The floor(n/2) kernel vectors.
        :rtype: tuple[Vector, ...]
        """
        MatrixBuilder._check_size(n)
        basis = []
        for j in range(1, n // 2 + 1):
            vec = [Fraction(0)] * n
            vec[j - 1] = Fraction(1)
            vec[n - j] = Fraction(-1)
            basis.append(tuple(vec))
        return tuple(basis)

    @staticmethod
    def right_eigvec_T(n: int, i: int) -> Vector:
        """
        Eigenvector w^(i) of T for eigenvalue 2^-i:
        w_t = 2^(i-t) B_(i-t) C(i, t) (n-t-1)! / (n-i-1)! for t <= i, and 0 for t > i.

        :param n: Deck size.
        :type n: int
        :param i: Even index with 0 <= i <= n-1.
        :type i: int
        :return: The vector w^(i), 0-indexed by t.
        :rtype: Vector
        :raises ValueError: If i is odd or out of range.
        """
        SpectralHandler._check_index(n, i)
        return tuple(
            2 ** (i - t) * Numerics.bernoulli(i - t) * Numerics.binomial(i, t)
            * Fraction(math.factorial(n - t - 1), math.factorial(n - i - 1))
            if t <= i else Fraction(0)
            for t in range(n))

    @staticmethod
    def right_eigvec_M(n: int, i: int) -> Vector:
        """zeta^(i) = B w^(i), i.e. zeta^(i)(k) = sum_t w_t (k-1) falling t."""
        return MatrixBuilder.basis_B(n).apply(SpectralHandler.right_eigvec_T(n, i))

    @staticmethod
    def left_eigvec_T(n: int, i: int) -> Vector:
        """
        Left eigenvector w~^(i) of T: 0 for t < i, else C(t, i) (n-1-i)! / ((t-i+1) (n-1-t)!).
        Its coordinate at t = i is 1.
        """
        SpectralHandler._check_index(n, i)
        return tuple(
            Numerics.binomial(t, i) * Fraction(math.factorial(n - 1 - i), (t - i + 1) * math.factorial(n - 1 - t))
            if t >= i else Fraction(0)
            for t in range(n))

    @staticmethod
    def left_eigvec_M(n: int, i: int) -> Vector:
        """
        Left eigenvector zeta~^(i) = w~^(i) B^-1, dual to the right eigenvectors. For i = 0 this is (1/n, ..., 1/n).

        :param n: Deck size.
        :type n: int
        :param i: Even index with 0 <= i <= n-1.
        :type i: int
        :return: The left eigenvector, 0-indexed by deck position.
        :rtype: Vector
        """
        return MatrixBuilder.basis_B_inverse(n).apply_left(SpectralHandler.left_eigvec_T(n, i))

    @staticmethod
    def left_eigvec_M_closed_form(n: int, i: int) -> Vector:
        """
        Explicit formula for the left eigenvector, for even i >= 2:
        (1 / (i! (n-i))) [(-1)^(i-a) C(i-1, a-1) + (-1)^(n-1-a) C(i-1, a-1-(n-i))], a = 1..n.

        It agrees with ``left_eigvec_M`` only up to a global sign, see ``EigenSystem.closed_form_signs``.
        """
        SpectralHandler._check_index(n, i)
        if i == 0:
            raise ValueError("The explicit left eigenvector formula needs i >= 2; use (1/n, ..., 1/n) for i = 0.")
        scale = Fraction(1, math.factorial(i) * (n - i))
        return tuple(
            scale * (Numerics.sign(i - a) * Numerics.binomial(i - 1, a - 1)
                     + Numerics.sign(n - 1 - a) * Numerics.binomial(i - 1, a - 1 - (n - i)))
            for a in range(1, n + 1))

    @staticmethod
    def closed_form_sign(n: int, i: int, left: Vector) -> int:
        closed = SpectralHandler.left_eigvec_M_closed_form(n, i)
        if closed == left:
            return 1
        if closed == tuple(-x for x in left):
            return -1
        return 0

    @staticmethod
    def build(n: int) -> EigenSystem:
        """
        Builds the full EigenSystem of M for deck size n. Results are memoized per n.

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The eigenstructure of M.
        :rtype: EigenSystem
        """
        MatrixBuilder._check_size(n)
        return _build_cached(n)

    @staticmethod
    def spectral_power(n: int, k: int) -> RationalMatrix:
        """
        Assembles M^k = (1/n) J + sum_{j even, j >= 2} 2^(-jk) zeta^(j) (x) zeta~^(j).

        :param n: Deck size, n >= 2.
        :type n: int
        :param k: Number of shuffles, k >= 1.
        :type k: int
        :return: The exact k-th power of M.
        :rtype: RationalMatrix
        :raises ValueError: If k < 1, since M is singular and the expansion only reproduces M^k for k >= 1.
        """
        if k < 1:
            raise ValueError(
                f"spectral_power needs k >= 1, got k={k}: M is singular (its kernel has dimension floor(n/2)), so "
                f"the rank-one expansion equals M^k only for k >= 1 and does not reproduce the identity at k = 0.")
        system = SpectralHandler.build(n)
        entries = [[Fraction(1, n)] * n for _ in range(n)]
        for j in system.nonzero_indices:
            weight = Fraction(1, 2 ** (j * k))
            right = system.right_M[j]
            left = system.left_M[j]
            for a in range(n):
                coefficient = weight * right[a]
                if coefficient:
                    row = entries[a]
                    for b in range(n):
                        row[b] += coefficient * left[b]
        return RationalMatrix(entries)

    @staticmethod
    def linf_norms(n: int, system: Optional[EigenSystem] = None) -> LinfReport:
        """
        Sup norms of zeta^(i) and zeta~^(i) against the bounds 4 i! n^i (1 for i = 0) and 2^i / (i! (n-i)).

        :param n: Deck size, n >= 2.
        :type n: int
        :param system: Eigensystem to measure, built for n when omitted.
        :type system: Optional[EigenSystem]
        :return: One entry per even i with norms, bounds and pass flags.
        :rtype: LinfReport
        """
        system = system if system is not None else SpectralHandler.build(n)
        entries = []
        for i in system.even_indices:
            right_bound = Fraction(1) if i == 0 else Fraction(4 * math.factorial(i) * n ** i)
            left_bound = Fraction(2 ** i, math.factorial(i) * (n - i))
            entries.append(LinfEntry(i=i, right_norm=linf(system.right_M[i]), right_bound=right_bound,
                                     left_norm=linf(system.left_M[i]), left_bound=left_bound))
        return LinfReport(n=n, entries=tuple(entries))

    @staticmethod
    def clay_vector(n: int) -> Vector:
        """v(k) = n^2 - 3nk + (3/2) k (k+1) - 1 for k = 1..n; zeta^(2) = (2/3) v when n >= 3."""
        MatrixBuilder._check_size(n)
        return tuple(Fraction(n * n - 3 * n * k - 1) + Fraction(3 * k * (k + 1), 2) for k in range(1, n + 1))

    @staticmethod
    def mixing_distance(n: int, k: int) -> tuple[Fraction, Fraction]:
        """
        Exact max-entry distance ||M^k - J/n|| together with the bound 4 sum_{i even >= 2} 2^(-ik) (2n)^i / (n-i).

        :return: (distance, bound).
        :rtype: tuple[Fraction, Fraction]
        """
        power = SpectralHandler.spectral_power(n, k)
        distance = (power - RationalMatrix.ones(n).scale(Fraction(1, n))).max_abs()
        bound = 4 * sum((Fraction((2 * n) ** i, 2 ** (i * k) * (n - i)) for i in range(2, n, 2)), Fraction(0))
        return distance, bound

    @staticmethod
    def inner(left: Vector, right: Vector) -> Fraction:
        return dot(left, right)


@functools.lru_cache(maxsize=128)
def _build_cached(n: int) -> EigenSystem:
    even = SpectralHandler.even_indices(n)
    b = MatrixBuilder.basis_B(n)
    b_inv = MatrixBuilder.basis_B_inverse(n)

    right_T = {i: SpectralHandler.right_eigvec_T(n, i) for i in even}
    left_T = {i: SpectralHandler.left_eigvec_T(n, i) for i in even}
    right_M = {i: b.apply(right_T[i]) for i in even}
    left_M = {i: b_inv.apply_left(left_T[i]) for i in even}
    signs = {i: SpectralHandler.closed_form_sign(n, i, left_M[i]) for i in even if i >= 2}

    if any(s == 0 for s in signs.values()):
        logger.warning(f"Closed-form left eigenvector matched neither sign for n={n}: {signs}.")
    VERBOSE and logger.info(f"Eigensystem built for n={n}: {len(even)} nonzero eigenvalues, "
                            f"kernel dimension {n // 2}.")

    return EigenSystem(n=n, even_indices=even, right_T=right_T, right_M=right_M, left_T=left_T, left_M=left_M,
                       kernel=SpectralHandler.kernel_basis(n), closed_form_signs=signs)
