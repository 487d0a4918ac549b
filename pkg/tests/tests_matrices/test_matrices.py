from fractions import Fraction

import pytest

from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix
from tests.utils import matrix_of


def test_position_matrix_n3():
    expected = matrix_of([["1/2", 0, "1/2"], ["1/4", "1/2", "1/4"], ["1/4", "1/2", "1/4"]])
    assert MatrixBuilder.position_matrix(3) == expected


def test_position_matrix_square_n3():
    expected = matrix_of([["3/8", "1/4", "3/8"], ["5/16", "3/8", "5/16"], ["5/16", "3/8", "5/16"]])
    assert MatrixBuilder.position_matrix(3).power(2) == expected


@pytest.mark.parametrize("k", [0, 1, 2, 3, 5, 8, 11])
def test_power_by_squaring_matches_repeated_products(k):
    m = MatrixBuilder.position_matrix(6)
    expected = RationalMatrix.identity(6)
    for _ in range(k):
        expected = expected @ m
    assert m.power(k) == expected, f"M^{k} by squaring differs from {k} products."


def test_power_rejects_negative_exponent():
    with pytest.raises(ValueError, match="nonnegative"):
        MatrixBuilder.position_matrix(3).power(-1)


@pytest.mark.parametrize("i, j, expected", [(19, 10, Fraction(1615, 16384)), (20, 10, Fraction(52003, 524288))])
def test_position_entries_n24(i, j, expected):
    assert MatrixBuilder.position_entry(24, i, j) == expected, f"M({i}, {j}) at n=24 should be {expected}."


@pytest.mark.parametrize("n", range(2, 65))
def test_position_matrix_is_doubly_stochastic(n):
    m = MatrixBuilder.position_matrix(n)
    assert all(s == 1 for s in m.row_sums()), f"Rows of M do not sum to 1 for n={n}."
    assert all(s == 1 for s in m.column_sums()), f"Columns of M do not sum to 1 for n={n}."


@pytest.mark.parametrize("n", range(2, 65))
def test_factorization(n):
    """
    Tests M = L (I + P).
    """
    identity = RationalMatrix.identity(n)
    assert MatrixBuilder.lower_L(n) @ (identity + MatrixBuilder.flip_P(n)) == MatrixBuilder.position_matrix(n)


@pytest.mark.parametrize("n", range(2, 15))
def test_closed_form_matches_enumeration(n):
    """
    Tests the closed form of M against all 2^n shuffle transcripts.
    """
    assert MatrixBuilder.brute_force_position_matrix(n) == MatrixBuilder.position_matrix(n), (
        f"Enumerated position matrix differs from the closed form for n={n}.")


@pytest.mark.parametrize("n", [1, 21, 0])
def test_brute_force_rejects_sizes(n):
    with pytest.raises(ValueError):
        MatrixBuilder.brute_force_position_matrix(n)


@pytest.mark.parametrize("n", [1, 0, -3, 2.0])
def test_position_matrix_rejects_sizes(n):
    with pytest.raises(ValueError):
        MatrixBuilder.position_matrix(n)


@pytest.mark.parametrize("n", range(2, 21))
def test_lower_factor_eigenbasis(n):
    """
    Tests L B = B diag(2^-1, ..., 2^-n).
    """
    b = MatrixBuilder.basis_B(n)
    assert MatrixBuilder.lower_L(n) @ b == b @ MatrixBuilder.lower_diagonal(n)


def test_basis_inverse_n3():
    expected = matrix_of([[1, 0, 0], [-1, 1, 0], ["1/2", -1, "1/2"]])
    assert MatrixBuilder.basis_B_inverse(3) == expected


@pytest.mark.parametrize("n", range(2, 33))
def test_basis_inverse(n):
    b, b_inv = MatrixBuilder.basis_B(n), MatrixBuilder.basis_B_inverse(n)
    assert b @ b_inv == RationalMatrix.identity(n), f"B B^-1 is not the identity for n={n}."
    assert b_inv.is_lower_triangular(), f"B^-1 is not lower triangular for n={n}."


def test_t_matrix_n3():
    expected = matrix_of([[1, 1, 1], [0, 0, "-1/2"], [0, 0, "1/4"]])
    assert MatrixBuilder.t_matrix(3) == expected


@pytest.mark.parametrize("n", range(2, 33))
def test_change_of_basis(n):
    """
    Tests B^-1 M B = T.
    """
    b, b_inv = MatrixBuilder.basis_B(n), MatrixBuilder.basis_B_inverse(n)
    assert b_inv @ MatrixBuilder.position_matrix(n) @ b == MatrixBuilder.t_matrix(n), (
        f"B^-1 M B differs from T for n={n}.")


@pytest.mark.parametrize("n", range(2, 25))
def test_flip_in_basis(n):
    b, b_inv = MatrixBuilder.basis_B(n), MatrixBuilder.basis_B_inverse(n)
    flip = MatrixBuilder.flip_in_basis(n)
    assert b_inv @ MatrixBuilder.flip_P(n) @ b == flip, f"B^-1 P B differs from the closed form for n={n}."
    assert (RationalMatrix.identity(n) + flip).is_upper_triangular()


@pytest.mark.parametrize("N, m", [(N, m) for N in range(21) for m in range(N + 1)])
def test_c_coefficients_expand_falling_factorial(N, m):
    """
    Tests (N - x) falling m = sum_k c_N(k, m) x falling k for every x in 0..N.
    """
    coefficients = MatrixBuilder.c_coefficients(N, m)
    for x in range(N + 1):
        expansion = sum((c * Numerics.falling_factorial(x, k) for k, c in enumerate(coefficients)), Fraction(0))
        assert expansion == Numerics.falling_factorial(N - x, m), f"Expansion fails at N={N}, m={m}, x={x}."


@pytest.mark.parametrize("N, m", [(3, 4), (2, -1), (-1, 0)])
def test_c_coefficients_reject_arguments(N, m):
    with pytest.raises(ValueError):
        MatrixBuilder.c_coefficients(N, m)


def test_all_ones():
    assert MatrixBuilder.all_ones(4) == RationalMatrix.ones(4)


def test_matrix_builder_cannot_be_instantiated():
    with pytest.raises(TypeError):
        MatrixBuilder()
