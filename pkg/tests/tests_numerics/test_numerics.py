import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shelf_engine.shelf_lib.services.numerics import PI_LOWER, PI_UPPER, BernoulliTable, Numerics


@pytest.mark.parametrize("a, b, expected", [(18, 9, 48620), (0, 0, 1), (3, 5, 0), (5, -1, 0), (-1, 0, 0), (19, 14, 11628),
                                            (1, 1, 1)])
def test_binomial_values(a, b, expected):
    """
    Tests binomial coefficients, with zero for out-of-range arguments.
    """
    assert Numerics.binomial(a, b) == expected, f"C({a}, {b}) should be {expected}."


def test_binomial_pascal_rule():
    """
    Tests C(a, b) = C(a-1, b-1) + C(a-1, b) over a triangle of indices.
    """
    for a in range(1, 60):
        for b in range(0, a + 1):
            assert Numerics.binomial(a, b) == Numerics.binomial(a - 1, b - 1) + Numerics.binomial(a - 1, b), (
                f"Pascal's rule fails at C({a}, {b}).")


@pytest.mark.parametrize("x, t, expected", [(4, 3, 24), (5, 0, 1), (0, 0, 1), (3, 4, 0), (10, 2, 90)])
def test_falling_factorial_values(x, t, expected):
    assert Numerics.falling_factorial(x, t) == expected, f"{x} falling {t} should be {expected}."


def test_falling_factorial_rejects_negative_arguments():
    with pytest.raises(ValueError):
        Numerics.falling_factorial(-1, 2)


@given(st.integers(min_value=0, max_value=40), st.integers(min_value=0, max_value=40))
@settings(max_examples=100, deadline=None)
def test_falling_factorial_matches_binomial(x, t):
    """
    Tests x falling t = C(x, t) t! for all nonnegative x and t.
    """
    assert Numerics.falling_factorial(x, t) == Numerics.binomial(x, t) * math.factorial(t)


@pytest.mark.parametrize("k, expected", [(0, Fraction(1)), (1, Fraction(-1, 2)), (2, Fraction(1, 6)),
                                         (4, Fraction(-1, 30)), (6, Fraction(1, 42)), (12, Fraction(-691, 2730))])
def test_bernoulli_values(k, expected):
    assert Numerics.bernoulli(k) == expected, f"B_{k} should be {expected}."


def test_odd_bernoulli_numbers_vanish():
    for k in range(3, 60, 2):
        assert Numerics.bernoulli(k) == 0, f"B_{k} should be zero."


def test_bernoulli_rejects_negative_index():
    with pytest.raises(ValueError):
        Numerics.bernoulli(-1)


@pytest.mark.parametrize("n", range(1, 51))
def test_bernoulli_identity(n):
    """
    Tests sum_k C(n, k) B_k 2^k = (2 - 2^n) B_n exactly.
    """
    assert Numerics.bernoulli_identity_residual(n) == 0, f"Bernoulli identity fails for n={n}."


def test_a_constant_small_values():
    # A_2 = 1 + 2 + 4 * (1/6) * 1
    assert Numerics.a_constant(2) == Fraction(11, 3)


@pytest.mark.parametrize("i", range(2, 41))
def test_a_constant_bound(i):
    assert Numerics.a_constant(i) <= 4 * math.factorial(i), f"A_{i} exceeds 4 * {i}!."


@pytest.mark.parametrize("m", range(1, 31))
def test_bernoulli_bound_factor_four_holds(m):
    assert Numerics.bernoulli_bound_holds(m), f"|B_{2 * m}| exceeds 4 (2m)! / (2 pi)^(2m)."


@pytest.mark.parametrize("m", range(1, 6))
def test_bernoulli_bound_factor_two_fails(m):
    """
    With the lower bracket of pi the rational value is above 2 (2m)! / (2 pi)^(2m), so exceeding it disproves the
    factor-two bound.
    """
    assert abs(Numerics.bernoulli(2 * m)) > Numerics.bernoulli_bound(m, factor=2, pi=PI_LOWER), (
        f"|B_{2 * m}| was expected to exceed the factor-two bound.")


def test_pi_brackets():
    assert PI_LOWER < Fraction(math.pi) < PI_UPPER


@pytest.mark.parametrize("value, text", [(Fraction(5), "5/1"), (Fraction(-2, 3), "-2/3"), (Fraction(0), "0/1"),
                                         (7, "7/1")])
def test_to_str(value, text):
    assert Numerics.to_str(value) == text


@pytest.mark.parametrize("text, value", [("3", Fraction(3)), ("-6/4", Fraction(-3, 2)), (" 1/2 ", Fraction(1, 2))])
def test_from_str(text, value):
    assert Numerics.from_str(text) == value


@pytest.mark.parametrize("text", ["1/0", "abc", "1/2/3", ""])
def test_from_str_rejects_invalid_literals(text):
    with pytest.raises(ValueError):
        Numerics.from_str(text)


def test_bernoulli_table_is_consistent_under_concurrency():
    """
    Tests that concurrent readers of a fresh table all observe the same values.
    """
    table = BernoulliTable()
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(table.get, [60, 40, 20, 60, 10, 58, 30, 60]))
    assert results[0] == results[3] == results[7] == Numerics.bernoulli(60)
    assert table.values() == tuple(Numerics.bernoulli(k) for k in range(61))


def test_numerics_cannot_be_instantiated():
    with pytest.raises(TypeError):
        Numerics()
