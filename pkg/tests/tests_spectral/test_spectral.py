from fractions import Fraction

import pytest

from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix, scale_vector
from shelf_engine.shelf_lib.services.spectral import SpectralHandler
from tests.utils import fractions

SIZES = list(range(2, 65))


def test_eigenvalues_n3():
    assert SpectralHandler.even_indices(3) == (0, 2)
    assert SpectralHandler.eigenvalues(3) == fractions(1, "1/4")


@pytest.mark.parametrize("n, indices", [(2, (0,)), (5, (0, 2, 4)), (6, (0, 2, 4))])
def test_even_indices(n, indices):
    assert SpectralHandler.even_indices(n) == indices


def test_eigenvectors_n3():
    assert SpectralHandler.right_eigvec_M(3, 2) == fractions("4/3", "-2/3", "-2/3")
    assert SpectralHandler.left_eigvec_M(3, 2) == fractions("1/2", -1, "1/2")
    assert SpectralHandler.left_eigvec_T(3, 0) == fractions(1, 1, "2/3")


@pytest.mark.parametrize("n", range(2, 11))
def test_left_eigenvector_for_eigenvalue_one_is_uniform(n):
    assert SpectralHandler.left_eigvec_M(n, 0) == tuple(Fraction(1, n) for _ in range(n))


@pytest.mark.parametrize("n, i", [(3, 1), (4, 4), (5, -2), (6, 7)])
def test_eigenvector_index_validation(n, i):
    with pytest.raises(ValueError):
        SpectralHandler.right_eigvec_T(n, i)


@pytest.mark.parametrize("n", SIZES)
def test_eigen_equations(n):
    """
    Tests M zeta = 2^-i zeta and zeta~ M = 2^-i zeta~ for every even i, in exact arithmetic.
    """
    m = MatrixBuilder.position_matrix(n)
    system = SpectralHandler.build(n)
    for i in system.even_indices:
        eigenvalue = system.eigenvalue(i)
        right, left = system.right_M[i], system.left_M[i]
        assert m.apply(right) == scale_vector(eigenvalue, right), f"Right eigen equation fails for n={n}, i={i}."
        assert m.apply_left(left) == scale_vector(eigenvalue, left), f"Left eigen equation fails for n={n}, i={i}."


@pytest.mark.parametrize("n", SIZES)
def test_biorthogonality(n):
    system = SpectralHandler.build(n)
    for i in system.even_indices:
        for j in system.even_indices:
            expected = 1 if i == j else 0
            assert SpectralHandler.inner(system.left_M[i], system.right_M[j]) == expected, (
                f"<zeta~({i}), zeta({j})> should be {expected} for n={n}.")


@pytest.mark.parametrize("n", range(2, 25))
def test_right_eigenvectors_of_t(n):
    t = MatrixBuilder.t_matrix(n)
    for i in SpectralHandler.even_indices(n):
        w = SpectralHandler.right_eigvec_T(n, i)
        assert w[i] == 1, f"w({i}) should be normalized at coordinate {i}."
        assert t.apply(w) == scale_vector(Fraction(1, 2 ** i), w), f"T w = 2^-i w fails for n={n}, i={i}."


@pytest.mark.parametrize("n", range(2, 25))
def test_left_eigenvectors_of_t(n):
    t = MatrixBuilder.t_matrix(n)
    for i in SpectralHandler.even_indices(n):
        w = SpectralHandler.left_eigvec_T(n, i)
        assert t.apply_left(w) == scale_vector(Fraction(1, 2 ** i), w), f"w~ T = 2^-i w~ fails for n={n}, i={i}."


@pytest.mark.parametrize("n", range(2, 41))
def test_kernel(n):
    m = MatrixBuilder.position_matrix(n)
    kernel = SpectralHandler.kernel_basis(n)
    assert len(kernel) == n // 2
    assert all(all(x == 0 for x in m.apply(v)) for v in kernel), f"Kernel vector not annihilated for n={n}."
    assert len(SpectralHandler.even_indices(n)) + len(kernel) == n, f"Dimensions do not add up for n={n}."


@pytest.mark.parametrize("n", range(3, 65))
def test_closed_form_left_eigenvector_sign(n):
    """
    Tests that the explicit left eigenvector formula matches the dual left eigenvector up to a global sign for every
    even i >= 2.
    """
    system = SpectralHandler.build(n)
    assert set(system.closed_form_signs) == set(system.nonzero_indices), f"Signs missing for n={n}."
    assert all(sign in (1, -1) for sign in system.closed_form_signs.values()), (
        f"Closed form matches neither sign for n={n}: {system.closed_form_signs}.")


@pytest.mark.parametrize("n", [3, 4])
def test_closed_form_left_eigenvector_has_opposite_sign(n):
    assert SpectralHandler.build(n).closed_form_signs[2] == -1


def test_closed_form_left_eigenvector_n3():
    assert SpectralHandler.left_eigvec_M_closed_form(3, 2) == fractions("-1/2", 1, "-1/2")
    with pytest.raises(ValueError):
        SpectralHandler.left_eigvec_M_closed_form(3, 0)


@pytest.mark.parametrize("n", range(3, 65))
def test_second_eigenvector_matches_quadratic(n):
    clay = SpectralHandler.clay_vector(n)
    assert SpectralHandler.build(n).right_M[2] == scale_vector(Fraction(2, 3), clay), (
        f"zeta(2) differs from (2/3) v for n={n}.")


def test_spectral_power_n3():
    expected = RationalMatrix([fractions("3/8", "1/4", "3/8"), fractions("5/16", "3/8", "5/16"),
                               fractions("5/16", "3/8", "5/16")])
    assert SpectralHandler.spectral_power(3, 1) == MatrixBuilder.position_matrix(3)
    assert SpectralHandler.spectral_power(3, 2) == expected


@pytest.mark.parametrize("n", [2, 3, 4, 7, 12, 20, 32])
def test_spectral_power_matches_direct_powers(n):
    m = MatrixBuilder.position_matrix(n)
    direct = m
    for k in range(1, 6):
        assert SpectralHandler.spectral_power(n, k) == direct, f"Spectral expansion differs from M^{k} at n={n}."
        direct = direct @ m


@pytest.mark.parametrize("k", [0, -1])
def test_spectral_power_rejects_nonpositive_exponent(k):
    with pytest.raises(ValueError, match="singular"):
        SpectralHandler.spectral_power(4, k)


def test_linf_norms_n3():
    report = SpectralHandler.linf_norms(3)
    entry = next(e for e in report.entries if e.i == 2)
    assert entry.left_norm == 1 and entry.left_bound == 2
    assert entry.right_norm == Fraction(4, 3) and entry.right_bound == 72


@pytest.mark.parametrize("n", SIZES)
def test_linf_bounds(n):
    report = SpectralHandler.linf_norms(n)
    assert report.passed, f"Sup norm bounds fail for n={n}: {[e.i for e in report.entries if not e.right_ok]}."


@pytest.mark.parametrize("n, k", [(8, 6), (10, 8), (16, 10)])
def test_mixing_distance_within_bound(n, k):
    distance, bound = SpectralHandler.mixing_distance(n, k)
    assert 0 <= distance <= bound, f"||M^{k} - J/n|| = {float(distance)} exceeds {float(bound)} for n={n}."


def test_build_is_memoized():
    assert SpectralHandler.build(9) is SpectralHandler.build(9)


def test_spectral_handler_cannot_be_instantiated():
    with pytest.raises(TypeError):
        SpectralHandler()
