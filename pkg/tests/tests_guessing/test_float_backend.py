import math

import numpy as np
import pytest

from shelf_engine.shelf_lib.services.float_backend import UNIT_ROUNDOFF, FloatBackend, LogFactorialTable
from shelf_engine.shelf_lib.services.guessing import GuessingHandler
from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from tests.utils import logged, loguru_caplog  # noqa: F401


@pytest.mark.parametrize("n", range(2, 65))
def test_position_matrix_within_error_bound(n):
    """
    Tests that every float entry of M lies within the stated relative error of the exact rational entry.
    """
    approx = FloatBackend.position_matrix(n)
    exact = np.array([[float(x) for x in row] for row in MatrixBuilder.position_matrix(n).to_rows()])
    allowed = (approx.relative_error + 2 * UNIT_ROUNDOFF) * exact
    assert np.all(np.abs(approx.values - exact) <= allowed), f"Float M({n}) leaves its error bound."


@pytest.mark.parametrize("n", [2, 7, 64, 300])
def test_position_matrix_columns_are_symmetric(n):
    values = FloatBackend.position_matrix(n).values
    assert np.array_equal(values, values[:, ::-1])


def test_position_matrix_rows_sum_to_one_for_large_deck():
    values = FloatBackend.position_matrix(1000).values
    assert np.allclose(values.sum(axis=1), 1.0, rtol=0, atol=1e-9)
    assert np.all(values >= 0)


def test_log_factorial_table_values():
    table = LogFactorialTable().upto(30)
    for t in range(31):
        assert math.isclose(table[t], math.lgamma(t + 1), rel_tol=1e-13, abs_tol=1e-13), f"log({t}!) is off."


def test_log_factorial_table_grows_by_doubling(loguru_caplog):
    table = LogFactorialTable()
    assert table.size == 1
    table.upto(10)
    assert table.size == 11
    table.upto(12)
    assert table.size == 22
    table.upto(21)
    assert table.size == 22


def test_power_reuses_given_base():
    base = FloatBackend.position_matrix(40)
    assert np.array_equal(FloatBackend.power(40, 3, base).values, FloatBackend.power(40, 3).values)


def test_power_rejects_base_of_wrong_size():
    with pytest.raises(ValueError, match="shape"):
        FloatBackend.power(5, 2, FloatBackend.position_matrix(4))


def test_envelope_check_builds_position_matrix_once_per_deck(monkeypatch):
    """
    Tests that the float branch of the envelope check shares one M between both scores.
    """
    built = []
    original = FloatBackend.position_matrix

    def counting(n):
        built.append(n)
        return original(n)

    monkeypatch.setattr(FloatBackend, "position_matrix", staticmethod(counting))
    rows = GuessingHandler.envelope_check([70, 80])
    assert built == [70, 80]
    assert all(row.backend == "float" for row in rows)


@pytest.mark.slow
def test_envelope_check_float_sweep():
    rows = GuessingHandler.envelope_check(range(65, 4097))
    assert all(row.passed for row in rows), f"Envelope fails at n={[row.n for row in rows if not row.passed]}."
