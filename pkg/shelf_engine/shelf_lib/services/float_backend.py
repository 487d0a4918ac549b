"""
Floating-point evaluation of M and its powers for deck sizes beyond the exact threshold.

M(i, j) is evaluated from the closed form with log-gamma binomials. Powers are plain products of the nonnegative
matrix: with no cancellation, the rounding error of every product entry is bounded by gamma_n = n u / (1 - n u)
relative to the exact product, so one relative error bound covers every entry of M^k.
"""
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger
from scipy.special import gammaln

from shelf_engine.shelf_lib.globals import VERBOSE

UNIT_ROUNDOFF = np.finfo(np.float64).eps / 2
ROW_CHUNK = 512
LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class FloatMatrix:
    """
    Floating-point matrix with a relative error bound valid for every entry.
    """
    values: np.ndarray
    relative_error: float

    def error_bounds(self) -> np.ndarray:
        """Absolute per-entry error bounds, expressed in terms of the computed values."""
        return self.values * (self.relative_error / (1.0 - self.relative_error))

    def entry_error(self, i: int, j: int) -> float:
        return float(self.values[i, j]) * self.relative_error / (1.0 - self.relative_error)


class LogFactorialTable:
    """
    log(t!) for t = 0..size-1, computed with gammaln in one vectorized call.

    The table grows on demand, at least doubling, so a sweep over increasing n recomputes it only a logarithmic
    number of times.
    """

    def __init__(self):
        self._values = np.zeros(1, dtype=np.float64)
        self._lock = threading.Lock()

    @property
    def size(self) -> int:
        return int(self._values.size)

    def upto(self, t_max: int) -> np.ndarray:
        """
        Returns a table that covers log(0!) .. log(t_max!).

        :param t_max: Largest argument needed.
        :type t_max: int
        :return: Array whose entry t is log(t!).
        :rtype: np.ndarray
        """
        with self._lock:
            if self._values.size <= t_max:
                size = max(t_max + 1, 2 * self._values.size)
                self._values = gammaln(np.arange(1, size + 1, dtype=np.float64))
                VERBOSE and logger.info(f"Log-factorial table extended to {size} entries.")
            return self._values


LOG_FACTORIALS = LogFactorialTable()


class FloatBackend:
    """
    Log-space evaluation of the position matrix and of its powers. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def _binomial_term(log_factorials: np.ndarray, upper: np.ndarray, lower: np.ndarray,
                       log_scale: np.ndarray) -> np.ndarray:
        """
        C(upper, lower) * exp(-log_scale) from table lookups, zero where lower is out of range.
        """
        valid = (lower >= 0) & (lower <= upper)
        lo = np.clip(lower, 0, upper)
        logs = log_factorials[upper] - log_factorials[lo] - log_factorials[upper - lo] - log_scale
        return np.where(valid, np.exp(logs), 0.0)

    @staticmethod
    def position_matrix(n: int) -> FloatMatrix:
        """
        Floating-point M with M(i, j) = 2^-i (C(i-1, j-1) + C(i-1, n-j)).

        :param n: Deck size, n >= 2.
        :type n: int
        :return: The matrix and its relative error bound.
        :rtype: FloatMatrix
        """
        if n < 2:
            raise ValueError(f"Deck size must be n >= 2, got {n}.")
        log_factorials = LOG_FACTORIALS.upto(n)
        values = np.empty((n, n), dtype=np.float64)
        cols = np.arange(n)[None, :]
        for start in range(0, n, ROW_CHUNK):
            rows = np.arange(start, min(start + ROW_CHUNK, n))[:, None]
            first = FloatBackend._binomial_term(log_factorials, rows, cols, (rows + 1) * LOG2)
            # 2^-i C(i-1, n-j) is the first term read with the columns reversed.
            values[start:start + rows.shape[0]] = first + first[:, ::-1]

        # Every exponent sums logarithms of total magnitude at most 2 log((n-1)!) + n log 2. Their absolute error
        # is a few ulps of that magnitude; exp turns it into a relative error, and the final addition of two
        # nonnegative terms adds one more rounding.
        worst = 2.0 * float(log_factorials[n - 1]) + n * LOG2
        relative = 4.0 * UNIT_ROUNDOFF * (worst + 1.0) + 2.0 * UNIT_ROUNDOFF
        VERBOSE and logger.info(f"Float position matrix for n={n} with relative error bound {relative:.3e}.")
        return FloatMatrix(values=values, relative_error=relative)

    @staticmethod
    def product_gamma(n: int) -> float:
        nu = n * UNIT_ROUNDOFF
        if nu >= 1.0:
            raise ValueError(f"Inner dimension {n} too large for a rounding error bound.")
        return nu / (1.0 - nu)

    @staticmethod
    def power(n: int, k: int, base: Optional[FloatMatrix] = None) -> FloatMatrix:
        """
        Floating-point M^k by repeated products, with a relative error bound propagated through each product.

        :param n: Deck size, n >= 2.
        :type n: int
        :param k: Exponent, k >= 1.
        :type k: int
        :param base: A float M(n) already built, reused instead of rebuilding it.
        :type base: Optional[FloatMatrix]
        :return: M^k and its relative error bound.
        :rtype: FloatMatrix
        """
        if k < 1:
            raise ValueError(f"Float powers need k >= 1, got k={k}.")
        if base is None:
            base = FloatBackend.position_matrix(n)
        elif base.values.shape != (n, n):
            raise ValueError(f"Base matrix has shape {base.values.shape}, expected ({n}, {n}).")
        gamma = FloatBackend.product_gamma(n)
        values, relative = base.values, base.relative_error
        for _ in range(k - 1):
            values = values @ base.values
            relative = (1.0 + relative) * (1.0 + base.relative_error) * (1.0 + gamma) - 1.0
        return FloatMatrix(values=values, relative_error=relative)
