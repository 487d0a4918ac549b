import logging
import math
from fractions import Fraction

import pytest
from loguru import logger

from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix


@pytest.fixture
def loguru_caplog(caplog):
    """ Redirect Loguru logs into `caplog`, so pytest can capture them. """

    class PropagateHandler(logging.Handler):
        def emit(self, record):
            logging.getLogger(record.name).handle(record)

    handler_id = logger.add(PropagateHandler(), level=0)
    yield caplog
    logger.remove(handler_id)


def logged(caplog, text: str) -> bool:
    """
    Returns True if any captured log line contains the given text.
    """
    return any(text in message for message in caplog.text.splitlines())


def fractions(*values: str | int) -> tuple[Fraction, ...]:
    """
    Builds a tuple of Fractions from literals such as "3/8" or 1.
    """
    return tuple(Fraction(v) for v in values)


def matrix_of(rows: list[list[str | int]]) -> RationalMatrix:
    return RationalMatrix([[Fraction(v) for v in row] for row in rows])


def binomial_stderr(p: float, samples: int) -> float:
    """
    Standard error of a frequency estimate with success probability p.
    """
    return math.sqrt(p * (1 - p) / samples)
