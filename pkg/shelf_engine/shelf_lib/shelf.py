"""
Shelf Library Module

This module provides a collection of static methods to build, analyze and simulate the single-shelf shuffle.

### Core Functionalities:
- Build the exact matrices of the shuffle (M, L, P, B, B^-1, T, J and P in the falling factorial basis).
- Compute the eigensystem of M from closed forms, optionally through the disk cache.
- Score no-feedback guessing strategies after k shuffles, exactly or in floating point with error bounds.
- Simulate m-shelf shuffles and guessing games with reproducible seeds.
- Verify every closed form against direct computation.

All methods are **static** within the `Shelf` class, allowing direct access without instantiation.
"""
from typing import Optional, Sequence

from loguru import logger

from shelf_engine.shelf_lib.globals import DEFAULT_SLACK, EXACT_MAX_N
from shelf_engine.shelf_lib.services.cache import SpectrumCache
from shelf_engine.shelf_lib.services.guessing import (CounterexampleReport, DecayReport, GuessingHandler, ScoreReport,
                                                      Strategy)
from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix
from shelf_engine.shelf_lib.services.simulation import ShuffleConfig, ShuffleSimulator, SimulationReport
from shelf_engine.shelf_lib.services.spectral import EigenSystem, SpectralHandler
from shelf_engine.shelf_lib.services.verification import CheckResult, VerificationHandler, VerificationReport

MATRIX_KINDS = {
    "M": MatrixBuilder.position_matrix,
    "L": MatrixBuilder.lower_L,
    "P": MatrixBuilder.flip_P,
    "B": MatrixBuilder.basis_B,
    "Binv": MatrixBuilder.basis_B_inverse,
    "T": MatrixBuilder.t_matrix,
    "J": MatrixBuilder.all_ones,
    "PB": MatrixBuilder.flip_in_basis,
}


class Shelf:
    """
    Shelf Processing Utility Class

    Entry point to the engine's services. Every method delegates to one service and logs the completed stage when
    ``verbose`` is set.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def matrix(n: int, which: str = "M") -> RationalMatrix:
        """
        Builds one of the exact matrices of the shuffle.

        :param n: Deck size, n >= 2.
        :type n: int
        :param which: One of M, L, P, B, Binv, T, J, PB.
        :type which: str
        :return: The requested matrix.
        :rtype: RationalMatrix
        :raises ValueError: If ``which`` is unknown or n < 2.
        """
        if which not in MATRIX_KINDS:
            raise ValueError(f"Unknown matrix '{which}', expected one of {', '.join(MATRIX_KINDS)}.")
        return MATRIX_KINDS[which](n)

    @staticmethod
    def spectrum(n: int, cache: Optional[SpectrumCache] = None,
                 verbose: bool = False) -> tuple[EigenSystem, VerificationReport]:
        """
        Eigensystem of M with its spectral checks. The disk cache is used when given.

        :param n: Deck size, n >= 2.
        :type n: int
        :param cache: Disk cache, or None to always build in memory.
        :type cache: Optional[SpectrumCache]
        :param verbose: Whether to log success messages.
        :type verbose: bool
        :return: The eigensystem and its verification block.
        :rtype: tuple[EigenSystem, VerificationReport]
        """
        MatrixBuilder._check_size(n)
        system = cache.get_or_build(n) if cache is not None else SpectralHandler.build(n)
        checks = VerificationHandler.spectral_checks(system)
        if verbose:
            logger.success(f"Spectrum computed for n={n}.")
        return system, checks

    @staticmethod
    def guess(n: int, k: int = 1, strategy: str = "optimal", backend: Optional[str] = None,
              force_exact: bool = False, slack: float = DEFAULT_SLACK,
              exact_max_n: int = EXACT_MAX_N) -> tuple[Strategy, ScoreReport]:
        """
        Scores a guessing strategy after k shuffles.

        :param n: Deck size, n >= 2.
        :type n: int
        :param k: Number of shuffles, k >= 1.
        :type k: int
        :param strategy: "optimal", "G", "constant:c" or "file:PATH".
        :type strategy: str
        :param backend: "exact" or "float"; chosen from n when None.
        :type backend: Optional[str]
        :param force_exact: Use exact arithmetic beyond ``exact_max_n``.
        :type force_exact: bool
        :param slack: Slack constant of the upper envelope.
        :type slack: float
        :param exact_max_n: Largest n computed exactly by default.
        :type exact_max_n: int
        :return: The strategy played and its score report.
        :rtype: tuple[Strategy, ScoreReport]
        """
        chosen = GuessingHandler.choose_backend(n, backend, force_exact, exact_max_n)
        if strategy == "optimal":
            return GuessingHandler.optimal_no_feedback(n, k, chosen, slack)
        played = GuessingHandler.resolve_strategy(n, strategy, k, chosen)
        return played, GuessingHandler.strategy_score(n, k, played, chosen, slack)

    @staticmethod
    def simulate(config: ShuffleConfig, mode: str = "matrix", strategy: str = "G",
                 verbose: bool = False) -> SimulationReport:
        """
        Runs the Monte Carlo engine.

        :param config: Simulation parameters.
        :type config: ShuffleConfig
        :param mode: "matrix" tallies positions, "game" plays the guessing game.
        :type mode: str
        :param strategy: Strategy selector used in game mode.
        :type strategy: str
        :param verbose: Whether to log success messages.
        :type verbose: bool
        :return: The simulation report.
        :rtype: SimulationReport
        :raises ValueError: If the mode is unknown.
        """
        if mode == "matrix":
            report = ShuffleSimulator.chain_frequencies(config)
        elif mode == "game":
            backend = GuessingHandler.choose_backend(config.n)
            played = GuessingHandler.resolve_strategy(config.n, strategy, config.rounds, backend)
            report = ShuffleSimulator.simulate_guessing(config, played.guesses)
        else:
            raise ValueError(f"Unknown simulation mode '{mode}', expected 'matrix' or 'game'.")
        if verbose:
            logger.success(f"Simulated {config.samples} trials of n={config.n}, m={config.m}, "
                           f"rounds={config.rounds} ({mode}).")
        return report

    @staticmethod
    def verify(n: int, envelope_max: Optional[int] = None, decay: bool = False,
               slack: float = DEFAULT_SLACK) -> VerificationReport:
        """
        Runs the exact suite for n, plus the envelope check over 2..envelope_max and the decay table on request.

        :param n: Deck size, n >= 2.
        :type n: int
        :param envelope_max: Largest deck size of the envelope check, or None to skip it.
        :type envelope_max: Optional[int]
        :param decay: Whether to add the decay check for n in 8, 16, 32, 64.
        :type decay: bool
        :param slack: Slack constant of the upper envelope.
        :type slack: float
        :return: The combined report.
        :rtype: VerificationReport
        """
        report = VerificationHandler.verify(n)
        extra: list[CheckResult] = []
        if envelope_max is not None:
            extra.append(VerificationHandler.envelope(range(2, envelope_max + 1), slack)[0])
        if decay:
            extra.append(VerificationHandler.decay()[0])
        if not extra:
            return report
        combined = VerificationReport(n=n, checks=report.checks + tuple(extra),
                                      closed_form_signs=report.closed_form_signs)
        VerificationHandler.log_report(combined, stage="extended")
        return combined

    @staticmethod
    def counterexample() -> CounterexampleReport:
        return VerificationHandler.counterexample()[1]

    @staticmethod
    def decay(ns: Sequence[int], epsilon: float = 1.0) -> DecayReport:
        return GuessingHandler.decay_table(ns, epsilon)
