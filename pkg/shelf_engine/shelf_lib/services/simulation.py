"""
Seeded Monte Carlo engine for the m-shelf shuffle.

Mechanics: the deck is listed top to bottom. Cards are drawn from the bottom (last element first). Each drawn card
picks one of m shelves uniformly, then goes to the top or the bottom of that shelf's pile with probability 1/2. When
every card is placed, the shelves are stacked in shelf order 1..m (shelf 1 on top) to form the new deck. The
stacking order is a convention that only matters for m >= 2 and is reported in every simulation's metadata.

Random numbers come from numpy's PCG64. Trials are grouped in fixed-size blocks and block b draws from the stream
seeded with ``SeedSequence([seed, b])``. Within a block and a round, all shelf choices are drawn before all top/bottom
flips. Since the blocks never share a stream, the worker count changes the schedule but not the result.
"""
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from shelf_engine.shelf_lib.globals import VERBOSE

SHELF_CONVENTION = "shelves stacked in order 1..m, shelf 1 on top"
GENERATOR_NAME = "numpy.random.PCG64 seeded by SeedSequence([seed, block_index])"
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class ShuffleConfig:
    """
    Parameters of a simulation run.

    :param n: Deck size, n >= 2.
    :param m: Number of shelves, m >= 1.
    :param rounds: Shuffles per trial, rounds >= 1.
    :param samples: Number of trials, samples >= 1.
    :param seed: Unsigned 64-bit seed.
    :param workers: Threads used to run blocks.
    :param block_size: Trials per random stream.
    """
    n: int
    m: int = 1
    rounds: int = 1
    samples: int = 100_000
    seed: int = 0
    workers: int = 1
    block_size: int = 4096

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Simulation needs n >= 2, got {self.n}.")
        if self.m < 1:
            raise ValueError(f"Simulation needs m >= 1 shelves, got {self.m}.")
        if self.rounds < 1:
            raise ValueError(f"Simulation needs rounds >= 1, got {self.rounds}.")
        if self.samples < 1:
            raise ValueError(f"Simulation needs samples >= 1, got {self.samples}.")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"Seed must be an unsigned 64-bit integer, got {self.seed}.")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError(f"workers and block_size must be positive, got {self.workers} and {self.block_size}.")


@dataclass(frozen=True)
class SimulationReport:
    """
    Result of a simulation. In ``matrix`` mode ``counts[i-1, j-1]`` tallies card i at position j and every row sums
    to ``samples``. In ``game`` mode ``histogram[s]`` counts trials that scored s correct guesses.
    """
    config: ShuffleConfig
    mode: str
    counts: Optional[np.ndarray] = None
    histogram: Optional[np.ndarray] = None
    guesses: Optional[tuple[int, ...]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        if self.counts is None:
            raise ValueError("Frequencies exist only for matrix-mode simulations.")
        return self.counts / self.config.samples

    @property
    def mean(self) -> float:
        if self.histogram is None:
            raise ValueError("Scores exist only for game-mode simulations.")
        scores = np.arange(len(self.histogram))
        return math.fsum((scores * self.histogram).tolist()) / self.config.samples

    @property
    def stderr(self) -> float:
        if self.histogram is None:
            raise ValueError("Scores exist only for game-mode simulations.")
        samples = self.config.samples
        if samples < 2:
            return 0.0
        mean = self.mean
        scores = np.arange(len(self.histogram))
        variance = math.fsum((((scores - mean) ** 2) * self.histogram).tolist()) / (samples - 1)
        return math.sqrt(variance / samples)


class ShuffleSimulator:
    """
    Runs shelf shuffles, one transcript at a time or in seeded vectorized blocks. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def apply_flips(deck: Sequence[int], flips: Sequence[tuple[int, bool]], m: int = 1) -> tuple[int, ...]:
        """
        Shuffles ``deck`` according to a recorded transcript.

        :param deck: Cards from top to bottom.
        :type deck: Sequence[int]
        :param flips: One (shelf, top) pair per drawn card, in draw order: the first pair belongs to the bottom card.
                      Shelves are 0-based.
        :type flips: Sequence[tuple[int, bool]]
        :param m: Number of shelves.
        :type m: int
        :return: The shuffled deck, top to bottom.
        :rtype: tuple[int, ...]
        :raises ValueError: If the transcript length or a shelf index is invalid.
        """
        if len(flips) != len(deck):
            raise ValueError(f"Transcript has {len(flips)} entries for a deck of {len(deck)} cards.")
        piles = [deque() for _ in range(m)]
        for card, (shelf, top) in zip(reversed(deck), flips):
            if not 0 <= shelf < m:
                raise ValueError(f"Shelf index {shelf} is outside 0..{m - 1}.")
            if top:
                piles[shelf].appendleft(card)
            else:
                piles[shelf].append(card)
        return tuple(card for pile in piles for card in pile)

    @staticmethod
    def shuffle_once(deck: Sequence[int], m: int, rng: np.random.Generator) -> tuple[int, ...]:
        """
        One m-shelf shuffle. Random numbers are drawn exactly as one row of a vectorized block: all shelf choices,
        then all top/bottom flips, both indexed by deck position.

        :param deck: Permutation of 1..n, top to bottom.
        :type deck: Sequence[int]
        :param m: Number of shelves, m >= 1.
        :type m: int
        :param rng: Source of randomness.
        :type rng: np.random.Generator
        :return: The shuffled deck.
        :rtype: tuple[int, ...]
        """
        if m < 1:
            raise ValueError(f"Need at least one shelf, got m={m}.")
        shelves, tops = ShuffleSimulator._draw(rng, m, 1, len(deck))
        # The bottom card is drawn first.
        flips = [(int(shelves[0, p]), bool(tops[0, p])) for p in reversed(range(len(deck)))]
        return ShuffleSimulator.apply_flips(deck, flips, m)

    @staticmethod
    def _draw(rng: np.random.Generator, m: int, count: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Shelf choices and top flips for ``count`` transcripts, column p belonging to the card at position p."""
        shelves = rng.integers(0, m, size=(count, n))
        tops = rng.integers(0, 2, size=(count, n)) == 0
        return shelves, tops

    @staticmethod
    def block_generator(seed: int, block_index: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block_index])))

    @staticmethod
    def _destinations(shelves: np.ndarray, tops: np.ndarray, m: int) -> np.ndarray:
        """
        Final 0-based position of the card at each input position, for a batch of transcripts.

        A card placed on top ends below the cards of its shelf drawn later and placed on top; a card placed at the
        bottom also ends below every card of its shelf drawn earlier.
        """
        batch, n = shelves.shape
        onehot = shelves[:, :, None] == np.arange(m)[None, None, :]
        on_top = onehot & tops[:, :, None]

        # Cards above input position p are drawn after it, i.e. sit at positions q < p.
        later_tops = np.cumsum(on_top, axis=1) - on_top
        earlier = onehot.sum(axis=1)[:, None, :] - np.cumsum(onehot, axis=1)

        index = shelves[:, :, None]
        above_top = np.take_along_axis(later_tops, index, axis=2)[:, :, 0]
        drawn_before = np.take_along_axis(earlier, index, axis=2)[:, :, 0]
        within = above_top + np.where(tops, 0, drawn_before)

        sizes = onehot.sum(axis=1)
        offsets = np.cumsum(sizes, axis=1) - sizes
        return within + np.take_along_axis(offsets, shelves, axis=1)

    @staticmethod
    def _shuffle_block(config: ShuffleConfig, block_index: int, count: int) -> np.ndarray:
        rng = ShuffleSimulator.block_generator(config.seed, block_index)
        n, m = config.n, config.m
        decks = np.tile(np.arange(1, n + 1, dtype=np.int64), (count, 1))
        for _ in range(config.rounds):
            shelves, tops = ShuffleSimulator._draw(rng, m, count, n)
            destinations = ShuffleSimulator._destinations(shelves, tops, m)
            shuffled = np.empty_like(decks)
            np.put_along_axis(shuffled, destinations, decks, axis=1)
            decks = shuffled
        return decks

    @staticmethod
    def _tally_block(config: ShuffleConfig, block_index: int, count: int, mode: str,
                     guesses: Optional[np.ndarray]) -> np.ndarray:
        decks = ShuffleSimulator._shuffle_block(config, block_index, count)
        n = config.n
        if mode == "matrix":
            flat = (decks - 1) * n + np.arange(n)[None, :]
            return np.bincount(flat.ravel(), minlength=n * n).reshape(n, n)
        scores = (decks == guesses[None, :]).sum(axis=1)
        return np.bincount(scores, minlength=n + 1)

    @staticmethod
    def _run(config: ShuffleConfig, mode: str, guesses: Optional[np.ndarray] = None) -> np.ndarray:
        blocks = [(b, min(config.block_size, config.samples - b * config.block_size))
                  for b in range(math.ceil(config.samples / config.block_size))]

        def work(block: tuple[int, int]) -> np.ndarray:
            return ShuffleSimulator._tally_block(config, block[0], block[1], mode, guesses)

        if config.workers == 1:
            partials = [work(block) for block in blocks]
        else:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                partials = list(pool.map(work, blocks))

        total = partials[0].copy()
        for partial in partials[1:]:
            total += partial
        VERBOSE and logger.info(f"Simulated {config.samples} trials in {len(blocks)} block(s) "
                                f"with {config.workers} worker(s).")
        return total

    @staticmethod
    def _metadata(config: ShuffleConfig) -> dict:
        metadata = {"generator": GENERATOR_NAME, "block_size": config.block_size,
                    "shelf_convention": SHELF_CONVENTION, "shelf_convention_applies": config.m >= 2}
        if config.m >= 2:
            logger.warning(f"m={config.m} shelves: output depends on the stacking convention ({SHELF_CONVENTION}).")
        return metadata

    @staticmethod
    def chain_frequencies(config: ShuffleConfig) -> SimulationReport:
        """
        Tallies the position of every card after ``config.rounds`` shuffles of the identity deck.

        :param config: Simulation parameters.
        :type config: ShuffleConfig
        :return: Matrix-mode report; row i of the frequencies approximates row i of M^rounds when m = 1.
        :rtype: SimulationReport
        """
        counts = ShuffleSimulator._run(config, "matrix")
        return SimulationReport(config=config, mode="matrix", counts=counts,
                                metadata=ShuffleSimulator._metadata(config))

    @staticmethod
    def estimate_position_matrix(config: ShuffleConfig) -> SimulationReport:
        """
        Empirical position matrix of a single shuffle. With m = 1 the frequencies converge to M.

        :raises ValueError: If ``config.rounds`` is not 1; use ``chain_frequencies`` for repeated shuffles.
        """
        if config.rounds != 1:
            raise ValueError(f"estimate_position_matrix runs single shuffles, got rounds={config.rounds}. "
                             f"Use chain_frequencies for repeated shuffles.")
        return ShuffleSimulator.chain_frequencies(config)

    @staticmethod
    def simulate_guessing(config: ShuffleConfig, guesses: Sequence[int]) -> SimulationReport:
        """
        Plays the no-feedback guessing game: each trial shuffles ``config.rounds`` times and scores the positions j
        where the deck holds the guessed card g_j.

        :param config: Simulation parameters.
        :type config: ShuffleConfig
        :param guesses: Guessed card per position, 1-based labels.
        :type guesses: Sequence[int]
        :return: Game-mode report with the score histogram.
        :rtype: SimulationReport
        """
        if len(guesses) != config.n or any(not 1 <= g <= config.n for g in guesses):
            raise ValueError(f"Guesses must be {config.n} card labels in 1..{config.n}.")
        histogram = ShuffleSimulator._run(config, "game", np.asarray(guesses, dtype=np.int64))
        return SimulationReport(config=config, mode="game", histogram=histogram, guesses=tuple(int(g) for g in guesses),
                                metadata=ShuffleSimulator._metadata(config))
