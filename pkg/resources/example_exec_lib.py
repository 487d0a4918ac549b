import sys

from shelf_engine.shelf_lib import Shelf
from shelf_engine.shelf_lib.services.simulation import ShuffleConfig

try:
    strategy, report = Shelf.guess(n=24, k=1)
    print(f"Optimal guesses: {strategy.guesses}")
    print(f"Expected correct guesses: {report.exact_score} ~ {report.float_score:.6f}")

    counterexample = Shelf.counterexample()
    print(f"M(19,10) = {counterexample.m19}, M(20,10) = {counterexample.m20}, holds: {counterexample.holds}")

    simulation = Shelf.simulate(ShuffleConfig(n=24, samples=200_000, seed=7), mode="game", strategy="G",
                                verbose=True)
    print(f"Simulated mean score of G: {simulation.mean:.4f} +/- {simulation.stderr:.4f}")
except Exception as e:
    print(f"Error running the shelf engine: {e}")
    sys.exit(1)
