"""
Command-line interface for the shelf engine.

Usage:
    shelf_engine matrix --n 5 --which T          # exact matrix as "p/q" strings
    shelf_engine spectrum --n 16                 # eigensystem with its verification block (cached)
    shelf_engine guess --n 4 --k 1 --strategy G  # expected number of correct guesses
    shelf_engine simulate --n 10 --samples 1000000 --seed 7
    shelf_engine verify --n 12                   # exit 2 if any check fails
    shelf_engine counterexample
    shelf_engine decay --epsilon 1 --n 8 --n 16 --n 32 --n 64

Exit codes: 0 on success, 1 on invalid arguments, 2 when a verification fails.
"""
import contextlib
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import click
from loguru import logger

from shelf_engine.shelf_lib.errors import ShelfError, VerificationError
from shelf_engine.shelf_lib.services.cache import SpectrumCache
from shelf_engine.shelf_lib.services.guessing import SEPARATION_LOWER, SEPARATION_UPPER
from shelf_engine.shelf_lib.services.serialization import FORMATS, OutputWriter
from shelf_engine.shelf_lib.services.settings import SettingsHandler
from shelf_engine.shelf_lib.services.simulation import ShuffleConfig
from shelf_engine.shelf_lib.services.spectral import SpectralHandler
from shelf_engine.shelf_lib.shelf import MATRIX_KINDS, Shelf

__all__ = ["cli", "run"]

EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION = 0, 1, 2

_quiet_sink: Optional[int] = None


@dataclass
class CliContext:
    fmt: str
    out: Optional[str]
    settings: dict[str, dict[str, Any]]
    cache: Optional[SpectrumCache]

    def emit(self, payload: dict[str, Any], header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        """Writes the payload as JSON, or the table as CSV, to stdout or to the --out file."""
        text = OutputWriter.to_json(payload) if self.fmt == "json" else OutputWriter.to_csv(header, rows)
        if self.out:
            OutputWriter.write_atomic(text, self.out)
            logger.success(f"Output saved to: {self.out}")
        else:
            click.echo(text, nl=False)


def _configure_logging(quiet: bool) -> None:
    global _quiet_sink
    if quiet and _quiet_sink is None:
        # Handler 0 is loguru's default stderr sink.
        with contextlib.suppress(ValueError):
            logger.remove(0)
        _quiet_sink = logger.add(sys.stderr, level="WARNING")


@click.group()
@click.version_option(version="1.0.0", prog_name="shelf_engine")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="json", help="Output format.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output to this file.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML configuration file.")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None, help="Spectrum cache directory.")
@click.option("--no-cache", is_flag=True, help="Do not read or write the spectrum cache.")
@click.option("--quiet/--verbose", default=False, help="Only log warnings and errors.")
@click.pass_context
def cli(ctx: click.Context, fmt: str, out: Optional[str], config_path: Optional[str], cache_dir: Optional[str],
        no_cache: bool, quiet: bool):
    """
    Exact spectral analysis, guessing scores and simulation of the single-shelf shuffle.
    """
    _configure_logging(quiet)
    settings = SettingsHandler.read_settings(config_path)
    cache = None
    if not no_cache and settings["cache"]["enabled"]:
        cache = SpectrumCache(cache_dir or settings["cache"]["dir"] or None)
    ctx.obj = CliContext(fmt=fmt, out=out, settings=settings, cache=cache)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Deck size.")
@click.option("--which", type=click.Choice(list(MATRIX_KINDS)), default="M", help="Matrix to build.")
@click.pass_obj
def matrix(obj: CliContext, n: int, which: str):
    """Print one of the exact matrices M, L, P, B, Binv, T, J or PB."""
    result = Shelf.matrix(n, which)
    header, rows = OutputWriter.matrix_rows(result)
    obj.emit({"command": "matrix", "n": n, "which": which, "matrix": result}, header, rows)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Deck size.")
@click.pass_obj
def spectrum(obj: CliContext, n: int):
    """Print the eigensystem of M with a verification block."""
    system, checks = Shelf.spectrum(n, obj.cache)
    payload = {
        "command": "spectrum",
        "n": n,
        "eigenvalues": {str(i): system.eigenvalue(i) for i in system.even_indices},
        "right_eigenvectors": system.right_M,
        "left_eigenvectors": system.left_M,
        "right_eigenvectors_T": system.right_T,
        "left_eigenvectors_T": system.left_T,
        "kernel": system.kernel,
        "closed_form_signs": system.closed_form_signs,
        "linf": SpectralHandler.linf_norms(n, system).entries,
        "verification": checks.as_flags(),
    }
    rows = [[i, system.eigenvalue(i), k, system.right_M[i][k - 1], system.left_M[i][k - 1]]
            for i in system.even_indices for k in range(1, n + 1)]
    obj.emit(payload, ["i", "eigenvalue", "k", "right", "left"], rows)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Deck size.")
@click.option("--k", "k", type=int, default=1, show_default=True, help="Number of shuffles.")
@click.option("--strategy", default="optimal", show_default=True, help="optimal | G | constant:c | file:PATH.")
@click.option("--backend", type=click.Choice(["exact", "float"]), default=None, help="Arithmetic backend.")
@click.option("--exact", "force_exact", is_flag=True, help="Force exact arithmetic beyond the threshold.")
@click.option("--slack", type=float, default=None, help="Slack constant of the upper envelope.")
@click.option("--table", is_flag=True, help="Include the per-position table in JSON output.")
@click.pass_obj
def guess(obj: CliContext, n: int, k: int, strategy: str, backend: Optional[str], force_exact: bool,
          slack: Optional[float], table: bool):
    """Expected number of correct no-feedback guesses after k shuffles."""
    slack = slack if slack is not None else obj.settings["guess"]["slack"]
    played, report = Shelf.guess(n, k, strategy, backend, force_exact, slack, obj.settings["exact"]["max_n"])
    payload = {
        "command": "guess",
        "n": n,
        "k": k,
        "strategy": report.strategy,
        "guesses": played.guesses,
        "backend": report.backend,
        "exact_score": report.exact_score,
        "float_score": report.float_score,
        "error_bound": report.error_bound,
        "lower_bound": report.lower_bound,
        "upper_bound": report.upper_bound,
        "slack": report.slack,
        "offset": report.offset,
        "ambiguous_columns": report.ambiguous_columns,
    }
    if table:
        payload["table"] = [{"j": j, "guess": g, "probability": p} for j, g, p in report.table]
    obj.emit(payload, ["j", "guess", "probability"], [list(row) for row in report.table])


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Deck size.")
@click.option("--m", "m", type=int, default=1, show_default=True, help="Number of shelves.")
@click.option("--rounds", type=int, default=1, show_default=True, help="Shuffles per trial.")
@click.option("--samples", type=int, default=None, help="Number of trials.")
@click.option("--seed", type=int, default=None, help="Unsigned 64-bit seed.")
@click.option("--workers", type=int, default=None, help="Worker threads.")
@click.option("--block-size", type=int, default=None, help="Trials per random stream.")
@click.option("--mode", type=click.Choice(["matrix", "game"]), default="matrix", show_default=True)
@click.option("--strategy", default="G", show_default=True, help="Strategy for game mode.")
@click.pass_obj
def simulate(obj: CliContext, n: int, m: int, rounds: int, samples: Optional[int], seed: Optional[int],
             workers: Optional[int], block_size: Optional[int], mode: str, strategy: str):
    """Monte Carlo simulation of m-shelf shuffles."""
    defaults = obj.settings["simulate"]
    config = ShuffleConfig(
        n=n, m=m, rounds=rounds,
        samples=samples if samples is not None else defaults["samples"],
        seed=seed if seed is not None else defaults["seed"],
        workers=workers if workers is not None else defaults["workers"],
        block_size=block_size if block_size is not None else defaults["block_size"])
    report = Shelf.simulate(config, mode, strategy)
    payload = {"command": "simulate", "config": config, "mode": mode, "metadata": report.metadata}
    if mode == "matrix":
        payload["counts"] = report.counts
        payload["frequencies"] = report.frequencies
        header = ["i", "j", "count", "frequency"]
        freq = report.frequencies
        rows = [[i + 1, j + 1, int(report.counts[i, j]), float(freq[i, j])] for i in range(n) for j in range(n)]
    else:
        payload.update({"guesses": report.guesses, "histogram": report.histogram, "mean": report.mean,
                        "stderr": report.stderr})
        header = ["score", "count"]
        rows = [[s, int(c)] for s, c in enumerate(report.histogram)]
    obj.emit(payload, header, rows)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Deck size.")
@click.option("--envelope-max", type=int, default=None, help="Also check the envelope for 2..N.")
@click.option("--decay", is_flag=True, help="Also check the decay table for n in 8, 16, 32, 64.")
@click.pass_obj
def verify(obj: CliContext, n: int, envelope_max: Optional[int], decay: bool):
    """Run the exact invariant suite; exit 2 if any check fails."""
    report = Shelf.verify(n, envelope_max, decay, obj.settings["guess"]["slack"])
    payload = {"command": "verify", "n": n, "passed": report.passed, "checks": report.checks,
               "closed_form_signs": report.closed_form_signs}
    obj.emit(payload, ["name", "passed", "skipped", "detail"],
             [[c.name, c.passed, c.skipped, c.detail] for c in report.checks])
    if not report.passed:
        raise VerificationError(f"{len(report.failures)} check(s) failed for n={n}.")


@cli.command()
@click.pass_obj
def counterexample(obj: CliContext):
    """Exact witness that guessing card 19 at position 10 is not optimal for n = 24."""
    report = Shelf.counterexample()
    payload = {"command": "counterexample", "n": report.n, "column": report.column,
               "M_19_10": report.m19, "M_20_10": report.m20, "lower_threshold": SEPARATION_LOWER,
               "upper_threshold": SEPARATION_UPPER, "column_argmax": report.column_argmax,
               "column_max": report.column_max, "violated_columns": report.violations,
               "below_lower_threshold": report.below_lower_threshold, "holds": report.holds}
    obj.emit(payload, ["i", "j", "value"], [[19, 10, report.m19], [20, 10, report.m20],
                                            [report.column_argmax, 10, report.column_max]])
    if not report.holds:
        raise VerificationError("Counterexample inequalities do not hold.")


@cli.command()
@click.option("--epsilon", type=float, default=1.0, show_default=True, help="Positive epsilon.")
@click.option("--n", "ns", type=int, multiple=True, default=(8, 16, 32, 64), show_default=True, help="Deck sizes.")
@click.pass_obj
def decay(obj: CliContext, epsilon: float, ns: tuple[int, ...]):
    """Tabulate |E_{n,k} - 1| against n^(-2 epsilon) for k = ceil((1 + epsilon) log2 n)."""
    report = Shelf.decay(ns, epsilon)
    payload = {"command": "decay", "epsilon": epsilon, "rows": report.rows,
               "non_increasing_from_16": report.non_increasing_from(16)}
    obj.emit(payload, ["n", "k", "k_natural", "score", "deviation", "scaled", "reference"],
             [[r.n, r.k, r.k_natural, r.score, r.deviation, r.scaled, r.reference] for r in report.rows])


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs the CLI and returns its exit code instead of exiting.

    :param argv: Arguments without the program name; defaults to ``sys.argv[1:]``.
    :type argv: Optional[Sequence[str]]
    :return: 0 on success, 1 on invalid arguments, 2 on a failed verification.
    :rtype: int
    """
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="shelf_engine",
                          standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        return EXIT_VERIFICATION
    except (ValueError, ShelfError, FileNotFoundError, tomllib.TOMLDecodeError) as e:
        logger.error(f"Error: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Error: {e}")
        return EXIT_USAGE
    return result if isinstance(result, int) else EXIT_OK
