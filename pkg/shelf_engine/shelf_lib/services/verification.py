"""
Module for verifying the closed forms of the shelf engine against direct computation.

Each check compares two independent exact computations (a closed form against a product, an enumeration or an
identity) and records the outcome as a named CheckResult. Reports are logged by severity, from FAILED down to
PASSED, and ``VerificationHandler.require`` turns a failed report into a ``VerificationError``.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from loguru import logger

from shelf_engine.shelf_lib.errors import VerificationError
from shelf_engine.shelf_lib.globals import DEFAULT_SLACK, VERBOSE
from shelf_engine.shelf_lib.services.guessing import CounterexampleReport, DecayReport, EnvelopeRow, GuessingHandler
from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix, scale_vector
from shelf_engine.shelf_lib.services.spectral import EigenSystem, SpectralHandler

ORACLE_MAX_N = 14
DIRECT_MAX_N = 32
DIRECT_MAX_K = 5
A_CONSTANT_MAX_I = 40
BERNOULLI_IDENTITY_MAX_N = 50


@dataclass(frozen=True)
class CheckResult:
    """
    Outcome of one named check. ``skipped`` checks do not apply at this deck size and count as passed.
    """
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False


@dataclass(frozen=True)
class VerificationReport:
    n: int
    checks: tuple[CheckResult, ...]
    closed_form_signs: Optional[dict[int, int]] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(check for check in self.checks if not check.passed)

    def as_flags(self) -> dict[str, bool]:
        return {check.name: check.passed for check in self.checks}


class VerificationHandler:
    """
    Runs the exact invariant suite for one deck size and the cross-size checks (envelope, decay, counterexample).
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def _run_check(name: str, check: Callable[[], tuple[bool, str]]) -> CheckResult:
        passed, detail = check()
        return CheckResult(name=name, passed=passed, detail=detail)

    @staticmethod
    def _skip(name: str, reason: str) -> CheckResult:
        return CheckResult(name=name, passed=True, detail=reason, skipped=True)

    @staticmethod
    def verify(n: int, oracle_max_n: int = ORACLE_MAX_N, direct_max_n: int = DIRECT_MAX_N,
               direct_max_k: int = DIRECT_MAX_K) -> VerificationReport:
        """
        Runs every exact check that applies to deck size n.

        :param n: Deck size, n >= 2.
        :type n: int
        :param oracle_max_n: Largest n compared against the brute force enumeration.
        :type oracle_max_n: int
        :param direct_max_n: Largest n for which B^-1 M B and the direct powers of M are formed.
        :type direct_max_n: int
        :param direct_max_k: Largest power compared against repeated multiplication.
        :type direct_max_k: int
        :return: The report with one CheckResult per check.
        :rtype: VerificationReport
        """
        MatrixBuilder._check_size(n)
        m = MatrixBuilder.position_matrix(n)
        system = SpectralHandler.build(n)
        checks = [
            VerificationHandler._run_check("doubly_stochastic", lambda: VerificationHandler._doubly_stochastic(m)),
            VerificationHandler._run_check("factorization", lambda: VerificationHandler._factorization(n, m)),
            VerificationHandler._run_check("lower_eigenbasis", lambda: VerificationHandler._lower_eigenbasis(n)),
            VerificationHandler._run_check("c_coefficients", lambda: VerificationHandler._c_coefficients(n)),
            VerificationHandler._run_check("eigen_equations", lambda: VerificationHandler._eigen_equations(m, system)),
            VerificationHandler._run_check("biorthogonality", lambda: VerificationHandler._biorthogonality(system)),
            VerificationHandler._run_check("change_of_basis", lambda: VerificationHandler._change_of_basis(system)),
            VerificationHandler._run_check("kernel", lambda: VerificationHandler._kernel(m, system)),
            VerificationHandler._run_check("dimension_count", lambda: VerificationHandler._dimension_count(system)),
            VerificationHandler._run_check("closed_form_left_sign", lambda: VerificationHandler._signs(system)),
            VerificationHandler._run_check("linf_bounds", lambda: VerificationHandler._linf(n)),
            VerificationHandler._run_check("bernoulli_identity", lambda: VerificationHandler._bernoulli_identity(n)),
            VerificationHandler._run_check("a_constant_bound", lambda: VerificationHandler._a_constant(n)),
            VerificationHandler._run_check("bernoulli_bound", lambda: VerificationHandler._bernoulli_bound(n)),
        ]

        if n >= 3:
            checks.append(VerificationHandler._run_check("clay_vector", lambda: VerificationHandler._clay(system)))
        else:
            checks.append(VerificationHandler._skip("clay_vector", "needs n >= 3"))

        if n <= oracle_max_n:
            checks.append(VerificationHandler._run_check(
                "oracle_match", lambda: (MatrixBuilder.brute_force_position_matrix(n) == m, f"2^{n} transcripts")))
        else:
            checks.append(VerificationHandler._skip("oracle_match", f"n > {oracle_max_n}"))

        if n <= direct_max_n:
            checks.append(VerificationHandler._run_check("basis_change", lambda: VerificationHandler._basis(n, m)))
            checks.append(VerificationHandler._run_check("flip_in_basis", lambda: VerificationHandler._flip(n)))
            checks.append(VerificationHandler._run_check(
                "spectral_power", lambda: VerificationHandler._powers(n, m, direct_max_k)))
        else:
            for name in ("basis_change", "flip_in_basis", "spectral_power"):
                checks.append(VerificationHandler._skip(name, f"n > {direct_max_n}"))

        report = VerificationReport(n=n, checks=tuple(checks), closed_form_signs=dict(system.closed_form_signs))
        VerificationHandler.log_report(report)
        return report

    @staticmethod
    def spectral_checks(system: EigenSystem) -> VerificationReport:
        """Checks that only involve the eigensystem, for the verification block of a spectrum."""
        n = system.n
        m = MatrixBuilder.position_matrix(n)
        checks = [
            VerificationHandler._run_check("eigen_equations", lambda: VerificationHandler._eigen_equations(m, system)),
            VerificationHandler._run_check("biorthogonality", lambda: VerificationHandler._biorthogonality(system)),
            VerificationHandler._run_check("change_of_basis", lambda: VerificationHandler._change_of_basis(system)),
            VerificationHandler._run_check("kernel", lambda: VerificationHandler._kernel(m, system)),
            VerificationHandler._run_check("dimension_count", lambda: VerificationHandler._dimension_count(system)),
            VerificationHandler._run_check("closed_form_left_sign", lambda: VerificationHandler._signs(system)),
            VerificationHandler._run_check("linf_bounds", lambda: VerificationHandler._linf(n, system)),
        ]
        if n >= 3:
            checks.append(VerificationHandler._run_check("clay_vector", lambda: VerificationHandler._clay(system)))
        return VerificationReport(n=n, checks=tuple(checks), closed_form_signs=dict(system.closed_form_signs))

    @staticmethod
    def log_report(report: VerificationReport, stage: Optional[str] = None) -> None:
        """
        Logs the report by severity: FAILED, PASSED with SKIPS, or PASSED.

        :param report: The report to log.
        :type report: VerificationReport
        :param stage: Label placed in the log line; defaults to the deck size.
        :type stage: Optional[str]
        """
        stage_txt = stage.upper() if stage else f"n={report.n}"
        failed = report.failures
        skipped = [check.name for check in report.checks if check.skipped]
        if failed:
            lines = "\n".join(f"  {check.name}: {check.detail}" for check in failed)
            logger.error(f"Verification {stage_txt} FAILED.\n{lines}")
        elif skipped:
            VERBOSE and logger.info(f"Verification {stage_txt} PASSED with SKIPS: {', '.join(skipped)}.")
            logger.success(f"Verification {stage_txt} PASSED ({len(report.checks) - len(skipped)} checks).")
        else:
            logger.success(f"Verification {stage_txt} PASSED ({len(report.checks)} checks).")

    @staticmethod
    def require(report: VerificationReport) -> VerificationReport:
        """
        :raises VerificationError: If any check of the report failed.
        """
        if not report.passed:
            names = ", ".join(check.name for check in report.failures)
            raise VerificationError(f"Verification failed for n={report.n}: {names}.")
        return report

    @staticmethod
    def _doubly_stochastic(m: RationalMatrix) -> tuple[bool, str]:
        rows_ok = all(s == 1 for s in m.row_sums())
        cols_ok = all(s == 1 for s in m.column_sums())
        return rows_ok and cols_ok, f"rows sum to 1: {rows_ok}, columns sum to 1: {cols_ok}"

    @staticmethod
    def _factorization(n: int, m: RationalMatrix) -> tuple[bool, str]:
        identity_plus_flip = RationalMatrix.identity(n) + MatrixBuilder.flip_P(n)
        return MatrixBuilder.lower_L(n) @ identity_plus_flip == m, "M = L (I + P)"

    @staticmethod
    def _lower_eigenbasis(n: int) -> tuple[bool, str]:
        b = MatrixBuilder.basis_B(n)
        return MatrixBuilder.lower_L(n) @ b == b @ MatrixBuilder.lower_diagonal(n), "L B = B diag(2^-1..2^-n)"

    @staticmethod
    def _c_coefficients(n: int) -> tuple[bool, str]:
        big_n = n - 1
        falling = [[Numerics.falling_factorial(x, k) for k in range(big_n + 1)] for x in range(big_n + 1)]
        for top in range(big_n + 1):
            for m in range(top + 1):
                coefficients = MatrixBuilder.c_coefficients(top, m)
                for x in range(top + 1):
                    expanded = sum((c * falling[x][k] for k, c in enumerate(coefficients)), Fraction(0))
                    if expanded != falling[top - x][m]:
                        return False, f"expansion of ({top} - x) falling {m} fails at x={x}"
        return True, f"(N - x) falling m expanded for every N <= {big_n}"

    @staticmethod
    def _eigen_equations(m: RationalMatrix, system: EigenSystem) -> tuple[bool, str]:
        t = MatrixBuilder.t_matrix(system.n)
        for i in system.even_indices:
            lam = system.eigenvalue(i)
            if m.apply(system.right_M[i]) != scale_vector(lam, system.right_M[i]):
                return False, f"M zeta != 2^-{i} zeta"
            if m.apply_left(system.left_M[i]) != scale_vector(lam, system.left_M[i]):
                return False, f"zeta~ M != 2^-{i} zeta~"
            if t.apply(system.right_T[i]) != scale_vector(lam, system.right_T[i]):
                return False, f"T w != 2^-{i} w"
            if t.apply_left(system.left_T[i]) != scale_vector(lam, system.left_T[i]):
                return False, f"w~ T != 2^-{i} w~"
        return True, f"{len(system.even_indices)} eigenvalues, right and left, for M and T"

    @staticmethod
    def _biorthogonality(system: EigenSystem) -> tuple[bool, str]:
        for i in system.even_indices:
            for j in system.even_indices:
                expected = 1 if i == j else 0
                if SpectralHandler.inner(system.left_M[i], system.right_M[j]) != expected:
                    return False, f"<zeta~({i}), zeta({j})> != {expected}"
                if SpectralHandler.inner(system.left_T[i], system.right_T[j]) != expected:
                    return False, f"<w~({i}), w({j})> != {expected}"
        return True, "all pairs"

    @staticmethod
    def _change_of_basis(system: EigenSystem) -> tuple[bool, str]:
        b = MatrixBuilder.basis_B(system.n)
        for i in system.even_indices:
            if b.apply(system.right_T[i]) != system.right_M[i] or b.apply_left(system.left_M[i]) != system.left_T[i]:
                return False, f"zeta = B w or zeta~ B = w~ fails at i={i}"
        return True, "zeta = B w and zeta~ B = w~"

    @staticmethod
    def _kernel(m: RationalMatrix, system: EigenSystem) -> tuple[bool, str]:
        for j, eta in enumerate(system.kernel, start=1):
            if any(m.apply(eta)):
                return False, f"M eta({j}) != 0"
        return True, f"{len(system.kernel)} kernel vectors"

    @staticmethod
    def _dimension_count(system: EigenSystem) -> tuple[bool, str]:
        kernel, nonzero = len(system.kernel), len(system.even_indices)
        expected = tuple(Fraction(1, 2 ** i) for i in range(0, system.n, 2))
        ok = (kernel == system.n // 2 and kernel + nonzero == system.n
              and SpectralHandler.eigenvalues(system.n) == expected)
        return ok, f"kernel {kernel} + nonzero eigenvalues {nonzero} = {kernel + nonzero}"

    @staticmethod
    def _signs(system: EigenSystem) -> tuple[bool, str]:
        unmatched = [i for i, s in system.closed_form_signs.items() if s == 0]
        if unmatched:
            return False, f"closed form matches neither sign at i={unmatched}"
        return True, f"signs {system.closed_form_signs}"

    @staticmethod
    def _clay(system: EigenSystem) -> tuple[bool, str]:
        expected = scale_vector(Fraction(2, 3), SpectralHandler.clay_vector(system.n))
        return system.right_M[2] == expected, "zeta(2) = (2/3) v"

    @staticmethod
    def _linf(n: int, system: Optional[EigenSystem] = None) -> tuple[bool, str]:
        report = SpectralHandler.linf_norms(n, system)
        bad = [e.i for e in report.entries if not (e.right_ok and e.left_ok)]
        return report.passed, f"bounds exceeded at i={bad}" if bad else "all even i"

    @staticmethod
    def _bernoulli_identity(n: int) -> tuple[bool, str]:
        top = min(max(n, 1), BERNOULLI_IDENTITY_MAX_N)
        bad = [k for k in range(1, top + 1) if Numerics.bernoulli_identity_residual(k) != 0]
        return not bad, f"nonzero residual at {bad}" if bad else f"residual 0 for 1..{top}"

    @staticmethod
    def _a_constant(n: int) -> tuple[bool, str]:
        top = min(max(n - 1, 2), A_CONSTANT_MAX_I)
        bad = [i for i in range(2, top + 1) if Numerics.a_constant(i) > 4 * math.factorial(i)]
        return not bad, f"A_i > 4 i! at {bad}" if bad else f"A_i <= 4 i! for 2..{top}"

    @staticmethod
    def _bernoulli_bound(n: int) -> tuple[bool, str]:
        top = max(1, (n - 1) // 2)
        bad = [m for m in range(1, top + 1) if not Numerics.bernoulli_bound_holds(m)]
        return not bad, f"|B_2m| bound fails at m={bad}" if bad else f"|B_2m| <= 4 (2m)!/(2 pi)^2m for 1..{top}"

    @staticmethod
    def _basis(n: int, m: RationalMatrix) -> tuple[bool, str]:
        b, b_inv = MatrixBuilder.basis_B(n), MatrixBuilder.basis_B_inverse(n)
        inverse_ok = b @ b_inv == RationalMatrix.identity(n)
        t_ok = b_inv @ m @ b == MatrixBuilder.t_matrix(n)
        return inverse_ok and t_ok, f"B B^-1 = I: {inverse_ok}, B^-1 M B = T: {t_ok}"

    @staticmethod
    def _flip(n: int) -> tuple[bool, str]:
        b, b_inv = MatrixBuilder.basis_B(n), MatrixBuilder.basis_B_inverse(n)
        flip = MatrixBuilder.flip_in_basis(n)
        matches = b_inv @ MatrixBuilder.flip_P(n) @ b == flip
        upper = (RationalMatrix.identity(n) + flip).is_upper_triangular()
        return matches and upper, f"B^-1 P B closed form: {matches}, I + P upper triangular in basis: {upper}"

    @staticmethod
    def _powers(n: int, m: RationalMatrix, k_max: int) -> tuple[bool, str]:
        direct = m
        for k in range(1, k_max + 1):
            if k > 1:
                direct = direct @ m
            if SpectralHandler.spectral_power(n, k) != direct:
                return False, f"spectral expansion differs from M^{k}"
        return True, f"k = 1..{k_max}"

    @staticmethod
    def envelope(ns: Sequence[int], slack: float = DEFAULT_SLACK) -> tuple[CheckResult, list[EnvelopeRow]]:
        """
        Wraps ``GuessingHandler.envelope_check`` into a CheckResult.

        :param ns: Deck sizes.
        :type ns: Sequence[int]
        :param slack: Slack constant of the upper envelope.
        :type slack: float
        :return: The check and the per-size rows.
        :rtype: tuple[CheckResult, list[EnvelopeRow]]
        """
        rows = GuessingHandler.envelope_check(ns, slack)
        failed = [row.n for row in rows if not row.passed]
        escalated = [row.n for row in rows if row.escalated]
        detail = f"failed at n={failed}" if failed else f"{len(rows)} sizes, escalated: {escalated}"
        return CheckResult(name="envelope", passed=not failed, detail=detail), rows

    @staticmethod
    def decay(ns: Sequence[int] = (8, 16, 32, 64), epsilon: float = 1.0,
              threshold: int = 16) -> tuple[CheckResult, DecayReport]:
        """
        Tabulates |E_{n,k} - 1| n^(2 epsilon) and checks it is non-increasing from ``threshold`` on.
        """
        report = GuessingHandler.decay_table(ns, epsilon)
        ok = report.non_increasing_from(threshold) and all(row.score >= 1 for row in report.rows)
        return CheckResult(name="decay", passed=ok, detail=f"non-increasing from n={threshold}: {ok}"), report

    @staticmethod
    def counterexample() -> tuple[CheckResult, CounterexampleReport]:
        report = GuessingHandler.clay_counterexample()
        detail = f"M(19,10) = {report.m19}, M(20,10) = {report.m20}, argmax card {report.column_argmax}"
        return CheckResult(name="counterexample", passed=report.holds, detail=detail), report
