"""
Module for the on-disk cache of eigensystems.

Entries are TOML files keyed by (n, artifact version). Each entry stores its payload with rationals as "p/q" strings
and a sha256 checksum of that payload. A hit is trusted only after the checksum matches and the decoded
eigensystem passes the spectral invariants again; otherwise the entry is evicted with a warning and recomputed.
"""
import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

import tomli_w  # Used only for writing TOML, not reading
from loguru import logger

from shelf_engine.shelf_lib.errors import CacheCorruptionError
from shelf_engine.shelf_lib.globals import ARTIFACT_VERSION, CACHE_ENV_VAR, DEFAULT_CACHE_DIR, VERBOSE
from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.serialization import OutputWriter
from shelf_engine.shelf_lib.services.spectral import EigenSystem, SpectralHandler


class SpectrumCache:
    """
    Disk cache of ``EigenSystem`` values for one directory.
    """

    def __init__(self, directory: Optional[str | Path] = None, version: str = ARTIFACT_VERSION):
        self.directory = SpectrumCache.resolve_directory(directory)
        self.version = version

    @staticmethod
    def resolve_directory(directory: Optional[str | Path] = None) -> Path:
        """
        Cache directory: the explicit argument, then the environment variable, then the per-user default.
        """
        if directory:
            return Path(directory).expanduser()
        from_env = os.environ.get(CACHE_ENV_VAR)
        if from_env:
            return Path(from_env).expanduser()
        return DEFAULT_CACHE_DIR

    def path_for(self, n: int) -> Path:
        return self.directory / f"spectrum-n{n}-v{self.version}.toml"

    @staticmethod
    def _calculate_hash(payload: dict[str, Any]) -> str:
        """
        Computes the sha256 of the payload in canonical JSON form (sorted keys, no whitespace).

        :param payload: The serialized eigensystem.
        :type payload: dict[str, Any]
        :return: Hex digest.
        :rtype: str
        """
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @staticmethod
    def encode(system: EigenSystem) -> dict[str, Any]:
        def vectors(table: dict[int, tuple]) -> dict[str, list[str]]:
            return {str(i): [Numerics.to_str(x) for x in vec] for i, vec in table.items()}

        return {
            "n": system.n,
            "even_indices": list(system.even_indices),
            "right_T": vectors(system.right_T),
            "right_M": vectors(system.right_M),
            "left_T": vectors(system.left_T),
            "left_M": vectors(system.left_M),
            "kernel": [[Numerics.to_str(x) for x in vec] for vec in system.kernel],
            "closed_form_signs": {str(i): s for i, s in system.closed_form_signs.items()},
        }

    @staticmethod
    def decode(payload: dict[str, Any]) -> EigenSystem:
        """
        Rebuilds an EigenSystem from its payload.

        :raises CacheCorruptionError: If a field is missing or malformed.
        """
        try:
            def vectors(table: dict[str, list[str]]) -> dict[int, tuple]:
                return {int(i): tuple(Numerics.from_str(x) for x in vec) for i, vec in table.items()}

            return EigenSystem(
                n=int(payload["n"]),
                even_indices=tuple(int(i) for i in payload["even_indices"]),
                right_T=vectors(payload["right_T"]),
                right_M=vectors(payload["right_M"]),
                left_T=vectors(payload["left_T"]),
                left_M=vectors(payload["left_M"]),
                kernel=tuple(tuple(Numerics.from_str(x) for x in vec) for vec in payload["kernel"]),
                closed_form_signs={int(i): int(s) for i, s in payload["closed_form_signs"].items()},
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise CacheCorruptionError(f"Malformed cache payload: {e}") from e

    @staticmethod
    def check_invariants(system: EigenSystem) -> None:
        """
        Re-checks a decoded eigensystem against freshly built M, T and B.

        :raises CacheCorruptionError: If any spectral invariant fails.
        """
        from shelf_engine.shelf_lib.services.verification import VerificationHandler

        n = system.n
        if system.even_indices != SpectralHandler.even_indices(n):
            raise CacheCorruptionError(f"Cached even indices do not match n={n}.")
        expected_keys = set(system.even_indices)
        if any(set(table) != expected_keys for table in (system.right_T, system.right_M, system.left_T,
                                                          system.left_M)):
            raise CacheCorruptionError(f"Cached eigenvector tables are incomplete for n={n}.")
        if any(len(vec) != n for table in (system.right_T, system.right_M, system.left_T, system.left_M)
               for vec in table.values()):
            raise CacheCorruptionError(f"Cached eigenvectors have the wrong length for n={n}.")

        m = MatrixBuilder.position_matrix(n)
        for name, (ok, detail) in (
                ("eigen_equations", VerificationHandler._eigen_equations(m, system)),
                ("biorthogonality", VerificationHandler._biorthogonality(system)),
                ("change_of_basis", VerificationHandler._change_of_basis(system)),
                ("kernel", VerificationHandler._kernel(m, system)),
                ("dimension_count", VerificationHandler._dimension_count(system))):
            if not ok:
                raise CacheCorruptionError(f"Cached spectrum for n={n} fails {name}: {detail}")

        if system.kernel != SpectralHandler.kernel_basis(n):
            raise CacheCorruptionError(f"Cached spectrum for n={n} fails kernel_basis: "
                                       f"vectors differ from e_j - e_(n-j+1)")
        signs = {i: SpectralHandler.closed_form_sign(n, i, system.left_M[i]) for i in system.nonzero_indices}
        if system.closed_form_signs != signs:
            raise CacheCorruptionError(f"Cached spectrum for n={n} fails closed_form_signs: "
                                       f"cached {system.closed_form_signs}, recomputed {signs}")
        ok, detail = VerificationHandler._signs(system)
        if not ok:
            raise CacheCorruptionError(f"Cached spectrum for n={n} fails closed_form_left_sign: {detail}")

    def get(self, n: int) -> Optional[EigenSystem]:
        """
        Returns the cached eigensystem for n, or None on a miss. Corrupt entries are evicted.

        :param n: Deck size.
        :type n: int
        :return: The validated eigensystem, or None.
        :rtype: Optional[EigenSystem]
        """
        path = self.path_for(n)
        if not path.exists():
            VERBOSE and logger.info(f"Cache miss for n={n} in {self.directory}.")
            return None
        try:
            with open(path, "rb") as file:
                data = tomllib.load(file)
            entry, payload = data.get("entry", {}), data.get("payload")
            if entry.get("version") != self.version or entry.get("n") != n or payload is None:
                raise CacheCorruptionError(f"Cache entry key does not match (n={n}, version={self.version}).")
            if entry.get("checksum") != SpectrumCache._calculate_hash(payload):
                raise CacheCorruptionError("Checksum mismatch.")
            system = SpectrumCache.decode(payload)
            SpectrumCache.check_invariants(system)
        except (CacheCorruptionError, tomllib.TOMLDecodeError, OSError) as e:
            logger.warning(f"Evicting corrupt cache entry '{path}': {e}")
            self.evict(n)
            return None
        VERBOSE and logger.info(f"Cache hit for n={n}.")
        return system

    def put(self, system: EigenSystem) -> Path:
        """
        Writes the eigensystem atomically and returns the entry path.

        :raises OSError: If the entry cannot be written.
        """
        payload = SpectrumCache.encode(system)
        document = {"entry": {"n": system.n, "version": self.version,
                              "checksum": SpectrumCache._calculate_hash(payload)},
                    "payload": payload}
        path = self.path_for(system.n)
        OutputWriter.write_atomic(tomli_w.dumps(document), path)
        VERBOSE and logger.info(f"Cached spectrum for n={system.n} at {path}.")
        return path

    def evict(self, n: int) -> None:
        try:
            self.path_for(n).unlink(missing_ok=True)
        except OSError as e:
            logger.warning(f"Could not remove cache entry for n={n}: {e}")

    def get_or_build(self, n: int) -> EigenSystem:
        """
        Returns the cached eigensystem or builds and caches it. Write failures are logged and do not fail the call.
        """
        system = self.get(n)
        if system is not None:
            return system
        system = SpectralHandler.build(n)
        try:
            self.put(system)
        except OSError as e:
            logger.warning(f"Could not write cache entry for n={n}: {e}")
        return system
