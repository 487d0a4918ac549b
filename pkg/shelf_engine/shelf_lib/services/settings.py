"""
Module for reading and writing the engine's TOML configuration.

Sections and keys:
- ``[exact] max_n``: largest deck size computed exactly by default.
- ``[guess] slack``: slack constant of the upper envelope.
- ``[simulate] seed, samples, workers, block_size``: Monte Carlo defaults.
- ``[cache] dir, enabled``: spectrum cache location (empty means environment variable, then per-user default).

Missing keys receive defaults; invalid values are replaced by defaults with a warning. Unknown keys are kept.
"""
import copy
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

import tomli_w  # Used only for writing TOML, not reading
from loguru import logger

from shelf_engine.shelf_lib.globals import DEFAULT_SLACK, EXACT_MAX_N, VERBOSE
from shelf_engine.shelf_lib.services.simulation import MAX_SEED

DEFAULT_SETTINGS: dict[str, dict[str, Any]] = {
    "exact": {"max_n": EXACT_MAX_N},
    "guess": {"slack": DEFAULT_SLACK},
    "simulate": {"seed": 20240601, "samples": 100_000, "workers": 1, "block_size": 4096},
    "cache": {"dir": "", "enabled": True},
}

# Validators per key: (accepted types, predicate, description).
_RULES = {
    ("exact", "max_n"): (int, lambda v: v >= 2, "an integer >= 2"),
    ("guess", "slack"): ((int, float), lambda v: v >= 0, "a nonnegative number"),
    ("simulate", "seed"): (int, lambda v: 0 <= v <= MAX_SEED, "an unsigned 64-bit integer"),
    ("simulate", "samples"): (int, lambda v: v >= 1, "a positive integer"),
    ("simulate", "workers"): (int, lambda v: v >= 1, "a positive integer"),
    ("simulate", "block_size"): (int, lambda v: v >= 1, "a positive integer"),
    ("cache", "dir"): (str, lambda v: True, "a string"),
    ("cache", "enabled"): (bool, lambda v: True, "a boolean"),
}


class SettingsHandler:
    """
    Settings Handler Utility Class

    This class provides methods to:
    - Read the engine's TOML configuration, filling missing sections and keys with defaults.
    - Replace invalid values by their defaults, logging a warning for each.
    - Write a complete configuration back to a TOML file.

    It cannot be instantiated; all methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def defaults() -> dict[str, dict[str, Any]]:
        return copy.deepcopy(DEFAULT_SETTINGS)

    @staticmethod
    def read_settings(config_path: Optional[str | Path] = None) -> dict[str, dict[str, Any]]:
        """
        Reads a TOML configuration file and completes it with defaults.

        :param config_path: Path to the TOML file. None returns the defaults.
        :type config_path: Optional[str | Path]
        :return: The effective settings, grouped by section.
        :rtype: dict[str, dict[str, Any]]
        :raises FileNotFoundError: If the file does not exist.
        :raises tomllib.TOMLDecodeError: If the file is not valid TOML.
        """
        if config_path is None:
            return SettingsHandler.defaults()
        try:
            with open(config_path, "rb") as file:
                data: dict[str, Any] = tomllib.load(file)
        except FileNotFoundError as e:
            logger.error(f"Error: Configuration file '{config_path}' not found.")
            raise e
        except tomllib.TOMLDecodeError as e:
            logger.error(f"Error: Syntactical error. Failed to parse TOML configuration file. {e}")
            raise e

        SettingsHandler._apply_defaults(data)
        VERBOSE and logger.info(f"Configuration loaded from {config_path}.")
        return data

    @staticmethod
    def _apply_defaults(settings: dict[str, Any]) -> None:
        """
        Fills missing keys with defaults and replaces invalid values, warning about each replacement.

        :param settings: Settings read from TOML, modified in place.
        :type settings: dict[str, Any]
        """
        for section, defaults in DEFAULT_SETTINGS.items():
            table = settings.get(section)
            if not isinstance(table, dict):
                if table is not None:
                    logger.warning(f"Configuration section '[{section}]' is not a table. Using defaults.")
                settings[section] = dict(defaults)
                continue
            for key, default in defaults.items():
                if key not in table:
                    VERBOSE and logger.info(f"Configuration key '{section}.{key}' missing. Using default {default!r}.")
                    table[key] = default
                    continue
                types, valid, description = _RULES[(section, key)]
                value = table[key]
                # bool is an int subclass and is only accepted where a boolean is expected.
                wrong_type = not isinstance(value, types) or (isinstance(value, bool) and types is not bool)
                if wrong_type or not valid(value):
                    logger.warning(f"Invalid value {value!r} for '{section}.{key}', expected {description}. "
                                   f"Using default {default!r}.")
                    table[key] = default

    @staticmethod
    def write_settings(settings: dict[str, Any], output_file_path: str | Path) -> None:
        """
        Writes settings as TOML.

        :param settings: Settings grouped by section.
        :type settings: dict[str, Any]
        :param output_file_path: Destination file.
        :type output_file_path: str | Path
        :raises OSError: If the file cannot be written.
        """
        try:
            with open(output_file_path, "wb") as file:
                tomli_w.dump(settings, file)
        except OSError as e:
            raise OSError(f"Could not write to file '{output_file_path}': {e}") from e
        VERBOSE and logger.info(f"Configuration written to {output_file_path}.")
