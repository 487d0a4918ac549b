"""
Module for turning engine results into JSON or CSV text and writing it to disk.

Rationals are always written as "p/q" strings, never as floats. CSV output has a header row, uses commas and quotes
every non-numeric field, so rational strings are quoted. Files are replaced atomically.
"""
import csv
import dataclasses
import io
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from shelf_engine.shelf_lib.services.numerics import Numerics
from shelf_engine.shelf_lib.services.rational_matrix import RationalMatrix

FORMATS = ("json", "csv")


class OutputWriter:
    """
    Serializes results. All methods are static.
    """

    def __init__(self):
        raise TypeError(f"{self.__class__.__name__} is a utility class and cannot be instantiated.")

    @staticmethod
    def jsonable(value: Any) -> Any:
        """
        Converts a result into plain JSON types: Fractions become "p/q", matrices and arrays become nested lists,
        dataclasses become dicts and dict keys become strings.

        :param value: Any value produced by the engine.
        :type value: Any
        :return: A value accepted by ``json.dumps``.
        :rtype: Any
        """
        if isinstance(value, bool) or value is None or isinstance(value, str):
            return value
        if isinstance(value, Fraction):
            return Numerics.to_str(value)
        if isinstance(value, (int, float)):
            return value
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, RationalMatrix):
            return [[Numerics.to_str(x) for x in row] for row in value.to_rows()]
        if isinstance(value, Path):
            return str(value)
        if dataclasses.is_dataclass(value) and not isinstance(value, type):
            return {f.name: OutputWriter.jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, dict):
            return {str(k): OutputWriter.jsonable(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [OutputWriter.jsonable(v) for v in value]
        raise TypeError(f"Cannot serialize value of type {type(value).__name__}.")

    @staticmethod
    def to_json(payload: Any) -> str:
        return json.dumps(OutputWriter.jsonable(payload), indent=2, sort_keys=False) + "\n"

    @staticmethod
    def _csv_cell(value: Any) -> Any:
        if isinstance(value, Fraction):
            return Numerics.to_str(value)
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, bool):
            return str(value).lower()
        if value is None:
            return ""
        return value

    @staticmethod
    def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """
        Renders a table as CSV with a header row.

        :param header: Column names.
        :type header: Sequence[str]
        :param rows: Table rows, one value per column.
        :type rows: Iterable[Sequence[Any]]
        :return: The CSV text.
        :rtype: str
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter=",", quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([OutputWriter._csv_cell(v) for v in row])
        return buffer.getvalue()

    @staticmethod
    def matrix_rows(matrix: RationalMatrix | np.ndarray) -> tuple[list[str], list[list[Any]]]:
        """Long-format table (i, j, value) of a matrix, 1-based."""
        values = matrix.to_rows() if isinstance(matrix, RationalMatrix) else matrix.tolist()
        rows = [[i, j, value] for i, row in enumerate(values, start=1) for j, value in enumerate(row, start=1)]
        return ["i", "j", "value"], rows

    @staticmethod
    def write_atomic(text: str, file_path: str | Path) -> None:
        """
        Writes ``text`` to ``file_path`` through a temporary file in the same directory and ``os.replace``.

        :param text: Content to write.
        :type text: str
        :param file_path: Destination path.
        :type file_path: str | Path
        :raises OSError: If the file cannot be written.
        """
        target = Path(file_path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                    handle.write(text)
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as e:
            raise OSError(f"Could not write to file '{file_path}': {e}") from e
