"""
Dense immutable matrices of exact rationals.

Index convention: matrices and vectors are stored 0-based. Deck positions and card labels are 1-based (1..n) at the
public API of the matrix builders and guessing strategies, and basis/eigen indices are 0-based (0..n-1). The
builders do the translation; this module only knows 0-based storage.
"""
from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]


class RationalMatrix:
    """
    An immutable rows x cols matrix of Fractions stored row-major.

    Equality is exact entrywise equality; there is no tolerance.
    """

    __slots__ = ("_rows", "_cols", "_data")

    def __init__(self, rows: Iterable[Iterable[Fraction | int]]):
        data = tuple(tuple(Fraction(x) for x in row) for row in rows)
        if not data or not data[0]:
            raise ValueError("A RationalMatrix needs at least one row and one column.")
        width = len(data[0])
        if any(len(row) != width for row in data):
            raise ValueError("All rows of a RationalMatrix must have the same length.")
        self._rows = len(data)
        self._cols = width
        self._data = data

    @classmethod
    def from_function(cls, rows: int, cols: int, entry) -> "RationalMatrix":
        """Builds a matrix from ``entry(i, j)`` evaluated at 0-based indices."""
        return cls([[entry(i, j) for j in range(cols)] for i in range(rows)])

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls.from_function(n, n, lambda i, j: 1 if i == j else 0)

    @classmethod
    def ones(cls, n: int) -> "RationalMatrix":
        return cls.from_function(n, n, lambda i, j: 1)

    @classmethod
    def diagonal(cls, values: Sequence[Fraction | int]) -> "RationalMatrix":
        n = len(values)
        return cls.from_function(n, n, lambda i, j: values[i] if i == j else 0)

    @classmethod
    def outer(cls, left: Sequence[Fraction], right: Sequence[Fraction]) -> "RationalMatrix":
        return cls([[a * b for b in right] for a in left])

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows, self._cols

    def __getitem__(self, index: tuple[int, int]) -> Fraction:
        i, j = index
        return self._data[i][j]

    def row(self, i: int) -> Vector:
        return self._data[i]

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self._data)

    def to_rows(self) -> tuple[Vector, ...]:
        return self._data

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self._data == other._data

    def __hash__(self) -> int:
        return hash(self._data)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in row) for row in self._data)
        return f"RationalMatrix({self._rows}x{self._cols}: [{body}])"

    def _check_same_shape(self, other: "RationalMatrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"Shape mismatch: {self.shape} vs {other.shape}.")

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)])

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        return RationalMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)])

    def scale(self, factor: Fraction | int) -> "RationalMatrix":
        return RationalMatrix([[factor * a for a in row] for row in self._data])

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(zip(*self._data))

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self._cols != other._rows:
            raise ValueError(f"Cannot multiply {self.shape} by {other.shape}.")
        zero = Fraction(0)
        product = []
        for row in self._data:
            acc = [zero] * other._cols
            # Skipping zeros keeps triangular products cheap.
            for k, a in enumerate(row):
                if a:
                    other_row = other._data[k]
                    for j in range(other._cols):
                        b = other_row[j]
                        if b:
                            acc[j] += a * b
            product.append(acc)
        return RationalMatrix(product)

    def apply(self, vector: Sequence[Fraction]) -> Vector:
        """Matrix times column vector."""
        if len(vector) != self._cols:
            raise ValueError(f"Vector of length {len(vector)} does not fit a {self.shape} matrix.")
        return tuple(sum((a * x for a, x in zip(row, vector) if a and x), Fraction(0)) for row in self._data)

    def apply_left(self, vector: Sequence[Fraction]) -> Vector:
        """Row vector times matrix."""
        if len(vector) != self._rows:
            raise ValueError(f"Vector of length {len(vector)} does not fit a {self.shape} matrix.")
        acc = [Fraction(0)] * self._cols
        for x, row in zip(vector, self._data):
            if x:
                for j, a in enumerate(row):
                    if a:
                        acc[j] += x * a
        return tuple(acc)

    def power(self, k: int) -> "RationalMatrix":
        """Exact power by repeated squaring; ``k = 0`` gives the identity."""
        if self._rows != self._cols:
            raise ValueError("Only square matrices have powers.")
        if k < 0:
            raise ValueError(f"Exponent must be nonnegative, got {k}.")
        result = RationalMatrix.identity(self._rows)
        square = self
        while k:
            if k & 1:
                result = result @ square
            k >>= 1
            if k:
                square = square @ square
        return result

    def row_sums(self) -> Vector:
        return tuple(sum(row, Fraction(0)) for row in self._data)

    def column_sums(self) -> Vector:
        return tuple(sum(col, Fraction(0)) for col in zip(*self._data))

    def max_abs(self) -> Fraction:
        return max(abs(x) for row in self._data for x in row)

    def is_upper_triangular(self) -> bool:
        return all(self._data[i][j] == 0 for i in range(self._rows) for j in range(min(i, self._cols)))

    def is_lower_triangular(self) -> bool:
        return all(self._data[i][j] == 0 for i in range(self._rows) for j in range(i + 1, self._cols))


def dot(left: Sequence[Fraction], right: Sequence[Fraction]) -> Fraction:
    if len(left) != len(right):
        raise ValueError(f"Vectors of lengths {len(left)} and {len(right)} cannot be paired.")
    return sum((a * b for a, b in zip(left, right)), Fraction(0))


def scale_vector(factor: Fraction | int, vector: Sequence[Fraction]) -> Vector:
    return tuple(factor * x for x in vector)


def linf(vector: Sequence[Fraction]) -> Fraction:
    return max(abs(x) for x in vector)
