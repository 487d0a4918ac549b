"""
Exceptions raised by the shelf engine beyond the built-in ``ValueError`` used for invalid arguments.
"""


class ShelfError(Exception):
    """Base class for shelf engine errors."""


class VerificationError(ShelfError):
    """A check derived from the closed forms failed. The CLI maps this to exit code 2."""


class CacheCorruptionError(ShelfError):
    """A cached spectrum failed its checksum or its invariants."""
