"""Shared exception types."""


class FormatError(ValueError):
    """A file or byte stream violates one of the on-disk formats."""
