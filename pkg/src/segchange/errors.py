"""Exception types shared across the package."""


class SegChangeError(Exception):
    """Base class for every error raised by this library."""


class DimensionError(SegChangeError):
    """Operands or inputs disagree about raster dimensions."""


class CorruptMaskError(SegChangeError):
    """Run-length data violates the mask encoding contract."""


class EmptyMaskError(SegChangeError):
    """An operation that needs at least one set pixel got an empty mask."""


class FormatError(SegChangeError):
    """A file or document does not match its documented format.

    Carries enough context (source name, byte offset, field path) to point
    a user at the exact spot that failed to parse.
    """

    def __init__(self, message: str, *, source: str | None = None,
                 offset: int | None = None, field: str | None = None):
        self.source = source
        self.offset = offset
        self.field = field
        parts = []
        if source is not None:
            parts.append(str(source))
        if offset is not None:
            parts.append(f"byte {offset}")
        if field is not None:
            parts.append(field)
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class LegendError(SegChangeError):
    """Legend is malformed or does not cover a class code in use."""


class PairingError(SegChangeError):
    """A prompted result cannot be paired with its instance."""


class PlacementError(SegChangeError):
    """Synthetic scene generation could not place the requested objects."""


class ExportError(SegChangeError):
    """Data cannot be represented in the requested export format."""
