"""Exception types shared across the package."""


class EmptyInput(ValueError):
    """An operation received an empty primitive or seed list."""


class FormatError(ValueError):
    """A grid or mesh file violates the on-disk format.

    Carries the byte offset of the first offending byte when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class GridMismatch(ValueError):
    """Two grids disagree in dims, origin, or spacing."""


class DuplicateSeed(ValueError):
    """Two seeds share the same position."""


class EmptyContour(RuntimeError):
    """No grid edge intersects the retained contour faces."""


class ZeroArea(ValueError):
    """A mesh with no positive-area faces cannot be sampled."""
