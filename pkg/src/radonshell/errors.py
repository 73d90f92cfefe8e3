"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates an operation's precondition (shape, range, count)."""


class DegenerateGeometryError(ValueError):
    """Points needed to span an affine hull are affinely dependent."""


class UnsupportedDimensionError(ValueError):
    """The requested ambient dimension is not handled by the operation."""
