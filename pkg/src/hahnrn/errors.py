"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (bad fraction, wrong space kind, ...)."""


class AbsoluteContinuityError(InputError):
    """A cell carries family mass where the reference measure is null."""

    def __init__(self, cell, param, message=None):
        self.cell = cell
        self.param = param
        super().__init__(
            message
            or f"absolute continuity violated at cell {cell} for parameter {param}"
        )


class ConstructionError(RuntimeError):
    """A construction finished but its own certificate is nonzero."""
