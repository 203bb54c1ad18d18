"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: validation failures exit 2,
size-guard refusals exit 3, IO/runtime failures exit 1.
"""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class SizeGuardError(RuntimeError):
    """A brute-force enumeration would exceed its documented size cap."""


class BoundInapplicableError(ValueError):
    """A theoretical bound's own applicability condition fails (e.g. xi >= 1)."""

    def __init__(self, message: str, xi: float | None = None):
        super().__init__(message)
        self.xi = xi
