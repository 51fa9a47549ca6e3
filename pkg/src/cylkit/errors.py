"""Exception types shared across the package."""


class CylkitError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(CylkitError):
    """An atom structure or derived object violates a construction invariant."""


class FrameMismatchError(CylkitError):
    """An operation mixed elements or maps belonging to different algebras."""


class SignatureMismatchError(CylkitError):
    """Two algebras were combined but their signatures differ."""


class CapExceededError(CylkitError):
    """A bounded computation was asked to exceed its stated cap.

    This is an explicit refusal: the caller may retry with a larger cap,
    but the result is never silently downgraded.
    """


class ParseError(CylkitError):
    """Term or equation text failed to parse; carries a position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
