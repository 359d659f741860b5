"""Exception hierarchy shared across the package.

CLI exit codes map onto this hierarchy: `InputError` and its subclasses
are usage/input problems (exit 2), `CapExceededError` and its subclasses
are configured-limit overflows (exit 3).
"""


class SetflexError(Exception):
    """Base class for all library errors."""


class InputError(SetflexError):
    """Malformed or out-of-contract input."""


class MemberSizeError(InputError):
    """A member set violates a size precondition."""


class ParseError(InputError):
    """Unparseable text input; carries a character position when known."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class PreconditionError(InputError):
    """A documented precondition failed; carries a certificate when available."""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class CapExceededError(SetflexError):
    """An exhaustive scan would exceed its configured cap."""


class BudgetExceededError(CapExceededError):
    """A brute-force scan would exceed its assignment budget."""


class InternalVerificationError(SetflexError):
    """A construction failed its mandatory self-check; indicates a bug."""
