"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A precondition on an operation's inputs was violated."""


class FormatError(ValueError):
    """A serialized file or byte stream is malformed."""


class NumericError(ArithmeticError):
    """A numerical kernel produced a non-finite intermediate."""
