class ContactRomError(Exception):
    """Base class for every error raised by contactrom."""


class UsageError(ContactRomError):
    """Bad input: configuration, parameters, files or mismatched models."""


class NumericalFailure(ContactRomError, ArithmeticError):
    """A numerical kernel could not produce a valid result."""
