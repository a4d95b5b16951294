"""Exceptions shared by all apvoc packages."""


class VocoderError(Exception):
    """All apvoc errors are subclasses of this."""


class InvalidInput(VocoderError, ValueError):
    """An argument is outside what the operation accepts."""


class ConfigError(VocoderError, ValueError):
    """A configuration value is invalid or inconsistent."""


class ShapeError(VocoderError, ValueError):
    """Array or tensor shapes do not conform."""


class DomainError(VocoderError, ValueError):
    """A value is outside the mathematical domain of an operation."""


class NumericalError(VocoderError, ArithmeticError):
    """A NaN or infinity turned up where finite values are required."""


class FormatError(VocoderError, ValueError):
    """A file does not match its expected binary layout."""
