"""Exception hierarchy shared by every aefuse module."""


class AEFuseError(Exception):
    """Base class for all library errors."""


# image I/O and primitives

class PGMError(AEFuseError, ValueError):
    """Problem decoding a PGM file; ``offset`` is the failing byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MalformedHeader(PGMError):
    pass


class UnsupportedMaxval(PGMError):
    pass


class TruncatedData(PGMError):
    pass


class IoFailure(AEFuseError, OSError):
    pass


class EvenKernel(AEFuseError, ValueError):
    pass


class InvalidSigma(AEFuseError, ValueError):
    pass


class DimensionMismatch(AEFuseError, ValueError):
    pass


class TooSmall(AEFuseError, ValueError):
    pass


# metrics

class InsufficientPatches(AEFuseError, ValueError):
    pass


class ImageTooSmall(TooSmall):
    pass


class SingularCovariance(AEFuseError, ArithmeticError):
    pass


# fusion operators

class WeightOutOfRange(AEFuseError, ValueError):
    pass


class TooManyLevels(AEFuseError, ValueError):
    pass


class NoApplicableMethod(AEFuseError, LookupError):
    pass


# oracle

class EmptyCandidates(AEFuseError, ValueError):
    pass


class UnknownPair(AEFuseError, KeyError):
    pass


class DuplicateMethodForPair(AEFuseError, ValueError):
    pass


class CorruptIndex(AEFuseError, ValueError):
    pass


# learner

class MissingOracle(AEFuseError, ValueError):
    pass


class EmptyDataset(AEFuseError, ValueError):
    pass


class BadMagic(AEFuseError, ValueError):
    pass


class WrongLength(AEFuseError, ValueError):
    pass


# configuration

class ConfigError(AEFuseError, ValueError):
    """Invalid run configuration; ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class ConfigRangeError(ConfigError):
    pass
