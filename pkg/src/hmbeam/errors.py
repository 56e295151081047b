"""Exception types raised across the package."""


class HmbError(Exception):
    """Base class for all errors raised by hmbeam."""


class NotPrime(HmbError, ValueError):
    pass


class KeyOutOfRange(HmbError, ValueError):
    pass


class IndivisibleGrid(HmbError, ValueError):
    """Number of beams does not divide the number of grid directions."""


class IndivisibleArray(HmbError, ValueError):
    """Number of arms does not divide the number of array elements."""


class IndexOutOfRange(HmbError, IndexError):
    pass


class LengthMismatch(HmbError, ValueError):
    pass


class NotPowerOfTwo(HmbError, ValueError):
    pass


class ConfigMismatch(HmbError, ValueError):
    """Codebooks of different RISs disagree on (L, B)."""


class InsufficientSlots(HmbError, ValueError):
    pass


class InconsistentBeamSets(HmbError, ValueError):
    pass


class UnknownMethod(HmbError, ValueError):
    pass


class ConfigError(HmbError, ValueError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class TargetUnreachable(HmbError, RuntimeError):
    pass
