"""Exception types raised by canmeas."""


class CanmeasError(ValueError):
    """Base class for all contract violations raised by this package."""


class NotHermitian(CanmeasError):
    pass


class DimensionMismatch(CanmeasError):
    pass


class BadSize(CanmeasError):
    pass


class SupportViolation(CanmeasError):
    """A pointer packet does not fit inside the periodic lattice window."""


class BadWeight(CanmeasError):
    pass


class TooLarge(CanmeasError):
    pass


class BinMisaligned(CanmeasError):
    """An eigenvalue of the measured observable sits on a pointer-bin edge."""


class ZeroProbability(CanmeasError):
    pass


class GridTooCoarse(CanmeasError):
    pass


class NotCommensurate(CanmeasError):
    """Observable eigenvalues are not integer multiples of the lattice spacing."""


class ConfigError(CanmeasError):
    pass
