"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line tool:
2 for usage/configuration problems, 3 for numerical failures (singular
statistics), 4 for I/O and file-format failures.
"""


class SpecDetError(Exception):
    exit_code = 2


# -- usage / configuration -------------------------------------------------

class ConfigError(SpecDetError, ValueError):
    exit_code = 2


class DimensionMismatch(ConfigError):
    pass


class BandCountMismatch(DimensionMismatch):
    pass


class EmptyCube(ConfigError):
    pass


class EmptySubset(ConfigError):
    pass


class ZeroSignature(ConfigError):
    pass


class InvalidRect(ConfigError):
    pass


class NotPSDCovariance(ConfigError):
    pass


class DegenerateVariance(ConfigError):
    pass


class DegenerateTruth(ConfigError):
    pass


# -- numerical -------------------------------------------------------------

class NumericalError(SpecDetError, ArithmeticError):
    exit_code = 3


class NotPositiveDefinite(NumericalError):
    """A Cholesky pivot fell at or below the scale-aware tolerance."""


class SingularCorrelation(NotPositiveDefinite):
    pass


class SingularCovariance(NotPositiveDefinite):
    pass


class SingularAugmentedCorrelation(NotPositiveDefinite):
    """The all-one band is (numerically) an affine combination of the data bands."""


class DegenerateMean(NumericalError):
    """``1 - m^T R^-1 m`` is not safely positive, so ``R - m m^T`` is singular."""


class TargetEqualsMean(NumericalError):
    pass


# -- I/O -------------------------------------------------------------------

class EnviError(SpecDetError):
    exit_code = 4


class MissingMagic(EnviError):
    pass


class MissingRequiredField(EnviError):
    def __init__(self, name: str):
        super().__init__(f"required header field missing: {name!r}")
        self.name = name


class MalformedList(EnviError):
    pass


class PayloadSizeMismatch(EnviError):
    pass


class UnsupportedDataType(EnviError):
    pass
