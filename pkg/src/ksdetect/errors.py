"""Exception hierarchy shared by all ksdetect modules."""


class KsdetectError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(KsdetectError):
    """Shapes or index ranges are inconsistent with the operation."""


class SingularityError(KsdetectError):
    """A matrix that must have full column rank does not."""

    def __init__(self, message, deficient_columns=None):
        super().__init__(message)
        self.deficient_columns = deficient_columns


class UndersampledError(SingularityError):
    """Too few observations to identify the restricted subspace."""


class DegenerateSignalError(KsdetectError):
    """The signal is identically zero, so a coherence/ratio is undefined."""


class EmptyComplementError(KsdetectError):
    """Orthogonal complement requested for a subspace that fills its ambient space."""


class InputFormatError(KsdetectError):
    """A file or config value could not be parsed."""
