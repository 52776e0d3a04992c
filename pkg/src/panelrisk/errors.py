"""Exception hierarchy.

Every error raised by the package derives from :class:`PanelRiskError`.
The three intermediate classes map onto the CLI exit codes
(validation 1, data 2, numerical 3).
"""


class PanelRiskError(Exception):
    exit_code = 1


class ValidationError(PanelRiskError):
    """Bad configuration or arguments, detected before computation."""

    exit_code = 1


class DataError(PanelRiskError):
    exit_code = 2


class NumericalError(PanelRiskError):
    exit_code = 3


class ConfigurationError(ValidationError):
    pass


class SchemaError(DataError):
    pass


class DuplicateKeyError(DataError):
    pass


class IncompleteYearError(DataError):
    pass


class UnknownVariableError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MetadataError(DataError):
    pass


class EmptySampleError(DataError):
    pass


class DomainError(PanelRiskError, ValueError):
    pass


class InsufficientDataError(DataError, ValueError):
    pass


class PanelTooSmallError(InsufficientDataError):
    pass


class ZeroBaseError(NumericalError, ZeroDivisionError):
    pass


class SingularDesignError(NumericalError):
    pass


class CollinearEffectsError(SingularDesignError):
    pass


class DegenerateError(NumericalError):
    pass


class UndefinedCorrelationError(NumericalError):
    pass


class ComparabilityError(ValidationError):
    pass
