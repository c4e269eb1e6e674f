"""Exception hierarchy. Each class knows the CLI exit code it maps to."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class ApolloniaError(Exception):
    exit_code = EXIT_NUMERIC
    http_status = 500


class InvalidInputError(ApolloniaError, ValueError):
    exit_code = EXIT_USAGE
    http_status = 400


class RuleRangeError(InvalidInputError, IndexError):
    """Requested more rule nodes than the packing has emitted."""


class DomainFileError(ApolloniaError):
    exit_code = EXIT_VALIDATION
    http_status = 400


class DomainValidationError(ApolloniaError):
    exit_code = EXIT_VALIDATION
    http_status = 422

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class GeometryError(ApolloniaError):
    pass


class DegenerateConfigurationError(GeometryError):
    pass


class PackingGeometryError(GeometryError):
    """A Descartes solve failed deep inside a packing; generation halts."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NumericalLimitError(ApolloniaError):
    pass


class InsufficientDataError(ApolloniaError):
    pass


class GreedyStallError(ApolloniaError):
    def __init__(self, message, partial_series):
        super().__init__(message)
        self.partial_series = partial_series
