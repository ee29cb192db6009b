"""Exception hierarchy shared across the package.

CLI exit codes: usage/parameter errors map to 1, data errors to 2,
numerical failures to 3.
"""


class MixedSslError(Exception):
    """Base class for all package errors."""


class ParameterError(MixedSslError):
    """Invalid hyperparameter or configuration value."""


class InputShapeError(MixedSslError):
    """Conformability violation between arrays."""


class DegenerateCovariateError(MixedSslError):
    """A covariate column is constant and cannot be standardized."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"covariate column {column} is constant (zero variance)")


class DataValidationError(MixedSslError):
    """One or more dataset invariants are violated."""

    def __init__(self, violations):
        self.violations = list(violations)
        msgs = "; ".join(str(v) for v in self.violations)
        super().__init__(f"dataset validation failed: {msgs}")


class SchemaError(DataValidationError):
    """A CSV input does not conform to the documented file schema."""

    def __init__(self, message: str):
        self.violations = [message]
        MixedSslError.__init__(self, message)


class NotPositiveDefiniteError(MixedSslError):
    """A matrix required to be positive definite is not."""


class ConditioningError(MixedSslError):
    """A linear solve or factorization failed due to ill conditioning."""


class DivergenceError(MixedSslError):
    """The optimizer produced a non-finite objective or iterate."""

    def __init__(self, message: str, trace=None):
        self.trace = trace or []
        super().__init__(message)
