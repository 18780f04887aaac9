"""
ERRORS
"""


class ISurvError(Exception):
    """Base class. `code` is the machine-readable tag the CLI prints."""

    code: str = "isurv_error"


class ValidationError(ISurvError, ValueError):
    code = "validation_error"


class SchemaError(ValidationError):
    code = "schema_error"


class SizeError(ValidationError):
    code = "size_error"


class DomainError(ValidationError):
    code = "domain_error"


class ShapeError(ValidationError):
    code = "shape_error"


class UnrepresentableLabelError(ValidationError):
    code = "unrepresentable_label"


class UndefinedMetricError(ISurvError):
    code = "undefined_metric"


class TrainingError(ISurvError):
    code = "training_error"


class FormatError(ISurvError):
    code = "format_error"


### END ###
