"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class CoresetError(Exception):
    code = "coreset_error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class DimensionMismatch(CoresetError, ValueError):
    code = "dimension_mismatch"


class InvalidParameter(CoresetError, ValueError):
    code = "invalid_parameter"


class EmptyGroupError(CoresetError):
    code = "zero_cost_group"


class UndefinedDistortion(CoresetError, ZeroDivisionError):
    code = "zero_reference_cost"


class PointFormatError(CoresetError, ValueError):
    """Raised by the point-file readers; ``code`` names the failure kind."""

    code = "parse_error"

    def __init__(self, message, code=None, row=None):
        super().__init__(message, code)
        self.row = row
