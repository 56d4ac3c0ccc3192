"""Exception hierarchy shared by all helios modules."""


class HeliosError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


class NumericOverflow(HeliosError):
    pass


class NoConvergence(HeliosError):
    def __init__(self, message, residual=None, voltage=None):
        super().__init__(message)
        self.residual = residual
        self.voltage = voltage


class DegenerateCurve(HeliosError):
    pass


class EmptyDataset(HeliosError):
    pass


class SchemaError(HeliosError):
    pass


class ParseError(HeliosError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NoProgress(HeliosError):
    pass


class SingularHessian(HeliosError):
    pass


class DegenerateVariance(HeliosError):
    pass


class InvalidController(HeliosError):
    pass
