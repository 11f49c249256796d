"""Exception hierarchy shared by every simulator module."""


class SimulationError(Exception):
    ...


class InputShapeError(SimulationError, ValueError):
    ...


class ParameterError(SimulationError, ValueError):
    ...


class ConfigurationError(SimulationError):
    ...


class NumericalDegeneracyError(SimulationError, ArithmeticError):
    ...


class DegenerateChannelError(NumericalDegeneracyError):
    ...


class ExportError(SimulationError, OSError):
    """Raised when a result file cannot be written; carries the path."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"cannot write {self.path}: {reason}")
