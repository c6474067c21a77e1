"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class ConfigurationError(ValueError):
    """A step size or run configuration is outside its admissible range."""


class NumericalFailure(ArithmeticError):
    """An iteration diverged or a kernel failed to converge."""


class StalenessViolation(RuntimeError):
    """Measured staleness exceeded the declared bound ``tau_max``."""

    def __init__(self, task_id, k, staleness, tau_max):
        self.task_id = task_id
        self.k = k
        self.staleness = staleness
        self.tau_max = tau_max
        super().__init__(
            f"task {task_id} at update k={k}: staleness {staleness} exceeds "
            f"tau_max={tau_max}"
        )


class DataFormatError(ValueError):
    """A task file or manifest could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
