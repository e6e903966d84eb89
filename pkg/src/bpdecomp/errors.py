"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ModelInapplicableError(DomainError):
    """The branching model needs a supercritical intensity (lambda > 1)."""


class ParseError(ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DegenerateSampleError(ValueError):
    """Too few observations to estimate a variance."""


class InsufficientDataError(ValueError):
    """Not enough pooled bins to run a goodness-of-fit test."""


class SimulationLimitError(RuntimeError):
    """A simulated tree outgrew the configured node budget."""
