"""breachcat: data-breach catastrophe risk from event-level records.

Severity tail fitting, trending frequency models, reporting-delay
correction, compound aggregate-loss forecasting, and damage-to-cost
extrapolation, plus a CLI that reproduces the reference tables.
"""

__version__ = "0.1.0"


class BreachcatError(Exception):
    """Base class for all breachcat errors."""


class SchemaError(BreachcatError):
    """Input file is structurally unusable (missing mandatory columns, ...)."""


class NumericalError(BreachcatError):
    """An iterative fit or simulation failed to converge.

    ``last_iterate`` carries the final parameter state when available.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
