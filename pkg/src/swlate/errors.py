"""Exception hierarchy shared across the package.

The CLI maps each category to a stable exit code: config errors exit 2,
data errors exit 3, estimation errors exit 4.
"""

from __future__ import annotations


class SwlateError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    category = "internal"


class ConfigError(SwlateError):
    """Invalid run configuration. Collects every violation, not just the first."""

    exit_code = 2
    category = "config"

    def __init__(self, errors: list[str] | str):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DataError(SwlateError):
    """Problem with input data files or their contents."""

    exit_code = 3
    category = "data"


class MappingError(DataError):
    """Column-mapping config does not match the data file."""


class ParseError(DataError):
    """A cell could not be parsed as a number."""


class ValidationError(DataError):
    """Data violates a sample invariant (binary columns, missing values)."""


class EstimationError(SwlateError):
    """Estimation cannot proceed or produced an unusable result."""

    exit_code = 4
    category = "estimation"


class CrossfitError(EstimationError):
    """A nuisance fit failed inside the cross-fitting loop."""


class NumericalError(EstimationError):
    """A numerical failure in a learner (e.g. singular design matrix)."""


class InternalError(SwlateError):
    """A contract the package enforces internally was breached."""
