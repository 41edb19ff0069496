"""Exception hierarchy. Each family maps to one CLI exit code."""


class ReplicheckError(Exception):
    exit_code = 1


class DesignError(ReplicheckError):
    """The experiment layout cannot support the requested analysis."""

    exit_code = 2


class UnsupportedDesignError(DesignError):
    pass


class DegenerateDataError(DesignError):
    """Zero residual variation, so no F ratio or interval can be formed."""


class ConsistencyError(DesignError):
    """Summary inputs (df, SS, N) do not describe a coherent ANOVA table."""


class ParseError(ReplicheckError):
    exit_code = 3


class NumericError(ReplicheckError):
    """Internal precision failure (e.g. a series that did not converge)."""

    exit_code = 4


class ConfigurationError(ReplicheckError, ValueError):
    exit_code = 2
