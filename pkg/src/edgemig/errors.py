"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input is outside the domain a function is defined on."""


class IncompleteMetricsError(DomainError):
    """Aggregation cannot produce a metrics view (missing reports)."""


class CalibrationError(DomainError):
    """A parameter fit is under-determined or otherwise impossible."""


class MissingFlowError(DomainError):
    """A flow-table operation referenced an unknown connection."""


class ScenarioError(DomainError):
    """A scenario document is malformed or inconsistent."""
