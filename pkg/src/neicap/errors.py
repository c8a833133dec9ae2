"""Exception hierarchy. The CLI maps every NeicapError to exit code 1."""


class NeicapError(Exception):
    """Base class for all data and workflow errors raised by this package."""


class ManifestError(NeicapError):
    pass


class RetrievalError(NeicapError):
    pass


class ConstructionError(NeicapError):
    pass


class MetricsError(NeicapError):
    pass


class CoverageError(MetricsError):
    """Prediction log does not cover the expected example set exactly once."""


class OneClassRefusalError(MetricsError):
    """Macro-F1 requested on a gold set with fewer than two distinct labels."""


class ProbeError(NeicapError):
    pass


class AdjudicationError(NeicapError):
    pass


class ReportError(NeicapError):
    pass
