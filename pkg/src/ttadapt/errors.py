"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A filter, model, or config parameter is outside its valid range."""


class DegenerateAtmosphereError(ValueError):
    """Atmospheric light has a zero channel; transmission is undefined."""


class MetricUndefinedError(ValueError):
    """A metric was requested on data that cannot define it (e.g. no ground truth)."""
