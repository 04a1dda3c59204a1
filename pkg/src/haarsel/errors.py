"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes or lengths do not agree."""


class DomainError(ValueError):
    """A point or parameter lies outside its admissible domain."""


class LinearPredictorOverflow(FloatingPointError):
    """The linear predictor exceeded the exp-overflow guard."""


class ConfigError(ValueError):
    """A scenario or method configuration is malformed."""


class FormatError(ValueError):
    """An input file does not follow its documented layout."""
