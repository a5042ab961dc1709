"""Exception types shared across the package."""


class MarketError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(MarketError):
    """An instance, outcome, or profile is internally inconsistent."""


class CapacityError(MarketError):
    """An exhaustive enumeration would exceed its configured budget."""


class UnsupportedInstance(MarketError):
    """A mechanism or checker was called outside its declared preconditions."""


class ConfigError(MarketError):
    """An experiment config failed validation.

    ``field`` carries the dotted path of the offending entry so CLI
    diagnostics can point at it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
