"""Exception types shared across the toolkit."""


class FincastError(Exception):
    """Base class for all toolkit errors."""


class DataError(FincastError):
    """Malformed or invalid input data (bad rows, duplicate dates, degenerate ranges)."""


class ConfigError(FincastError):
    """Invalid configuration or usage (bad flags, missing inputs, contract violations)."""


class DivergenceError(FincastError):
    """Training produced a non-finite loss or gradient."""
