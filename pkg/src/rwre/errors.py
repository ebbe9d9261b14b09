"""Exception hierarchy shared by all modules."""


class RWREError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RWREError, ValueError):
    """Invalid configuration, law specification or dimension mismatch."""


class FormatError(RWREError, ValueError):
    """Malformed trajectory or report file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ImpossibleHistory(RWREError, ValueError):
    """The reinforcement function is undefined at a history (zero moment)."""

    def __init__(self, history, message=None):
        self.history = history
        super().__init__(message or f"impossible history {history}")


class ReinforcementError(RWREError):
    """A reinforced walk queried its oracle at a history it cannot answer."""

    def __init__(self, history, cause):
        self.history = history
        super().__init__(f"reinforcement oracle failed at local history {history}: {cause}")


class NoObservations(RWREError, KeyError):
    """Requested statistic has no supporting observations."""

    def __str__(self):
        return str(self.args[0]) if self.args else "no observations"


class InsufficientTable(RWREError, KeyError):
    """A moment needed by the CDF inversion is not in the table."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"insufficient table: missing moment {index}")

    def __str__(self):
        return self.args[0]


class DomainError(RWREError, ValueError):
    """Argument outside the mathematical domain of an operation."""
