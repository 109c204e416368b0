"""Exception hierarchy shared by all skylink modules."""

from __future__ import annotations


class SkylinkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SkylinkError, ValueError):
    """An argument lies outside the domain of a physical formula."""


class NoVisibilityError(SkylinkError):
    """The satellite never rises above the station's elevation cutoff."""


class InsufficientSamplesError(SkylinkError):
    pass


class EmptySiftError(SkylinkError):
    """No matched-basis detections survived sifting."""


class InconsistentStatisticsError(SkylinkError):
    """Decoy statistics cannot support a positive single-photon bound."""


class ReconciliationError(SkylinkError):
    pass


class KeyLengthError(SkylinkError, ValueError):
    pass


class KeyReuseError(SkylinkError):
    """A one-time-pad key (or key id) was presented a second time."""


class InsufficientKeyError(SkylinkError):
    pass


class QuadratureError(SkylinkError):
    pass


class ConfigError(SkylinkError):
    """Scenario-file problem, reported with line and key where known."""

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ParseError(ConfigError):
    pass


class UnitError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
