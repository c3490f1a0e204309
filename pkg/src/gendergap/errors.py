"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class GenderGapError(Exception):
    """Base class for all package errors."""


class IoFailure(GenderGapError):
    pass


class MalformedRow(GenderGapError):
    def __init__(self, line_no: int, reason: str = "column count"):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownArea(GenderGapError):
    def __init__(self, value: str):
        super().__init__(f"unknown JCR area {value!r}")
        self.value = value


class DuplicateConflict(GenderGapError):
    pass


class EmptyName(GenderGapError):
    pass


class EmptyInstitution(GenderGapError):
    pass


class UnknownCountryCode(GenderGapError):
    def __init__(self, code: str):
        super().__init__(f"unknown country code {code!r}")
        self.code = code


class ProviderUnavailable(GenderGapError):
    """The remote service could not answer; callers treat this as "no result"."""


class QuotaExceeded(GenderGapError):
    def __init__(self, message: str = "quota exceeded", retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class EmptyPaper(GenderGapError, ValueError):
    pass


class NoKnownGender(GenderGapError, ValueError):
    pass


class UnsupportedShape(GenderGapError):
    pass


class InvalidManifest(GenderGapError):
    pass


class ConfigError(GenderGapError):
    pass


class MissingCheckpoint(GenderGapError):
    pass
