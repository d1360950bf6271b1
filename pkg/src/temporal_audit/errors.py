"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
TransportError -> 3. Everything else is a bug and propagates.
"""

from __future__ import annotations


class TemporalAuditError(Exception):
    """Base class for all toolkit errors."""


class UsageError(TemporalAuditError):
    """Invalid invocation: bad flags, missing config, missing credentials."""


class DataError(TemporalAuditError, ValueError):
    """Input data violates the expected format or grid semantics."""


class TransportError(TemporalAuditError):
    """The remote endpoint could not be reached or answered abnormally."""


class ParseFailure(TemporalAuditError):
    """A response body could not be parsed into a structured answer.

    Recorded per replicate by the probe; never silently dropped.
    """
