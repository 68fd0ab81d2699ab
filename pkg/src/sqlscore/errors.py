"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SqlScoreError(Exception):
    """Base class for every error raised by this package."""


class SqlTokenizeError(SqlScoreError):
    """The SQL text could not be tokenized."""


class UnterminatedLiteral(SqlTokenizeError):
    """A quoted literal or identifier never closes."""


class EmptySqlError(SqlTokenizeError):
    """Empty or whitespace-only SQL where a statement is required."""


class DbNotFound(SqlScoreError):
    """(db_id, source) does not resolve to a database in the registry."""


class DatabaseConnectionError(SqlScoreError):
    """Infrastructure fault: the engine/connection is unusable.

    Distinct from SqlError outcomes, which are faults of the query itself.
    """


class ComparisonOnFailure(SqlScoreError):
    """results_equal called with a non-Ok execution outcome."""


class DegenerateTiming(SqlScoreError):
    """time_ratio called with a non-positive predicted latency."""


class GoldExecutionError(SqlScoreError):
    """The gold query itself is unusable (dataset defect)."""


class EmptyGroup(SqlScoreError):
    """Advantage computation over an empty candidate group."""


class DegenerateGap(SqlScoreError):
    """PGR denominator is zero: strong and weak accuracies coincide."""


class DegenerateTokens(SqlScoreError):
    """TEP denominator is zero: token consumption did not change."""
