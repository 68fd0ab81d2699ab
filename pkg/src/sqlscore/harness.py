"""Database execution harness: registry, timing protocol, result comparison.

Latency is measured end-to-end (statement execution plus full fetch) on the
target engine, after a short warm-up, over several repetitions whose
arithmetic mean is reported. Timed runs take a process-wide lock so no two
measurements overlap — the controlled single-user condition — and every run
is appended to a global execution log that tests can audit.
"""

from __future__ import annotations

import math
import os
import sqlite3
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional
import json

from .errors import (
    ComparisonOnFailure,
    DatabaseConnectionError,
    DbNotFound,
    DegenerateTiming,
)

DEFAULT_TIMEOUT_S = 30.0  # per-run execution bound
MIN_LATENCY_S = 1e-6  # floor applied before latency ratios


class EngineKind(Enum):
    SQLITE = "sqlite"
    MYSQL = "mysql"


class ExecStatus(Enum):
    OK = "ok"
    SQL_ERROR = "sql_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class DbHandle:
    db_id: str
    source: str
    engine: EngineKind
    location: str


@dataclass(frozen=True)
class TimingConfig:
    warmup_runs: int = 1
    measured_runs: int = 5
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if self.warmup_runs < 0:
            raise ValueError("warmup_runs must be >= 0")
        if self.measured_runs < 1:
            raise ValueError("measured_runs must be >= 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecStatus
    rows: tuple = ()
    run_times_s: tuple = ()
    mean_time_s: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status is ExecStatus.OK


class DatabaseRegistry:
    """Maps (db_id, source) to a database handle.

    Backed by a JSON manifest: {"databases": [{"db_id", "source", "engine",
    "location"}, ...]}. Relative locations resolve against the manifest's
    directory.
    """

    def __init__(self, handles: Iterable[DbHandle]):
        self._by_key: dict[tuple[str, str], DbHandle] = {}
        for h in handles:
            self._by_key[(h.db_id, h.source)] = h

    @classmethod
    def load(cls, manifest_path: str | Path) -> "DatabaseRegistry":
        path = Path(manifest_path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise DatabaseConnectionError(f"manifest not found: {path}")
        except json.JSONDecodeError as exc:
            raise DatabaseConnectionError(f"manifest is not valid JSON: {exc}")
        handles = []
        for entry in doc.get("databases", []):
            engine = EngineKind(entry.get("engine", "sqlite"))
            location = entry["location"]
            if location.startswith("env:"):
                # connection string indirected through the environment
                var = location[4:]
                location = os.environ.get(var, "")
                if not location:
                    raise DatabaseConnectionError(
                        f"manifest location references unset variable {var!r}")
            elif engine is EngineKind.SQLITE and not os.path.isabs(location):
                location = str((path.parent / location).resolve())
            handles.append(DbHandle(
                db_id=entry["db_id"],
                source=entry.get("source", ""),
                engine=engine,
                location=location,
            ))
        return cls(handles)

    def resolve(self, db_id: str, source: str) -> DbHandle:
        try:
            return self._by_key[(db_id, source)]
        except KeyError:
            raise DbNotFound(f"no database for db_id={db_id!r} source={source!r}")

    @property
    def handles(self) -> list[DbHandle]:
        return list(self._by_key.values())

    def engines(self) -> set[EngineKind]:
        return {h.engine for h in self._by_key.values()}


# --- global execution log and single-user timing lock ----------------------

@dataclass(frozen=True)
class ExecutionSpan:
    db_id: str
    sql: str
    start: float
    end: float
    timed: bool


_TIMING_LOCK = threading.Lock()
_LOG_LOCK = threading.Lock()
_EXEC_LOG: list[ExecutionSpan] = []


def clear_execution_log() -> None:
    with _LOG_LOCK:
        _EXEC_LOG.clear()


def execution_log() -> list[ExecutionSpan]:
    with _LOG_LOCK:
        return list(_EXEC_LOG)


def _log_span(span: ExecutionSpan) -> None:
    with _LOG_LOCK:
        _EXEC_LOG.append(span)


def timed_spans_overlap(spans: Iterable[ExecutionSpan]) -> bool:
    """True if any two timed spans overlap in wall-clock time."""
    timed = sorted((s for s in spans if s.timed), key=lambda s: s.start)
    for prev, cur in zip(timed, timed[1:]):
        if cur.start < prev.end:
            return True
    return False


# --- execution --------------------------------------------------------------

class _TimeoutFlag:
    __slots__ = ("deadline", "fired")

    def __init__(self):
        self.deadline = math.inf
        self.fired = False

    def check(self) -> int:
        if time.perf_counter() > self.deadline:
            self.fired = True
            return 1  # abort the statement
        return 0


def _connect_sqlite(location: str) -> sqlite3.Connection:
    if location != ":memory:" and not os.path.exists(location):
        raise DatabaseConnectionError(f"sqlite database file missing: {location}")
    try:
        if location == ":memory:":
            return sqlite3.connect(":memory:")
        return sqlite3.connect(f"file:{location}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise DatabaseConnectionError(f"cannot open sqlite database {location}: {exc}")


def _connect_mysql(location: str, timeout_s: float):
    try:
        import pymysql  # optional engine, imported lazily
    except ImportError:
        raise DatabaseConnectionError(
            "mysql engine requested but no MySQL driver (pymysql) is installed"
        )
    from urllib.parse import urlparse

    url = urlparse(location)
    try:
        return pymysql.connect(
            host=url.hostname or "localhost",
            port=url.port or 3306,
            user=url.username or "",
            password=url.password or "",
            database=url.path.lstrip("/"),
            read_timeout=timeout_s,
            write_timeout=timeout_s,
        )
    except Exception as exc:
        raise DatabaseConnectionError(f"cannot connect to mysql at {location}: {exc}")


def execute(
    db: DbHandle,
    sql: str,
    cfg: TimingConfig = TimingConfig(),
    *,
    timed: bool = True,
) -> ExecutionOutcome:
    """Run one statement under the timing protocol.

    warmup_runs unmeasured executions, then measured_runs timed ones of the
    identical statement; rows come from the final run. A single run exceeding
    timeout_s aborts the whole call with status Timeout. Engine faults yield
    SqlError; infrastructure faults raise DatabaseConnectionError instead.
    Timed calls serialize on a process-wide lock.
    """
    if not sql or not sql.strip():
        return ExecutionOutcome(status=ExecStatus.SQL_ERROR, error="empty SQL")
    if db.engine is EngineKind.MYSQL:
        return _execute_generic(db, sql, cfg, timed, _MysqlRunner(db, cfg))
    return _execute_generic(db, sql, cfg, timed, _SqliteRunner(db, cfg))


class _SqliteRunner:
    def __init__(self, db: DbHandle, cfg: TimingConfig):
        self.conn = _connect_sqlite(db.location)
        self.flag = _TimeoutFlag()
        self.timeout_s = cfg.timeout_s
        # Progress handler fires every few thousand VM ops; cheap enough and
        # fine-grained enough for a 30 s bound.
        self.conn.set_progress_handler(self.flag.check, 4000)

    def run_once(self, sql: str):
        self.flag.fired = False
        self.flag.deadline = time.perf_counter() + self.timeout_s
        cur = self.conn.cursor()
        try:
            cur.execute(sql)
            rows = cur.fetchall()
        finally:
            cur.close()
        return rows

    def classify(self, exc: Exception) -> ExecStatus:
        if self.flag.fired:
            return ExecStatus.TIMEOUT
        if isinstance(exc, sqlite3.Error):
            return ExecStatus.SQL_ERROR
        raise exc

    def close(self):
        self.conn.close()


class _MysqlRunner:
    def __init__(self, db: DbHandle, cfg: TimingConfig):
        self.conn = _connect_mysql(db.location, cfg.timeout_s)
        self.timeout_s = cfg.timeout_s

    def run_once(self, sql: str):
        cur = self.conn.cursor()
        try:
            cur.execute(sql)
            rows = cur.fetchall()
        finally:
            cur.close()
        return list(rows)

    def classify(self, exc: Exception) -> ExecStatus:
        import pymysql

        if isinstance(exc, pymysql.err.OperationalError) and "timeout" in str(exc).lower():
            return ExecStatus.TIMEOUT
        if isinstance(exc, pymysql.err.Error):
            return ExecStatus.SQL_ERROR
        raise exc

    def close(self):
        self.conn.close()


def _execute_generic(db, sql, cfg, timed, runner) -> ExecutionOutcome:
    lock = _TIMING_LOCK if timed else None
    if lock:
        lock.acquire()
    try:
        try:
            for _ in range(cfg.warmup_runs):
                start = time.perf_counter()
                runner.run_once(sql)
                _log_span(ExecutionSpan(db.db_id, sql, start, time.perf_counter(), False))

            run_times: list[float] = []
            rows = []
            for _ in range(cfg.measured_runs):
                start = time.perf_counter()
                rows = runner.run_once(sql)
                end = time.perf_counter()
                run_times.append(end - start)
                _log_span(ExecutionSpan(db.db_id, sql, start, end, timed))
            return ExecutionOutcome(
                status=ExecStatus.OK,
                rows=tuple(tuple(r) for r in rows),
                run_times_s=tuple(run_times),
                mean_time_s=sum(run_times) / len(run_times),
            )
        except Exception as exc:  # engine classified
            status = runner.classify(exc)
            return ExecutionOutcome(status=status, error=str(exc) or type(exc).__name__)
        finally:
            runner.close()
    finally:
        if lock:
            lock.release()


# --- result comparison and latency ratio ------------------------------------

_REL_TOL = 1e-6


def _cells_equal(a, b, rel_tol: float) -> bool:
    if a is None or b is None:
        return a is None and b is None
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    if a_num and b_num:
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return a == b or math.isclose(float(a), float(b), rel_tol=rel_tol, abs_tol=0.0)
    return type(a) is type(b) and a == b


def _row_key(row: tuple):
    key = []
    for cell in row:
        if cell is None:
            key.append((0, ""))
        elif isinstance(cell, bool):
            key.append((1, str(cell)))
        elif isinstance(cell, (int, float)):
            f = float(cell)
            key.append((2, "nan") if math.isnan(f) else (3, f))
        elif isinstance(cell, bytes):
            key.append((4, cell.hex()))
        else:
            key.append((5, str(cell)))
    return key


def results_equal(
    a: ExecutionOutcome,
    b: ExecutionOutcome,
    *,
    mode: str = "multiset",
    rel_tol: float = _REL_TOL,
) -> bool:
    """Order-insensitive row comparison of two Ok outcomes.

    Cell order inside a row is significant; numeric cells unify int/real and
    compare within a relative tolerance. mode selects multiset (default,
    stricter) or set semantics.
    """
    if not a.ok or not b.ok:
        raise ComparisonOnFailure(
            f"cannot compare outcomes with status {a.status.value}/{b.status.value}"
        )
    rows_a, rows_b = list(a.rows), list(b.rows)
    if mode == "set":
        rows_a = list({r: None for r in rows_a})
        rows_b = list({r: None for r in rows_b})
    elif mode != "multiset":
        raise ValueError(f"unknown comparison mode: {mode}")
    if len(rows_a) != len(rows_b):
        return False
    rows_a.sort(key=_row_key)
    rows_b.sort(key=_row_key)
    for ra, rb in zip(rows_a, rows_b):
        if len(ra) != len(rb):
            return False
        if not all(_cells_equal(ca, cb, rel_tol) for ca, cb in zip(ra, rb)):
            return False
    return True


def time_ratio(t_gold: float, t_pred: float) -> float:
    """min(1, t_gold / t_pred): the clamped efficiency factor."""
    if t_pred <= 0:
        raise DegenerateTiming(f"t_pred must be positive, got {t_pred}")
    if t_gold < 0:
        raise DegenerateTiming(f"t_gold must be >= 0, got {t_gold}")
    return min(1.0, t_gold / t_pred)


def floored_latency(seconds: float) -> float:
    """Clock-resolution guard: latencies floor at one microsecond."""
    return max(seconds, MIN_LATENCY_S)
