"""Benchmark metrics and error classification.

EM here is "EM-lite": clause buckets from the simplified decomposition are
compared as sets, which is stricter about aliases than the official checker;
any replacement implementing the same (gold, pred) -> bool interface can be
plugged into report aggregation. EX and VES execute both statements under the
harness protocol. PGR and TEP are closed-form on supplied accuracies.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .analyzer import (
    SQL_KEYWORDS,
    decompose_clauses,
    extract_schema_elements,
)
from .errors import (
    DegenerateGap,
    DegenerateTokens,
    GoldExecutionError,
    SqlTokenizeError,
)
from .harness import (
    DatabaseRegistry,
    TimingConfig,
    execute,
    floored_latency,
    results_equal,
)


class ErrorClass(Enum):
    SUBQUERY = "Subquery"
    CLAUSE = "Clause"
    OPERATOR = "Operator"
    FUNCTION = "Function"
    CONDITION = "Condition"
    VALUE = "Value"
    TABLE = "Table"
    ATTRIBUTE = "Attribute"


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int
    output_tokens: int
    multiplier: float

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    @property
    def consumption(self) -> float:
        return self.input_tokens + self.multiplier * self.output_tokens


@dataclass(frozen=True)
class EvalRecord:
    id: str
    db_id: str
    source: str
    question: str
    gold_sql: str
    pred_sql: str
    difficulty: Optional[str] = None
    tokens: Optional[TokenUsage] = None

    def __post_init__(self):
        if not self.gold_sql:
            raise ValueError(f"record {self.id!r} has empty gold_sql")

    @classmethod
    def from_mapping(cls, doc: dict) -> "EvalRecord":
        tokens = None
        if doc.get("tokens"):
            t = doc["tokens"]
            tokens = TokenUsage(
                input_tokens=int(t["input_tokens"]),
                output_tokens=int(t["output_tokens"]),
                multiplier=float(t.get("multiplier", 1.0)),
            )
        return cls(
            id=str(doc.get("id", "")),
            db_id=doc["db_id"],
            source=doc.get("source", ""),
            question=doc.get("question", ""),
            gold_sql=doc["gold_sql"],
            pred_sql=doc.get("pred_sql", ""),
            difficulty=doc.get("difficulty"),
            tokens=tokens,
        )


# --- exact set match ---------------------------------------------------------


def exact_set_match(gold: str, pred: str) -> bool:
    """Clause-level set equality of two statements."""
    g = decompose_clauses(gold)
    p = decompose_clauses(pred)
    return (
        g.select_items == p.select_items
        and g.from_tables == p.from_tables
        and g.where_predicates == p.where_predicates
        and g.group_by_items == p.group_by_items
        and g.having_predicates == p.having_predicates
        and g.order_by_items == p.order_by_items
        and g.limit_value == p.limit_value
    )


# --- error classification -----------------------------------------------------


def classify_error(gold: str, pred: str) -> set[ErrorClass]:
    """Classes of divergence for a known-wrong prediction.

    Emits every applicable class; real mispredictions mix categories. A WHERE
    difference fully explained by operator/literal substitution is charged to
    Operator/Value rather than Condition.
    """
    g = decompose_clauses(gold)
    p = decompose_clauses(pred)
    classes: set[ErrorClass] = set()

    if g.subquery_count != p.subquery_count:
        classes.add(ErrorClass.SUBQUERY)

    presence_pairs = [
        (g.where_predicates, p.where_predicates),
        (g.group_by_items, p.group_by_items),
        (g.having_predicates, p.having_predicates),
        (g.order_by_items, p.order_by_items),
        (g.limit_value is not None, p.limit_value is not None),
    ]
    if any(bool(a) != bool(b) for a, b in presence_pairs):
        classes.add(ErrorClass.CLAUSE)

    if g.operators != p.operators:
        classes.add(ErrorClass.OPERATOR)
    if g.functions != p.functions:
        classes.add(ErrorClass.FUNCTION)
    if g.literals != p.literals:
        classes.add(ErrorClass.VALUE)
    if g.from_tables != p.from_tables:
        classes.add(ErrorClass.TABLE)

    if extract_schema_elements(gold).columns != extract_schema_elements(pred).columns:
        classes.add(ErrorClass.ATTRIBUTE)

    if g.where_predicates != p.where_predicates and g.where_shapes != p.where_shapes:
        classes.add(ErrorClass.CONDITION)

    return classes


# --- record evaluation ---------------------------------------------------------


@dataclass(frozen=True)
class RecordResult:
    record: EvalRecord
    em: bool
    ex: bool
    t_gold_s: Optional[float]
    t_pred_s: Optional[float]
    pred_status: str
    error_classes: frozenset[ErrorClass] = frozenset()


@dataclass
class MetricsReport:
    n: int
    em: float
    ex: float
    ves: float
    per_difficulty: dict = field(default_factory=dict)
    error_histogram: dict = field(default_factory=dict)
    bad_gold: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "em": self.em,
            "ex": self.ex,
            "ves": self.ves,
            "per_difficulty": self.per_difficulty,
            "error_histogram": dict(sorted(self.error_histogram.items())),
            "bad_gold": self.bad_gold,
        }


def evaluate_records(
    records: Sequence[EvalRecord],
    registry: DatabaseRegistry,
    cfg: TimingConfig = TimingConfig(),
    *,
    jobs: int = 1,
    comparison: str = "multiset",
    em_fn: Callable[[str, str], bool] = exact_set_match,
) -> tuple[list[RecordResult], list[tuple[EvalRecord, Exception]]]:
    """Score each record; defective golds come back separately, not scored."""

    def one(record: EvalRecord):
        handle = registry.resolve(record.db_id, record.source)
        gold_out = execute(handle, record.gold_sql, cfg, timed=True)
        if not gold_out.ok:
            raise GoldExecutionError(
                f"gold SQL for record {record.id!r} failed: {gold_out.error}"
            )
        pred_out = execute(handle, record.pred_sql, cfg, timed=True)
        ex = pred_out.ok and results_equal(pred_out, gold_out, mode=comparison)
        try:
            em = bool(em_fn(record.gold_sql, record.pred_sql))
        except SqlTokenizeError:
            em = False
        classes: frozenset[ErrorClass] = frozenset()
        if not ex:
            try:
                classes = frozenset(classify_error(record.gold_sql, record.pred_sql))
            except SqlTokenizeError:
                classes = frozenset()
        return RecordResult(
            record=record,
            em=em,
            ex=ex,
            t_gold_s=gold_out.mean_time_s,
            t_pred_s=pred_out.mean_time_s if pred_out.ok else None,
            pred_status=pred_out.status.value,
            error_classes=classes,
        )

    results: list[RecordResult] = []
    defects: list[tuple[EvalRecord, Exception]] = []

    def guarded(record: EvalRecord):
        try:
            return record, one(record), None
        except Exception as exc:
            return record, None, exc

    if jobs <= 1:
        produced = [guarded(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            produced = list(pool.map(guarded, records))

    for record, result, exc in produced:
        if exc is not None:
            defects.append((record, exc))
        else:
            results.append(result)
    return results, defects


def execution_accuracy(
    records: Sequence[EvalRecord],
    registry: DatabaseRegistry,
    cfg: TimingConfig = TimingConfig(),
) -> float:
    """Fraction of records whose predicted results equal gold results."""
    results, defects = evaluate_records(records, registry, cfg)
    if defects:
        raise defects[0][1]
    if not results:
        return 0.0
    return sum(r.ex for r in results) / len(results)


def _ves_factor(result: RecordResult) -> float:
    if not result.ex or result.t_pred_s is None or result.t_gold_s is None:
        return 0.0
    ratio = floored_latency(result.t_gold_s) / floored_latency(result.t_pred_s)
    return math.sqrt(ratio)


def valid_efficiency_score(
    records: Sequence[EvalRecord],
    registry: DatabaseRegistry,
    cfg: TimingConfig = TimingConfig(),
) -> float:
    """Mean of 1[results equal] * sqrt(T_gold / T_pred); the ratio is not
    clamped, so predictions faster than gold push the score above 1."""
    results, defects = evaluate_records(records, registry, cfg)
    if defects:
        raise defects[0][1]
    if not results:
        return 0.0
    return sum(_ves_factor(r) for r in results) / len(results)


def aggregate(results: Sequence[RecordResult],
              bad_gold: Sequence[tuple[EvalRecord, Exception]] = ()) -> MetricsReport:
    """Fold per-record results into a report; pure and order-independent."""
    n = len(results)
    if n == 0:
        return MetricsReport(n=0, em=0.0, ex=0.0, ves=0.0,
                             bad_gold=[r.id for r, _ in bad_gold])
    em = sum(r.em for r in results) / n
    ex = sum(r.ex for r in results) / n
    ves = sum(_ves_factor(r) for r in results) / n

    per_difficulty: dict[str, dict] = {}
    for tier in sorted({r.record.difficulty or "unknown" for r in results}):
        subset = [r for r in results if (r.record.difficulty or "unknown") == tier]
        per_difficulty[tier] = {
            "n": len(subset),
            "em": sum(r.em for r in subset) / len(subset),
            "ex": sum(r.ex for r in subset) / len(subset),
            "ves": sum(_ves_factor(r) for r in subset) / len(subset),
        }

    histogram: Counter = Counter()
    for r in results:
        for cls in r.error_classes:
            histogram[cls.value] += 1

    return MetricsReport(
        n=n, em=em, ex=ex, ves=ves,
        per_difficulty=per_difficulty,
        error_histogram=dict(histogram),
        bad_gold=[r.id for r, _ in bad_gold],
    )


def write_per_record_csv(path, results: Sequence[RecordResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "em", "ex_match", "time_ratio", "error_classes"])
        for r in results:
            ratio = ""
            if r.t_pred_s is not None and r.t_gold_s is not None:
                ratio = floored_latency(r.t_gold_s) / floored_latency(r.t_pred_s)
            writer.writerow([
                r.record.id,
                int(r.em),
                int(r.ex),
                ratio,
                "|".join(sorted(c.value for c in r.error_classes)),
            ])


# --- router / token-economy metrics -------------------------------------------


def performance_gap_recovered(ex_router: float, ex_weak: float, ex_strong: float) -> float:
    """Fraction of the weak-to-strong gap the router recovers."""
    gap = ex_strong - ex_weak
    if gap == 0:
        raise DegenerateGap("strong and weak accuracies are equal")
    return (ex_router - ex_weak) / gap


def token_elasticity(
    ex_method: float,
    ex_base: float,
    tokens_method: TokenUsage,
    tokens_base: TokenUsage,
    n: int,
) -> float:
    """Relative accuracy gain per relative change in mean token consumption."""
    if n <= 0:
        raise ValueError("n must be positive")
    if ex_base == 0:
        raise ValueError("baseline accuracy must be non-zero")
    mean_base = tokens_base.consumption / n
    mean_method = tokens_method.consumption / n
    if mean_base <= 0:
        raise DegenerateTokens("baseline mean token consumption must be positive")
    delta_tokens = (mean_method - mean_base) / mean_base
    if delta_tokens == 0:
        raise DegenerateTokens("token consumption did not change")
    delta_ex = (ex_method - ex_base) / ex_base
    return delta_ex / delta_tokens


# --- self-distillation filter ---------------------------------------------------

_WS_RE = re.compile(r"\s+")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _normalize_sql_for_match(sql: str) -> str:
    """Collapse whitespace and lowercase keywords; identifier and literal
    case is preserved ("exactly matching" is otherwise literal)."""

    def lower_keywords(m: re.Match) -> str:
        word = m.group(0)
        return word.lower() if word.lower() in SQL_KEYWORDS else word

    collapsed = _WS_RE.sub(" ", sql.strip())
    return _WORD_RE.sub(lower_keywords, collapsed)


def sft_filter(candidates: Sequence[dict], k: int = 3) -> list[dict]:
    """Keep reasoning records from runs of >= k consecutive exact matches.

    Candidates carry question, reasoning, candidate_sql, gold_sql and
    attempt_index; attempts are grouped per question and ordered by
    attempt_index. Output is a subset of the input and refiltering it is a
    no-op.
    """
    if k < 1:
        raise ValueError("k must be >= 1")

    by_question: dict[str, list[dict]] = {}
    order: list[str] = []
    for cand in candidates:
        q = cand["question"]
        if q not in by_question:
            by_question[q] = []
            order.append(q)
        by_question[q].append(cand)

    retained: list[dict] = []
    for q in order:
        attempts = sorted(by_question[q], key=lambda c: c.get("attempt_index", 0))
        run: list[dict] = []
        for cand in attempts:
            matches = (
                _normalize_sql_for_match(cand.get("candidate_sql", ""))
                == _normalize_sql_for_match(cand.get("gold_sql", ""))
            )
            if matches:
                run.append(cand)
            else:
                if len(run) >= k:
                    retained.extend(run)
                run = []
        if len(run) >= k:
            retained.extend(run)
    return retained
