"""Hierarchical four-stage reward: format -> skeleton gate -> execution ->
schema linking / efficiency.

Stage flow for one candidate against one gold record:

1. thinking-pattern and fence validation; a violation (or SQL that fails to
   tokenize) scores format_fail and stops — the database is never touched;
2. weighted-skeleton similarity against the gold SQL; below the threshold the
   candidate scores format_fail and stops;
3. both statements execute under the timing protocol; a prediction that
   finishes within the bound with results equal to gold earns exec_pass plus
   the clamped latency ratio min(1, t_gold / t_pred);
4. otherwise exec_fail, plus schema_pass when the predicted statement's
   tables and columns are each a subset of the gold statement's.

The total is always the plain sum of the four component scores.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .analyzer import extract_schema_elements, extract_skeleton
from .errors import GoldExecutionError, SqlTokenizeError
from .harness import (
    DatabaseRegistry,
    DbHandle,
    ExecutionOutcome,
    TimingConfig,
    execute,
    floored_latency,
    results_equal,
    time_ratio,
)
from .protocol import ThinkingMode, parse_response, validate_format
from .similarity import DEFAULT_ALPHA, DEFAULT_TAU, SimilarityScore, skeleton_similarity


@dataclass(frozen=True)
class RewardWeights:
    format_pass: float = 1.0
    format_fail: float = -2.0
    exec_pass: float = 2.0
    exec_fail: float = -2.5
    schema_pass: float = 1.5


class RewardStage(Enum):
    FORMAT_FAIL = "FormatFail"
    SKELETON_FAIL = "SkeletonFail"
    EXEC_OK = "ExecOk"
    EXEC_FAIL_SCHEMA_OK = "ExecFailSchemaOk"
    EXEC_FAIL_SCHEMA_BAD = "ExecFailSchemaBad"


@dataclass(frozen=True)
class GoldRecord:
    db_id: str
    source: str
    mode: ThinkingMode
    gold_sql: str

    @classmethod
    def from_mapping(cls, doc: dict) -> "GoldRecord":
        mode = doc.get("mode", "suppressed")
        if not isinstance(mode, ThinkingMode):
            mode = ThinkingMode.from_string(str(mode))
        return cls(
            db_id=doc["db_id"],
            source=doc.get("source", ""),
            mode=mode,
            gold_sql=doc["gold_sql"],
        )


@dataclass(frozen=True)
class RewardBreakdown:
    sigma_f: float
    sigma_e: float
    sigma_s: float
    sigma_t: float
    total: float
    stage_reached: RewardStage
    skeleton: Optional[SimilarityScore] = None
    outcomes: Optional[tuple[ExecutionOutcome, ExecutionOutcome]] = None  # (pred, gold)

    def to_json_dict(self) -> dict:
        doc = {
            "sigma_f": self.sigma_f,
            "sigma_e": self.sigma_e,
            "sigma_s": self.sigma_s,
            "sigma_t": self.sigma_t,
            "total": self.total,
            "stage": self.stage_reached.value,
        }
        if self.skeleton is not None:
            doc["skeleton"] = {
                "match_ratio": self.skeleton.match_ratio,
                "jaccard": self.skeleton.jaccard,
                "combined": self.skeleton.combined,
                "alpha": self.skeleton.alpha,
                "passed": self.skeleton.passed,
            }
        if self.outcomes is not None:
            pred, gold = self.outcomes
            doc["timing"] = {
                "pred_status": pred.status.value,
                "pred_mean_s": pred.mean_time_s,
                "gold_mean_s": gold.mean_time_s,
            }
        return doc


def _gated(weights: RewardWeights, stage: RewardStage,
           skeleton: Optional[SimilarityScore] = None) -> RewardBreakdown:
    sigma_f = weights.format_fail
    return RewardBreakdown(
        sigma_f=sigma_f, sigma_e=0.0, sigma_s=0.0, sigma_t=0.0,
        total=sigma_f, stage_reached=stage, skeleton=skeleton,
    )


class RewardScorer:
    """Reusable scorer bound to a registry and configuration.

    Gold skeletons, schema elements and execution outcomes are memoized per
    (db_id, source, gold_sql) so scoring a GRPO group of G candidates times
    the gold query once. Thread-safe; timed runs serialize in the harness.
    """

    def __init__(
        self,
        registry: DatabaseRegistry,
        *,
        tau: float = DEFAULT_TAU,
        alpha: float = DEFAULT_ALPHA,
        weights: RewardWeights = RewardWeights(),
        timing: TimingConfig = TimingConfig(),
        comparison: str = "multiset",
        execute_fn: Callable[..., ExecutionOutcome] = execute,
    ):
        self.registry = registry
        self.tau = tau
        self.alpha = alpha
        self.weights = weights
        self.timing = timing
        self.comparison = comparison
        self._execute = execute_fn
        self._gold_cache: dict[tuple, tuple] = {}
        self._cache_lock = threading.Lock()

    # -- gold memoization ----------------------------------------------------
    # Static analysis and execution are cached separately: skeleton-gated
    # candidates need the gold skeleton but must never trigger database work.

    def _gold_static(self, record: GoldRecord):
        key = ("static", record.db_id, record.source, record.gold_sql)
        with self._cache_lock:
            cached = self._gold_cache.get(key)
        if cached is not None:
            return cached
        try:
            skeleton = extract_skeleton(record.gold_sql, weighted=True)
            schema = extract_schema_elements(record.gold_sql)
        except SqlTokenizeError as exc:
            raise GoldExecutionError(
                f"gold SQL for {record.db_id!r} does not tokenize: {exc}"
            ) from exc
        handle = self.registry.resolve(record.db_id, record.source)
        state = (skeleton, schema, handle)
        with self._cache_lock:
            self._gold_cache[key] = state
        return state

    def _gold_outcome(self, record: GoldRecord, handle: DbHandle) -> ExecutionOutcome:
        key = ("exec", record.db_id, record.source, record.gold_sql, self.timing)
        with self._cache_lock:
            cached = self._gold_cache.get(key)
        if cached is not None:
            return cached
        outcome = self._execute(handle, record.gold_sql, self.timing, timed=True)
        if not outcome.ok:
            raise GoldExecutionError(
                f"gold SQL for {record.db_id!r} failed: {outcome.error}"
            )
        with self._cache_lock:
            self._gold_cache[key] = outcome
        return outcome

    # -- scoring ------------------------------------------------------------

    def score_response(self, raw: str, gold: GoldRecord) -> RewardBreakdown:
        w = self.weights
        resp = parse_response(raw, gold.db_id, gold.source, gold.mode)
        verdict = validate_format(resp)
        if not verdict.valid:
            return _gated(w, RewardStage.FORMAT_FAIL)

        try:
            pred_skeleton = extract_skeleton(resp.sql, weighted=True)
            pred_schema = extract_schema_elements(resp.sql)
        except SqlTokenizeError:
            # Unlexable SQL is a format-validity failure per stage one.
            return _gated(w, RewardStage.FORMAT_FAIL)

        gold_skeleton, gold_schema, handle = self._gold_static(gold)

        sim = skeleton_similarity(pred_skeleton, gold_skeleton,
                                  alpha=self.alpha, tau=self.tau)
        if not sim.passed:
            return _gated(w, RewardStage.SKELETON_FAIL, skeleton=sim)
        sigma_f = w.format_pass

        gold_outcome = self._gold_outcome(gold, handle)
        pred_outcome = self._execute(handle, resp.sql, self.timing, timed=True)
        if pred_outcome.ok and results_equal(pred_outcome, gold_outcome,
                                             mode=self.comparison):
            sigma_t = time_ratio(
                floored_latency(gold_outcome.mean_time_s),
                floored_latency(pred_outcome.mean_time_s),
            )
            return RewardBreakdown(
                sigma_f=sigma_f, sigma_e=w.exec_pass, sigma_s=0.0, sigma_t=sigma_t,
                total=sigma_f + w.exec_pass + sigma_t,
                stage_reached=RewardStage.EXEC_OK,
                skeleton=sim, outcomes=(pred_outcome, gold_outcome),
            )

        subset = (pred_schema.tables <= gold_schema.tables
                  and pred_schema.columns <= gold_schema.columns)
        sigma_s = w.schema_pass if subset else 0.0
        stage = (RewardStage.EXEC_FAIL_SCHEMA_OK if subset
                 else RewardStage.EXEC_FAIL_SCHEMA_BAD)
        return RewardBreakdown(
            sigma_f=sigma_f, sigma_e=w.exec_fail, sigma_s=sigma_s, sigma_t=0.0,
            total=sigma_f + w.exec_fail + sigma_s,
            stage_reached=stage, skeleton=sim,
            outcomes=(pred_outcome, gold_outcome),
        )

    def score_batch(
        self,
        responses: Sequence[str],
        golds: Sequence[GoldRecord],
        *,
        jobs: int = 1,
        errors: Optional[list] = None,
    ) -> list[Optional[RewardBreakdown]]:
        """Element-wise score_response.

        A record whose scoring raises contributes None to the result and an
        (index, exception) entry to ``errors``; one bad record never aborts
        the batch.
        """
        if len(responses) != len(golds):
            raise ValueError(
                f"responses and golds differ in length: {len(responses)} != {len(golds)}"
            )

        def one(idx: int) -> Optional[RewardBreakdown]:
            try:
                return self.score_response(responses[idx], golds[idx])
            except Exception as exc:
                if errors is not None:
                    errors.append((idx, exc))
                return None

        if jobs <= 1 or len(responses) <= 1:
            return [one(i) for i in range(len(responses))]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, range(len(responses))))


def score_response(
    raw: str,
    gold: GoldRecord,
    registry: DatabaseRegistry,
    tau: float = DEFAULT_TAU,
    weights: RewardWeights = RewardWeights(),
    cfg: TimingConfig = TimingConfig(),
    *,
    alpha: float = DEFAULT_ALPHA,
) -> RewardBreakdown:
    """One-shot convenience wrapper around RewardScorer."""
    scorer = RewardScorer(registry, tau=tau, alpha=alpha, weights=weights, timing=cfg)
    return scorer.score_response(raw, gold)


def score_batch(
    responses: Sequence[str],
    golds: Sequence[GoldRecord],
    registry: DatabaseRegistry,
    tau: float = DEFAULT_TAU,
    weights: RewardWeights = RewardWeights(),
    cfg: TimingConfig = TimingConfig(),
    *,
    alpha: float = DEFAULT_ALPHA,
    jobs: int = 1,
    errors: Optional[list] = None,
) -> list[Optional[RewardBreakdown]]:
    scorer = RewardScorer(registry, tau=tau, alpha=alpha, weights=weights, timing=cfg)
    return scorer.score_batch(responses, golds, jobs=jobs, errors=errors)
