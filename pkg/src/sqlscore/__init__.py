"""sqlscore: reward scoring and evaluation for Text-to-SQL RL fine-tuning.

Library surface re-exported here; the same functionality is reachable through
the ``sqlscore`` CLI (eval | reward | serve | sft-filter | sim) and the HTTP
reward service.
"""

from .analyzer import (
    ClauseDecomposition,
    SchemaElements,
    SqlSkeleton,
    SqlToken,
    TokenKind,
    decompose_clauses,
    extract_schema_elements,
    extract_skeleton,
    tokenize,
)
from .errors import (
    ComparisonOnFailure,
    DatabaseConnectionError,
    DbNotFound,
    DegenerateGap,
    DegenerateTiming,
    DegenerateTokens,
    EmptyGroup,
    EmptySqlError,
    GoldExecutionError,
    SqlScoreError,
    SqlTokenizeError,
    UnterminatedLiteral,
)
from .grpo import (
    GroupSample,
    GrpoConfig,
    GrpoObjective,
    ToyPolicy,
    advantages,
    grpo_objective,
    simulate_training,
)
from .harness import (
    DatabaseRegistry,
    DbHandle,
    EngineKind,
    ExecStatus,
    ExecutionOutcome,
    TimingConfig,
    clear_execution_log,
    execute,
    execution_log,
    results_equal,
    time_ratio,
    timed_spans_overlap,
)
from .metrics import (
    ErrorClass,
    EvalRecord,
    MetricsReport,
    TokenUsage,
    classify_error,
    exact_set_match,
    execution_accuracy,
    performance_gap_recovered,
    sft_filter,
    token_elasticity,
    valid_efficiency_score,
)
from .protocol import (
    FormatVerdict,
    ParsedResponse,
    ThinkingMode,
    Violation,
    parse_response,
    render_response,
    validate_format,
)
from .reward import (
    GoldRecord,
    RewardBreakdown,
    RewardScorer,
    RewardStage,
    RewardWeights,
    score_batch,
    score_response,
)
from .similarity import (
    GESTALT_BACKEND,
    SimilarityScore,
    jaccard,
    match_ratio,
    skeleton_similarity,
)

__version__ = "0.1.0"
