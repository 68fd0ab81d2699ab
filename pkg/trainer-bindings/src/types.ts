/**
 * Wire-facing types. Field names mirror the scoring CLI's JSON output
 * exactly so results can be compared field-for-field against direct CLI use.
 */

/** One gold record a response is scored against. */
export interface GoldRecordInput {
  db_id: string;
  source?: string;
  /** "suppressed" | "fast" | "slow" (aliases "no_think" / "think" accepted). */
  mode?: string;
  gold_sql: string;
}

/** Scoring configuration forwarded to the CLI as flags. */
export interface BindingsConfig {
  /** Command used to invoke the scorer; defaults to ["sqlscore"]. */
  cliCommand?: string[];
  /** Skeleton-similarity pass threshold. */
  tau?: number;
  /** Similarity mixing weight. */
  alpha?: number;
  /** Warm-up runs per statement. */
  warmup?: number;
  /** Measured runs per statement. */
  runs?: number;
  /** Per-run execution timeout in seconds. */
  timeoutS?: number;
}

/** Reward breakdown for one response, as emitted by the scorer. */
export interface BoundRewardResult {
  sigma_f: number;
  sigma_e: number;
  sigma_s: number;
  sigma_t: number;
  total: number;
  stage: string;
}

/** Group-relative advantage and objective math for one candidate group. */
export interface GrpoMathResult {
  advantages: number[];
  objective?: number;
  clipped_fraction?: number;
  kl?: number;
}
