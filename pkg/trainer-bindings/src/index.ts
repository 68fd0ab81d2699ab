/**
 * Bindings for driving the SQL reward scorer from an external RL training
 * loop. All scoring happens in the scorer process; nothing is reimplemented
 * host-side, so results are exactly what the CLI produces.
 *
 * Batch-first by design: one `bindScoreBatch` call scores a whole candidate
 * group through a single scorer invocation. Per-item calls pay the full
 * process-spawn cost and are discouraged.
 *
 * ```typescript
 * init("/data/manifest.json", { runs: 3, warmup: 1 });
 * const results = await bindScoreBatch(responses, golds);
 * const { advantages } = await bindGrpoMath(results.map(r => r.total),
 *                                           logpNew, logpOld, logpRef);
 * ```
 */

import { existsSync } from "node:fs";

import { parseJsonLines, runCli } from "./cli";
import { UsageError } from "./errors";
import type {
  BindingsConfig,
  BoundRewardResult,
  GoldRecordInput,
  GrpoMathResult,
} from "./types";

export * from "./errors";
export * from "./types";

interface State {
  manifestPath: string;
  config: BindingsConfig;
}

let state: State | null = null;

const DEFAULT_COMMAND = ["sqlscore"];

/** Point the bindings at a database manifest; must precede any scoring. */
export function init(manifestPath: string, config: BindingsConfig = {}): void {
  if (!existsSync(manifestPath)) {
    throw new UsageError(`manifest not found: ${manifestPath}`);
  }
  state = { manifestPath, config };
}

function requireState(): State {
  if (!state) {
    throw new UsageError("bindings not initialized; call init(manifestPath) first");
  }
  return state;
}

function scoringFlags(s: State): string[] {
  const flags = ["--db-manifest", s.manifestPath];
  const c = s.config;
  if (c.tau !== undefined) flags.push("--tau", String(c.tau));
  if (c.alpha !== undefined) flags.push("--alpha", String(c.alpha));
  if (c.warmup !== undefined) flags.push("--warmup", String(c.warmup));
  if (c.runs !== undefined) flags.push("--runs", String(c.runs));
  if (c.timeoutS !== undefined) flags.push("--timeout", String(c.timeoutS));
  return flags;
}

/**
 * Score a batch of responses against their gold records.
 *
 * Results arrive in input order, one per response. Any record-level fault
 * (unknown db_id, failing gold SQL) rejects with the matching error kind.
 */
export async function bindScoreBatch(
  responses: string[],
  golds: GoldRecordInput[],
): Promise<BoundRewardResult[]> {
  const s = requireState();
  if (responses.length !== golds.length) {
    throw new RangeError(
      `responses and golds differ in length: ${responses.length} != ${golds.length}`,
    );
  }
  if (responses.length === 0) {
    return [];
  }
  const lines = responses
    .map((response, i) =>
      JSON.stringify({
        response,
        db_id: golds[i].db_id,
        source: golds[i].source ?? "",
        mode: golds[i].mode ?? "suppressed",
        gold_sql: golds[i].gold_sql,
      }),
    )
    .join("\n");
  const command = s.config.cliCommand ?? DEFAULT_COMMAND;
  const stdout = await runCli(
    command,
    ["reward", ...scoringFlags(s), "--batch", "-"],
    lines + "\n",
  );
  const results = parseJsonLines<BoundRewardResult>(stdout);
  if (results.length !== responses.length) {
    throw new RangeError(
      `scorer returned ${results.length} results for ${responses.length} responses`,
    );
  }
  return results;
}

/**
 * Group-relative advantages plus the clipped-surrogate objective and KL
 * estimate for one candidate group. Arrays must share one length.
 */
export async function bindGrpoMath(
  rewards: number[],
  logpNew: number[],
  logpOld: number[],
  logpRef: number[],
  epsilon = 0.2,
  beta = 0.0,
): Promise<GrpoMathResult> {
  const s = requireState();
  const n = rewards.length;
  if (logpNew.length !== n || logpOld.length !== n || logpRef.length !== n) {
    throw new RangeError(
      `array length mismatch: rewards=${n} logp_new=${logpNew.length} ` +
        `logp_old=${logpOld.length} logp_ref=${logpRef.length}`,
    );
  }
  if (n === 0) {
    throw new RangeError("cannot compute group math over an empty group");
  }
  const body = JSON.stringify({
    rewards,
    logp_new: logpNew,
    logp_old: logpOld,
    logp_ref: logpRef,
    epsilon,
    beta,
  });
  const command = s.config.cliCommand ?? DEFAULT_COMMAND;
  const stdout = await runCli(command, ["sim", "--math", "-"], body);
  return JSON.parse(stdout) as GrpoMathResult;
}
