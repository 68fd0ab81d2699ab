import assert from "node:assert/strict";
import { before, describe, it } from "node:test";

import {
  DatasetError,
  UsageError,
  bindGrpoMath,
  bindScoreBatch,
  init,
} from "../src/index";
import { DB_ID, GOLD_SQL, SOURCE, buildFixture, fenced } from "./fixture";

const SCORING = { warmup: 0, runs: 1, timeoutS: 10 };

describe("init", () => {
  it("rejects a missing manifest", () => {
    assert.throws(() => init("/nonexistent/manifest.json"), UsageError);
  });

  it("scoring before init fails", async () => {
    // runs first: module state is still uninitialized here
    await assert.rejects(bindGrpoMath([1], [0], [0], [0]), UsageError);
  });
});

describe("bindScoreBatch", () => {
  before(() => {
    const { manifestPath } = buildFixture();
    init(manifestPath, SCORING);
  });

  it("scores a single perfect record", async () => {
    const [result] = await bindScoreBatch(
      [fenced(GOLD_SQL)],
      [{ db_id: DB_ID, source: SOURCE, mode: "suppressed", gold_sql: GOLD_SQL }],
    );
    assert.equal(result.stage, "ExecOk");
    assert.equal(result.sigma_f, 1.0);
    assert.equal(result.sigma_e, 2.0);
    assert.ok(result.total > 3.0 && result.total <= 4.0);
  });

  it("returns an empty list for an empty batch", async () => {
    assert.deepEqual(await bindScoreBatch([], []), []);
  });

  it("rejects mismatched lengths", async () => {
    await assert.rejects(
      bindScoreBatch(["one"], []),
      RangeError,
    );
  });

  it("maps format failures to -2 without touching the database", async () => {
    const [result] = await bindScoreBatch(
      ["no fence at all"],
      [{ db_id: DB_ID, source: SOURCE, mode: "slow", gold_sql: GOLD_SQL }],
    );
    assert.equal(result.stage, "FormatFail");
    assert.equal(result.total, -2.0);
  });

  it("maps unknown databases to DatasetError", async () => {
    await assert.rejects(
      bindScoreBatch(
        [fenced(GOLD_SQL)],
        [{ db_id: "ghost", source: SOURCE, gold_sql: GOLD_SQL }],
      ),
      DatasetError,
    );
  });
});

describe("bindGrpoMath", () => {
  before(() => {
    const { manifestPath } = buildFixture();
    init(manifestPath, SCORING);
  });

  it("computes mean-relative advantages", async () => {
    const { advantages } = await bindGrpoMath(
      [4, 0, -2],
      [-1, -1, -1],
      [-1, -1, -1],
      [-1, -1, -1],
    );
    const expected = [10 / 3, -2 / 3, -8 / 3];
    advantages.forEach((a, i) => assert.ok(Math.abs(a - expected[i]) < 1e-12));
  });

  it("constant rewards give zero advantages", async () => {
    const { advantages } = await bindGrpoMath(
      [1.5, 1.5, 1.5],
      [-1, -1, -1],
      [-1, -1, -1],
      [-1, -1, -1],
    );
    advantages.forEach((a) => assert.equal(a, 0));
  });

  it("unit ratios with beta zero give objective zero", async () => {
    const result = await bindGrpoMath(
      [2, -1, 0.5, 1],
      [-1.2, -0.8, -1.5, -1.0],
      [-1.2, -0.8, -1.5, -1.0],
      [-1.2, -0.8, -1.5, -1.0],
      0.2,
      0.0,
    );
    assert.ok(Math.abs(result.objective ?? NaN) < 1e-12);
    assert.ok(Math.abs(result.kl ?? NaN) < 1e-12);
  });

  it("rejects shape mismatches", async () => {
    await assert.rejects(bindGrpoMath([1, 2], [0], [0, 0], [0, 0]), RangeError);
  });
});
