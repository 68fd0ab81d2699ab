import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const DB_ID = "shop";
export const SOURCE = "bindings";
export const GOLD_SQL = "SELECT id, name FROM customers WHERE id = 1";

const BUILD_DB = `
import sqlite3, sys
con = sqlite3.connect(sys.argv[1])
con.executescript("""
CREATE TABLE customers(id INTEGER, name TEXT, city TEXT);
CREATE TABLE orders(id INTEGER, customer_id INTEGER, total REAL);
""")
con.executemany("INSERT INTO customers VALUES (?, ?, ?)",
                [(i, f"name{i}", ("Rome", "Paris", "Oslo")[i % 3]) for i in range(1, 1201)])
con.executemany("INSERT INTO orders VALUES (?, ?, ?)",
                [(i, (i % 1200) + 1, float(i % 500)) for i in range(1, 4001)])
con.commit(); con.close()
`;

/** Build a small sqlite fixture plus manifest; returns the manifest path. */
export function buildFixture(): { manifestPath: string; dbPath: string } {
  const dir = mkdtempSync(join(tmpdir(), "trainer-bindings-"));
  const dbPath = join(dir, "shop.sqlite");
  execFileSync("python3", ["-c", BUILD_DB, dbPath]);
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(
    manifestPath,
    JSON.stringify({
      databases: [
        { db_id: DB_ID, source: SOURCE, engine: "sqlite", location: dbPath },
      ],
    }),
  );
  return { manifestPath, dbPath };
}

export function fenced(sql: string, mode = "suppressed"): string {
  const block = "```sql\n" + sql + "\n```";
  if (mode === "fast") return "<think>\n\n</think>\n\n" + block;
  if (mode === "slow") return "<think>work through the joins</think>\n\n" + block;
  return block;
}

/** Deterministic PRNG so randomized fixtures are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a += 0x6d2b79f5;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
