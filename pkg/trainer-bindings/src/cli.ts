import { spawn } from "node:child_process";

import { errorForExit } from "./errors";

/**
 * Run the scorer CLI asynchronously, feeding stdin and collecting stdout.
 *
 * The child process does the database work; the host event loop stays free,
 * so a training loop awaiting this call is never stalled.
 */
export function runCli(
  command: string[],
  args: string[],
  stdin?: string,
): Promise<string> {
  return new Promise((resolve, reject) => {
    const [bin, ...prefix] = command;
    const child = spawn(bin, [...prefix, ...args], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.setEncoding("utf8");
    child.stderr.setEncoding("utf8");
    child.stdout.on("data", (chunk: string) => (stdout += chunk));
    child.stderr.on("data", (chunk: string) => (stderr += chunk));
    child.on("error", (err) => reject(err));
    child.on("close", (code) => {
      if (code === 0) {
        resolve(stdout);
      } else {
        reject(errorForExit(code ?? -1, stderr));
      }
    });
    if (stdin !== undefined) {
      child.stdin.write(stdin);
    }
    child.stdin.end();
  });
}

export function parseJsonLines<T>(output: string): T[] {
  return output
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as T);
}
