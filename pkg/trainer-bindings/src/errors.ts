/** Error kinds mapping one-to-one onto the scorer's exit-code contract. */

export class BindingsError extends Error {
  constructor(message: string, readonly exitCode: number) {
    super(message);
    this.name = new.target.name;
  }
}

/** Exit code 1: bad flags or configuration. */
export class UsageError extends BindingsError {
  constructor(message: string) {
    super(message, 1);
  }
}

/** Exit code 2: dataset defects (unknown db_id, failing gold SQL, bad JSONL). */
export class DatasetError extends BindingsError {
  constructor(message: string) {
    super(message, 2);
  }
}

/** Exit code 3: infrastructure faults (missing database file, connections). */
export class InfrastructureError extends BindingsError {
  constructor(message: string) {
    super(message, 3);
  }
}

export function errorForExit(code: number, stderr: string): BindingsError {
  const message = stderr.trim() || `scorer exited with code ${code}`;
  switch (code) {
    case 1:
      return new UsageError(message);
    case 2:
      return new DatasetError(message);
    case 3:
      return new InfrastructureError(message);
    default:
      return new BindingsError(message, code);
  }
}
