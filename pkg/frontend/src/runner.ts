import { spawnSync } from "node:child_process";

export interface RunResult {
  status: number;
  stdout: string;
  stderr: string;
}

/** The CLI to drive; override with the SURFDICE_BIN environment variable. */
export function surfdiceBin(): string {
  return process.env.SURFDICE_BIN ?? "surfdice";
}

export interface RunOptions {
  /** Exit codes to pass through instead of throwing. Default: [0]. */
  okStatus?: number[];
}

export function runSurfdice(args: string[], options: RunOptions = {}): RunResult {
  const bin = surfdiceBin();
  const r = spawnSync(bin, args, { encoding: "utf8", maxBuffer: 256 * 1024 * 1024 });
  if (r.error) {
    throw new Error(`could not run ${bin}: ${r.error.message}`);
  }
  const result: RunResult = { status: r.status ?? -1, stdout: r.stdout, stderr: r.stderr };
  const ok = options.okStatus ?? [0];
  if (!ok.includes(result.status)) {
    const tail = result.stderr.trim().split("\n").slice(-3).join("\n");
    throw new Error(`${bin} ${args[0]} exited ${result.status}: ${tail}`);
  }
  return result;
}
