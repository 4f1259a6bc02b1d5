// Fixtures and process plumbing for the end-to-end suite.
//
// The descriptor constructions mirror the service's matching setup: rows
// live on the first axis of a 4-dim space, rows inside a block sit 100
// apart, blocks sit far apart, and a shared block reappears shifted by
// 0.01 so intended matches are unambiguous under the ratio test.

import { execFile, spawn } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

const execFileAsync = promisify(execFile);

export const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));

// the server's default synthetic classifier: centroid of class c is 10*e_c
export const FEATURE_DIM = 64;

export function oneHotFeature(classId: number): number[] {
  const feature = new Array<number>(FEATURE_DIM).fill(0);
  feature[classId] = 10;
  return feature;
}

export function block(base: number, count = 10, step = 100): number[] {
  return Array.from({ length: count }, (_, i) => base + i * step);
}

export function axisRows(values: number[], dim = 4): number[][] {
  return values.map((v) => {
    const row = new Array<number>(dim).fill(0);
    row[0] = v;
    return row;
  });
}

// Sets where consecutive entries share exactly one 10-descriptor block and
// non-adjacent entries share nothing: the classic A~B, B~C, A!~C triple.
export function chainKeypoints(length: number): number[][][] {
  const shared = Array.from({ length: length - 1 }, (_, i) => block(1e5 * (i + 1)));
  const sets: number[][][] = [];
  for (let i = 0; i < length; i++) {
    let values: number[] = [];
    if (i > 0) values = values.concat(shared[i - 1].map((v) => v + 0.01));
    if (i < length - 1) values = values.concat(shared[i]);
    sets.push(axisRows(values));
  }
  return sets;
}

export async function postSubmission(
  baseUrl: string,
  taskId: string,
  body: Record<string, unknown>,
): Promise<{ verdict: { decision: string }; group_path: number[] | null }> {
  const response = await fetch(`${baseUrl}/tasks/${taskId}/submissions`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    throw new Error(`submit failed: ${response.status} ${await response.text()}`);
  }
  return response.json();
}

// Drives the repository's campus scenario script against the live server:
// creates the task, pushes all 19 submissions, closes, fetches the report.
export async function runCampusScenario(baseUrl: string, taskId: string): Promise<void> {
  const script = join(REPO_ROOT, "scripts", "run_campus_scenario.py");
  await execFileAsync("python3", [script, "--url", baseUrl, "--task-id", taskId], {
    cwd: REPO_ROOT,
    timeout: 60_000,
  });
}

export interface LiveServer {
  baseUrl: string;
  stop(): Promise<void>;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export async function startServer(): Promise<LiveServer> {
  const storeDir = await mkdtemp(join(tmpdir(), "dash-e2e-"));
  let lastError = "";
  for (let attempt = 0; attempt < 3; attempt++) {
    const port = 8200 + Math.floor(Math.random() * 2000);
    const baseUrl = `http://127.0.0.1:${port}`;
    const child = spawn(
      "python3",
      ["-m", "crowdreport.cli", "serve", "--store", storeDir, "--host", "127.0.0.1", "--port", String(port)],
      { stdio: ["ignore", "ignore", "pipe"] },
    );
    let exited = false;
    child.on("exit", () => {
      exited = true;
    });
    let stderr = "";
    child.stderr?.on("data", (chunk) => {
      stderr += chunk;
    });

    for (let i = 0; i < 100 && !exited; i++) {
      try {
        await fetch(`${baseUrl}/tasks/__probe__`);
        return {
          baseUrl,
          stop: async () => {
            await new Promise<void>((resolve) => {
              if (exited || child.exitCode !== null) return resolve();
              child.once("exit", () => resolve());
              child.kill("SIGTERM");
              setTimeout(() => child.kill("SIGKILL"), 3000).unref();
            });
            await rm(storeDir, { recursive: true, force: true });
          },
        };
      } catch {
        await sleep(200);
      }
    }
    child.kill("SIGKILL");
    lastError = stderr;
    // a dead child usually means the port was taken, try another
  }
  await rm(storeDir, { recursive: true, force: true });
  throw new Error(`could not start the API server: ${lastError}`);
}
