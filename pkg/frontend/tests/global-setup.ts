/** Boots the real investigation API over a freshly seeded demo case. */

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import type { TestProject } from 'vitest/node';

const PORT = 8917;

async function waitForApi(base: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${base}/cases`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error('investigation API did not come up');
}

let api: ChildProcess;
let workDir: string;

export default async function setup(project: TestProject): Promise<() => void> {
  workDir = mkdtempSync(join(tmpdir(), 'ebb-workbench-'));
  execFileSync('ebb-demo', [workDir], { stdio: 'pipe' });
  api = spawn(
    'ebb-api',
    ['--port', String(PORT), '--case-store', join(workDir, 'case-store')],
    { stdio: 'ignore' },
  );
  const base = `http://127.0.0.1:${PORT}`;
  await waitForApi(base);
  project.provide('apiBase', base);
  project.provide('workDir', workDir);
  return () => {
    api.kill('SIGTERM');
    rmSync(workDir, { recursive: true, force: true });
  };
}

declare module 'vitest' {
  export interface ProvidedContext {
    apiBase: string;
    workDir: string;
  }
}
