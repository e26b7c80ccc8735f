/** Projection fidelity against the real API, and what-ifs against the CLI.
 *
 * The store must equal GET /wbg after every scripted editor action; a
 * cycle edit has to be rejected client-visibly and never reach the
 * server; what-if outcomes must equal direct ebbsim invocations.
 */

import { execFileSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, inject, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { cloneGraph } from '../src/graph-model.js';
import { CaseStore, verdictKey } from '../src/store.js';
import { buildTimeline } from '../src/timeline.js';

const apiBase = inject('apiBase');
const workDir = inject('workDir');

const api = new ApiClient(apiBase);
const roseScript = () => join(workDir, 'scripts', 'rose-fall.json');

async function expectProjectionFidelity(store: CaseStore, caseId: string) {
  const serverDoc = await api.getWbg(caseId);
  expect(store.graph).toEqual(serverDoc);
}

describe('editor action sequences stay equal to the server graph', () => {
  const caseId = 'editor-session';
  let store: CaseStore;

  beforeAll(async () => {
    await fetch(`${apiBase}/cases`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ case_id: caseId, script_path: roseScript() }),
    });
    store = new CaseStore(api);
    await store.openCase(caseId);
  });

  it('starts from the empty server graph', async () => {
    expect(store.graph.nodes).toEqual([]);
    await expectProjectionFidelity(store, caseId);
  });

  it('adds nodes', async () => {
    expect(await store.addNode({ id: 'mishap-x', kind: 'mishap', label: 'The mishap' })).toBe(true);
    await expectProjectionFidelity(store, caseId);
    expect(await store.addNode({ id: 'cause-a', kind: 'event', label: 'First cause' })).toBe(true);
    expect(await store.addNode({ id: 'cause-b', kind: 'state', label: 'Second cause' })).toBe(true);
    await expectProjectionFidelity(store, caseId);
    expect(store.graph.topnodes).toEqual(['mishap-x']);
  });

  it('links nodes', async () => {
    expect(await store.linkNodes('cause-a', 'mishap-x')).toBe(true);
    expect(await store.linkNodes('cause-b', 'cause-a')).toBe(true);
    await expectProjectionFidelity(store, caseId);
    expect(store.graph.edges).toEqual([
      ['cause-a', 'mishap-x'],
      ['cause-b', 'cause-a'],
    ]);
  });

  it('retypes a node', async () => {
    expect(await store.retypeNode('cause-b', 'process')).toBe(true);
    await expectProjectionFidelity(store, caseId);
    expect(store.graph.nodes.find((n) => n.id === 'cause-b')!.kind).toBe('process');
  });

  it('rejects a cycle edit client-side, leaving the server untouched', async () => {
    const before = cloneGraph(store.graph);
    expect(await store.linkNodes('mishap-x', 'cause-b')).toBe(false);
    expect(store.lastError).not.toBeNull();
    expect(store.lastError!.source).toBe('client');
    expect(store.lastError!.message).toContain('cycle');
    expect(store.graph).toEqual(before);
    const serverDoc = await api.getWbg(caseId);
    expect(serverDoc.edges).not.toContainEqual(['mishap-x', 'cause-b']);
    expect(store.graph).toEqual(serverDoc);
  });

  it('the server itself refuses a cycle that skips the client check', async () => {
    const before = cloneGraph(store.graph);
    const doctored = cloneGraph(store.graph);
    doctored.edges.push(['cause-a', 'cause-b']); // closes b -> a -> b
    expect(await store.putRawGraph(doctored)).toBe(false);
    expect(store.lastError!.source).toBe('server');
    expect(store.lastError!.subjects.length).toBeGreaterThan(0);
    expect(store.graph).toEqual(before);
    await expectProjectionFidelity(store, caseId);
  });

  it('deletes a node along with its edges server-side', async () => {
    expect(await store.deleteNode('cause-b')).toBe(true);
    await expectProjectionFidelity(store, caseId);
    expect(store.graph.edges).toEqual([['cause-a', 'mishap-x']]);
  });

  it('random well-formed action scripts keep fidelity at every step', async () => {
    const actions = [
      () => store.addNode({ id: 'n-1', kind: 'state', label: 'extra state' }),
      () => store.linkNodes('n-1', 'mishap-x'),
      () => store.addNode({ id: 'n-2', kind: 'unevent', label: 'missing thing' }),
      () => store.linkNodes('n-2', 'n-1'),
      () => store.retypeNode('n-1', 'event'),
      () => store.unlinkNodes('n-2', 'n-1'),
      () => store.linkNodes('n-2', 'mishap-x'),
      () => store.deleteNode('n-2'),
    ];
    for (const action of actions) {
      await action();
      await expectProjectionFidelity(store, caseId);
    }
  });
});

describe('verdict badges mirror the server ledger', () => {
  let store: CaseStore;

  beforeAll(async () => {
    store = new CaseStore(api);
    await store.openCase('rose-fall');
  });

  it('loads the seeded attestations as badges', () => {
    const badge = store.edgeBadge('calls-unheard', 'accident-2-no-alarm');
    expect(badge?.mode).toBe('attested');
    expect(badge?.result).toBe('pass');
  });

  it('running an edge test turns the badge green from the server verdict', async () => {
    const verdict = await store.runEdgeTest('hub-connection-failed', 'no-smart-sensor-data');
    expect(verdict?.result).toBe('pass');
    expect(verdict?.mode).toBe('simulated');
    const ledger = await api.getVerdicts('rose-fall');
    const stored = ledger.find(
      (v) => verdictKey(v.target) === 'edge:hub-connection-failed:no-smart-sensor-data',
    );
    expect(stored).toBeDefined();
    expect(store.edgeBadge('hub-connection-failed', 'no-smart-sensor-data')).toEqual(stored);
  });

  it('sufficiency badge for the alarm mishap', async () => {
    const verdict = await store.runNodeTest('accident-2-no-alarm');
    expect(verdict?.result).toBe('pass');
    expect(store.nodeBadge('accident-2-no-alarm')?.result).toBe('pass');
  });

  it('timeline shows exactly what the records endpoint returned', async () => {
    const model = buildTimeline(store.records, store.gaps);
    expect(model.recordCount).toBe(store.records.length);
    expect(store.records.length).toBeGreaterThan(4000);
    expect(model.bands.length).toBeGreaterThanOrEqual(1);
    const fallNs = 720e9;
    const overFall = store.gaps.some(
      (g) => g.start_t_mono_ns <= fallNs && fallNs <= g.end_t_mono_ns,
    );
    expect(overFall).toBe(true);
  });
});

describe('what-if panel equals direct simulator invocations', () => {
  let store: CaseStore;
  let scratch: string;

  beforeAll(async () => {
    store = new CaseStore(api);
    await store.openCase('rose-fall');
    scratch = mkdtempSync(join(tmpdir(), 'ebbsim-cli-'));
  });

  afterAll(() => {
    rmSync(scratch, { recursive: true, force: true });
  });

  function cliOutcome(remedies: string[]): Record<string, unknown> {
    const outPath = join(scratch, `outcome-${remedies.join('-') || 'baseline'}.json`);
    const args = ['run', '--script', roseScript(), '--seed', '0', '--outcome-json', outPath];
    for (const remedy of remedies) args.push('--remedy', remedy);
    execFileSync('ebbsim', args, { stdio: 'pipe' });
    return JSON.parse(readFileSync(outPath, 'utf-8'));
  }

  for (const remedies of [
    [] as string[],
    ['BackupComms'],
    ['NoDisinfectant'],
    ['HubDirectEmergencyCall', 'BraceletReminder'],
  ]) {
    it(`matches ebbsim for [${remedies.join(', ') || 'baseline'}]`, async () => {
      const panel = await store.runWhatIf(remedies);
      const cli = cliOutcome(remedies);
      expect(panel).not.toBeNull();
      expect(panel!.outcome).toEqual(cli);
    });
  }

  it('shows the backup-comms flip and the baseline mishaps', async () => {
    const flipped = await store.runWhatIf(['BackupComms']);
    expect(flipped!.alarmMishapPrevented).toBe(true);
    expect(flipped!.outcome.alarm_route).toBe('robot_backup');
    const baseline = await store.runWhatIf([]);
    expect(baseline!.alarmMishapPrevented).toBe(false);
    expect(baseline!.outcome.mishaps).toEqual(['Accident1', 'Accident2']);
  });

  it('validates recommendations through re-simulation', async () => {
    const recs = await store.validateRecommendations();
    const byBinding = new Map(recs.map((r) => [r.remedy_binding, r.validated]));
    expect(byBinding.get('BackupComms')).toBe(true);
    expect(byBinding.get('NoDisinfectant')).toBe(false);
    expect(byBinding.get('BraceletReminder')).toBe(false);
  });
});
