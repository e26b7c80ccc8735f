/** Workbench boot: case browser, timeline, graph editor, what-if panel. */

import { ApiClient } from './api.js';
import { CaseStore } from './store.js';
import { buildTimeline, renderTimeline } from './timeline.js';
import { renderGraph } from './graph-view.js';
import { renderWhatIf } from './whatif.js';
import type { NodeKind } from './types.js';

const API_BASE = (window as { EBB_API_BASE?: string }).EBB_API_BASE ?? '';

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(API_BASE);
  const store = new CaseStore(api);

  const caseSelect = el<HTMLSelectElement>('case-select');
  const banner = el<HTMLDivElement>('banner');
  const timelineRoot = el<HTMLDivElement>('timeline');
  const graphRoot = el<HTMLDivElement>('graph');
  const whatifRoot = el<HTMLDivElement>('whatif');
  const inspector = el<HTMLDivElement>('inspector');
  const uneventsRoot = el<HTMLDivElement>('unevents');

  function showError(message: string): void {
    banner.textContent = message;
    banner.className = message ? 'banner error' : 'banner';
  }

  function renderInspector(): void {
    inspector.textContent = '';
    const { node, edge } = store.selection;
    if (edge) {
      const [cause, effect] = edge;
      const title = document.createElement('h4');
      title.textContent = `edge ${cause} → ${effect}`;
      inspector.appendChild(title);
      const verdict = store.edgeBadge(cause, effect);
      const status = document.createElement('p');
      status.textContent = verdict
        ? `${verdict.test}: ${verdict.result} (${verdict.mode}) — ${verdict.justification}`
        : 'untested';
      inspector.appendChild(status);
      const testButton = document.createElement('button');
      testButton.textContent = 'Run counterfactual test';
      testButton.addEventListener('click', () => void store.runEdgeTest(cause, effect));
      inspector.appendChild(testButton);
      const dropButton = document.createElement('button');
      dropButton.textContent = 'Delete edge';
      dropButton.addEventListener('click', () => void store.unlinkNodes(cause, effect));
      inspector.appendChild(dropButton);
      return;
    }
    if (node) {
      const doc = store.graph.nodes.find((n) => n.id === node);
      if (!doc) return;
      const title = document.createElement('h4');
      title.textContent = `${doc.label} (${doc.id})`;
      inspector.appendChild(title);
      const meta = document.createElement('p');
      meta.textContent = `kind: ${doc.kind} · binding: ${doc.sim_binding ?? 'none'} · facts: ${
        doc.fact_refs.join(', ') || 'none'
      }`;
      inspector.appendChild(meta);
      const verdict = store.nodeBadge(node);
      if (verdict) {
        const status = document.createElement('p');
        status.textContent = `sufficiency: ${verdict.result} (${verdict.mode})`;
        inspector.appendChild(status);
      }
      const testButton = document.createElement('button');
      testButton.textContent = 'Run sufficiency test';
      testButton.addEventListener('click', () => void store.runNodeTest(node));
      inspector.appendChild(testButton);
      const kindSelect = document.createElement('select');
      for (const kind of ['event', 'unevent', 'state', 'process', 'mishap']) {
        const option = document.createElement('option');
        option.value = kind;
        option.textContent = `retype: ${kind}`;
        if (kind === doc.kind) option.selected = true;
        kindSelect.appendChild(option);
      }
      kindSelect.addEventListener('change', () =>
        void store.retypeNode(node, kindSelect.value as NodeKind),
      );
      inspector.appendChild(kindSelect);
      const deleteButton = document.createElement('button');
      deleteButton.textContent = 'Delete node (and its edges)';
      deleteButton.addEventListener('click', () => {
        if (window.confirm(`Delete ${node} and all its edges?`)) {
          void store.deleteNode(node);
        }
      });
      inspector.appendChild(deleteButton);
    }
  }

  function renderAll(): void {
    showError(store.lastError ? store.lastError.message : '');
    renderTimeline(timelineRoot, buildTimeline(store.records, store.gaps));
    renderGraph(graphRoot, store, {
      onSelectNode: (id) => {
        store.selection = { node: id };
        renderAll();
      },
      onSelectEdge: (cause, effect) => {
        store.selection = { edge: [cause, effect] };
        renderAll();
      },
    });
    renderWhatIf(whatifRoot, store);
    renderInspector();
    uneventsRoot.textContent = '';
    if (store.unevents.length) {
      const heading = document.createElement('h4');
      heading.textContent = 'Expected events';
      uneventsRoot.appendChild(heading);
      for (const finding of store.unevents) {
        const line = document.createElement('p');
        const mark = finding.satisfied ? '✓' : '✗';
        line.textContent = `${mark} ${finding.spec} (${finding.witnesses.length} witnesses)`;
        line.className = finding.satisfied ? 'unevent ok' : 'unevent missing';
        uneventsRoot.appendChild(line);
      }
    }
    const validation = store.validation;
    const validationRoot = el<HTMLDivElement>('validation');
    validationRoot.textContent = validation
      ? validation.ok
        ? `graph sound · ${validation.topnodes} mishap topnode(s)`
        : `violations: ${validation.violations.map((v) => v.code).join(', ')}`
      : '';
    validationRoot.className = validation && !validation.ok ? 'validation bad' : 'validation';
  }

  store.subscribe(renderAll);

  el<HTMLButtonElement>('add-node').addEventListener('click', () => {
    const id = el<HTMLInputElement>('new-node-id').value.trim();
    const label = el<HTMLInputElement>('new-node-label').value.trim();
    const kind = el<HTMLSelectElement>('new-node-kind').value as NodeKind;
    if (id && label) void store.addNode({ id, kind, label });
  });
  el<HTMLButtonElement>('link-nodes').addEventListener('click', () => {
    const cause = el<HTMLInputElement>('link-cause').value.trim();
    const effect = el<HTMLInputElement>('link-effect').value.trim();
    if (cause && effect) void store.linkNodes(cause, effect);
  });

  caseSelect.addEventListener('change', () => {
    if (caseSelect.value) {
      void store.openCase(caseSelect.value).catch((error) => showError(String(error)));
    }
  });

  try {
    const cases = await api.listCases();
    if (!cases.length) {
      showError('No cases in the store yet. Seed one with ebb-demo.');
      return;
    }
    for (const caseId of cases) {
      const option = document.createElement('option');
      option.value = caseId;
      option.textContent = caseId;
      caseSelect.appendChild(option);
    }
    caseSelect.value = cases[0]!;
    await store.openCase(cases[0]!);
  } catch (error) {
    showError(`API unreachable: ${String(error)}`);
  }
}

void boot();
