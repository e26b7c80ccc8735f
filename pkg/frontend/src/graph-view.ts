/** SVG rendering of the why-because graph with verdict badges.
 *
 * The picture is a pure projection of the store's graph and verdict
 * ledger; interactions only dispatch store actions and re-render from
 * whatever the server accepted.
 */

import { layoutGraph } from './graph-model.js';
import type { CaseStore } from './store.js';
import type { NodeKind } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';
const NODE_W = 170;
const NODE_H = 46;

const KIND_CLASS: Record<NodeKind, string> = {
  mishap: 'node-mishap',
  event: 'node-event',
  unevent: 'node-unevent',
  state: 'node-state',
  process: 'node-process',
};

const KIND_GLYPH: Record<NodeKind, string> = {
  mishap: '⚠', // warning sign
  event: '■',
  unevent: '□',
  state: '●',
  process: '⬢',
};

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

function badgeClass(result: string | undefined): string {
  if (result === 'pass') return 'badge-pass';
  if (result === 'fail') return 'badge-fail';
  return 'badge-unknown';
}

export interface GraphViewCallbacks {
  onSelectNode(id: string): void;
  onSelectEdge(cause: string, effect: string): void;
}

export function renderGraph(
  root: HTMLElement,
  store: CaseStore,
  callbacks: GraphViewCallbacks,
): void {
  root.textContent = '';
  const doc = store.graph;
  if (!doc.nodes.length) {
    const empty = document.createElement('p');
    empty.className = 'empty';
    empty.textContent = 'No factor nodes yet. Add the first one below.';
    root.appendChild(empty);
    return;
  }
  const positions = new Map(layoutGraph(doc).map((p) => [p.id, p]));
  let width = 0;
  let height = 0;
  for (const p of positions.values()) {
    width = Math.max(width, p.x + NODE_W + 40);
    height = Math.max(height, p.y + NODE_H + 40);
  }
  const svg = svgEl('svg', {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: 'wbg-canvas',
  });

  const marker = svgEl('marker', {
    id: 'arrow',
    viewBox: '0 0 10 10',
    refX: '9',
    refY: '5',
    markerWidth: '7',
    markerHeight: '7',
    orient: 'auto-start-reverse',
  });
  marker.appendChild(svgEl('path', { d: 'M 0 0 L 10 5 L 0 10 z', class: 'arrow-head' }));
  const defs = svgEl('defs');
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const [cause, effect] of doc.edges) {
    const a = positions.get(cause);
    const b = positions.get(effect);
    if (!a || !b) continue;
    const x1 = a.x + NODE_W;
    const y1 = a.y + NODE_H / 2;
    const x2 = b.x;
    const y2 = b.y + NODE_H / 2;
    const selected =
      store.selection.edge?.[0] === cause && store.selection.edge?.[1] === effect;
    const line = svgEl('path', {
      d: `M ${x1} ${y1} C ${x1 + 40} ${y1}, ${x2 - 40} ${y2}, ${x2} ${y2}`,
      class: selected ? 'edge selected' : 'edge',
      'marker-end': 'url(#arrow)',
    });
    line.addEventListener('click', () => callbacks.onSelectEdge(cause, effect));
    svg.appendChild(line);
    const verdict = store.edgeBadge(cause, effect);
    const badge = svgEl('circle', {
      cx: String((x1 + x2) / 2),
      cy: String((y1 + y2) / 2),
      r: '6',
      class: `badge ${badgeClass(verdict?.result)}`,
    });
    const title = svgEl('title');
    title.textContent = verdict
      ? `${verdict.test}: ${verdict.result} (${verdict.mode}) ${verdict.justification}`
      : 'untested edge';
    badge.appendChild(title);
    badge.addEventListener('click', () => callbacks.onSelectEdge(cause, effect));
    svg.appendChild(badge);
  }

  for (const node of doc.nodes) {
    const p = positions.get(node.id);
    if (!p) continue;
    const selected = store.selection.node === node.id;
    const group = svgEl('g', {
      transform: `translate(${p.x}, ${p.y})`,
      class: `node ${KIND_CLASS[node.kind]}${selected ? ' selected' : ''}`,
    });
    group.appendChild(
      svgEl('rect', { width: String(NODE_W), height: String(NODE_H), rx: '6' }),
    );
    const glyph = svgEl('text', { x: '10', y: '20', class: 'node-glyph' });
    glyph.textContent = KIND_GLYPH[node.kind];
    group.appendChild(glyph);
    const label = svgEl('text', { x: '26', y: '20', class: 'node-label' });
    label.textContent =
      node.label.length > 24 ? node.label.slice(0, 22) + '…' : node.label;
    group.appendChild(label);
    const idText = svgEl('text', { x: '10', y: '36', class: 'node-id' });
    idText.textContent = node.id;
    group.appendChild(idText);
    const nodeVerdict = store.nodeBadge(node.id);
    if (nodeVerdict) {
      const badge = svgEl('circle', {
        cx: String(NODE_W - 10),
        cy: '10',
        r: '6',
        class: `badge ${badgeClass(nodeVerdict.result)}`,
      });
      const title = svgEl('title');
      title.textContent = `sufficiency: ${nodeVerdict.result} (${nodeVerdict.mode})`;
      badge.appendChild(title);
      group.appendChild(badge);
    }
    const tip = svgEl('title');
    tip.textContent = `${node.label}\nkind: ${node.kind}\nfacts: ${node.fact_refs.join(', ') || 'none'}`;
    group.appendChild(tip);
    group.addEventListener('click', () => callbacks.onSelectNode(node.id));
    svg.appendChild(group);
  }
  root.appendChild(svg);
}
