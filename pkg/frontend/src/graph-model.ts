/** Pure operations on why-because graph documents.
 *
 * These produce candidate documents for the server to accept or refuse;
 * the cycle check exists only to flag doomed edits inline before the
 * round trip. Nothing here is authoritative.
 */

import type { NodeKind, WbgDocument, WbgNode } from './types.js';

export function emptyGraph(): WbgDocument {
  return { version: 1, nodes: [], edges: [], topnodes: [] };
}

export function cloneGraph(doc: WbgDocument): WbgDocument {
  return {
    version: doc.version,
    nodes: doc.nodes.map((n) => ({ ...n, fact_refs: [...n.fact_refs] })),
    edges: doc.edges.map(([a, b]) => [a, b] as [string, string]),
    topnodes: [...doc.topnodes],
  };
}

export function findNode(doc: WbgDocument, id: string): WbgNode | undefined {
  return doc.nodes.find((n) => n.id === id);
}

export function withNode(
  doc: WbgDocument,
  node: { id: string; kind: NodeKind; label: string; fact_refs?: string[]; sim_binding?: string | null },
): WbgDocument {
  if (findNode(doc, node.id)) throw new Error(`node ${node.id} already exists`);
  const out = cloneGraph(doc);
  out.nodes.push({
    id: node.id,
    kind: node.kind,
    label: node.label,
    fact_refs: node.fact_refs ?? [],
    sim_binding: node.sim_binding ?? null,
  });
  out.nodes.sort((a, b) => a.id.localeCompare(b.id));
  if (node.kind === 'mishap' && !out.topnodes.includes(node.id)) {
    out.topnodes.push(node.id);
    out.topnodes.sort();
  }
  return out;
}

export function withEdge(doc: WbgDocument, cause: string, effect: string): WbgDocument {
  if (!findNode(doc, cause)) throw new Error(`unknown node ${cause}`);
  if (!findNode(doc, effect)) throw new Error(`unknown node ${effect}`);
  if (cause === effect) throw new Error('self edges are not causal');
  const out = cloneGraph(doc);
  if (!out.edges.some(([a, b]) => a === cause && b === effect)) {
    out.edges.push([cause, effect]);
    out.edges.sort((x, y) => x[0].localeCompare(y[0]) || x[1].localeCompare(y[1]));
  }
  return out;
}

export function withoutEdge(doc: WbgDocument, cause: string, effect: string): WbgDocument {
  const out = cloneGraph(doc);
  out.edges = out.edges.filter(([a, b]) => !(a === cause && b === effect));
  return out;
}

export function withoutNode(doc: WbgDocument, id: string): WbgDocument {
  const out = cloneGraph(doc);
  out.nodes = out.nodes.filter((n) => n.id !== id);
  out.edges = out.edges.filter(([a, b]) => a !== id && b !== id);
  out.topnodes = out.topnodes.filter((t) => t !== id);
  return out;
}

export function retypedNode(doc: WbgDocument, id: string, kind: NodeKind): WbgDocument {
  const node = findNode(doc, id);
  if (!node) throw new Error(`unknown node ${id}`);
  const out = cloneGraph(doc);
  const target = out.nodes.find((n) => n.id === id)!;
  target.kind = kind;
  if (kind === 'mishap' && !out.topnodes.includes(id)) {
    out.topnodes.push(id);
    out.topnodes.sort();
  }
  if (kind !== 'mishap') out.topnodes = out.topnodes.filter((t) => t !== id);
  return out;
}

export function edgesFrom(doc: WbgDocument, cause: string): string[] {
  return doc.edges.filter(([a]) => a === cause).map(([, b]) => b);
}

export function edgesInto(doc: WbgDocument, effect: string): string[] {
  return doc.edges.filter(([, b]) => b === effect).map(([a]) => a);
}

/** Would adding cause->effect close a directed cycle? */
export function wouldCycle(doc: WbgDocument, cause: string, effect: string): boolean {
  if (cause === effect) return true;
  const seen = new Set<string>();
  const frontier = [effect];
  while (frontier.length) {
    const current = frontier.pop()!;
    if (current === cause) return true;
    if (seen.has(current)) continue;
    seen.add(current);
    for (const next of edgesFrom(doc, current)) frontier.push(next);
  }
  return false;
}

/** Column-per-depth layout: causes left, mishap topnodes rightmost. */
export interface NodePosition {
  id: string;
  x: number;
  y: number;
  depth: number;
}

export function layoutGraph(
  doc: WbgDocument,
  columnWidth = 220,
  rowHeight = 72,
): NodePosition[] {
  const depth = new Map<string, number>();
  const pending = new Map<string, number>();
  for (const node of doc.nodes) pending.set(node.id, edgesInto(doc, node.id).length);
  const queue = doc.nodes.filter((n) => (pending.get(n.id) ?? 0) === 0).map((n) => n.id);
  for (const id of queue) depth.set(id, 0);
  while (queue.length) {
    const current = queue.shift()!;
    for (const next of edgesFrom(doc, current)) {
      depth.set(next, Math.max(depth.get(next) ?? 0, (depth.get(current) ?? 0) + 1));
      const left = (pending.get(next) ?? 1) - 1;
      pending.set(next, left);
      if (left === 0) queue.push(next);
    }
  }
  // Anything caught in a (rejected-but-rendered) cycle lands in column 0.
  const byDepth = new Map<number, string[]>();
  for (const node of doc.nodes) {
    const d = depth.get(node.id) ?? 0;
    const column = byDepth.get(d) ?? [];
    column.push(node.id);
    byDepth.set(d, column);
  }
  const out: NodePosition[] = [];
  for (const [d, ids] of [...byDepth.entries()].sort((a, b) => a[0] - b[0])) {
    ids.sort();
    ids.forEach((id, row) => {
      out.push({ id, depth: d, x: 40 + d * columnWidth, y: 40 + row * rowHeight });
    });
  }
  return out;
}
