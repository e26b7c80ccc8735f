/** Case store: all workbench state, with the server as sole authority.
 *
 * Every editor action builds a candidate graph document, sends it, and
 * adopts exactly what the server returns. A refused mutation leaves the
 * held graph untouched and surfaces the server's violation report, so
 * the canvas can never drift from a state the server would reject.
 */

import { ApiClient, ApiError } from './api.js';
import {
  cloneGraph,
  emptyGraph,
  withEdge,
  withNode,
  withoutEdge,
  withoutNode,
  retypedNode,
  wouldCycle,
} from './graph-model.js';
import type {
  Fact,
  GapInterval,
  NodeKind,
  RecordRow,
  Recommendation,
  SimOutcome,
  UneventFinding,
  ValidationResult,
  Verdict,
  WbgDocument,
} from './types.js';

export interface EditError {
  source: 'client' | 'server';
  message: string;
  subjects: string[];
}

export type VerdictKey = string; // "edge:cause:effect" | "node:id"

export function verdictKey(target: string[]): VerdictKey {
  return target.join(':');
}

export interface WhatIfResult {
  remedies: string[];
  outcome: SimOutcome;
  alarmMishapPrevented: boolean;
}

type Listener = () => void;

export class CaseStore {
  caseId: string | null = null;
  graph: WbgDocument = emptyGraph();
  facts: Fact[] = [];
  verdicts = new Map<VerdictKey, Verdict>();
  recommendations: Recommendation[] = [];
  records: RecordRow[] = [];
  gaps: GapInterval[] = [];
  unevents: UneventFinding[] = [];
  validation: ValidationResult | null = null;
  lastError: EditError | null = null;
  lastWhatIf: WhatIfResult | null = null;
  selection: { node?: string; edge?: [string, string] } = {};

  private listeners: Listener[] = [];

  constructor(public api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // -- loading --------------------------------------------------------------

  async openCase(caseId: string): Promise<void> {
    this.caseId = caseId;
    this.lastError = null;
    this.lastWhatIf = null;
    const summary = await this.api.getCase(caseId);
    this.graph = summary.wbg;
    this.facts = summary.facts;
    this.recommendations = summary.recommendations;
    this.verdicts = new Map(summary.verdicts.map((v) => [verdictKey(v.target), v]));
    try {
      [this.records, this.gaps, this.unevents] = await Promise.all([
        this.api.getRecords(caseId),
        this.api.getGaps(caseId, 'ConnectivityStatus', 2000),
        this.api.getUnevents(caseId),
      ]);
    } catch (error) {
      // A case without telemetry still opens; the timeline stays empty.
      this.records = [];
      this.gaps = [];
      this.unevents = [];
    }
    this.validation = await this.api.validateWbg(caseId);
    this.emit();
  }

  async refreshGraph(): Promise<void> {
    if (!this.caseId) return;
    this.graph = await this.api.getWbg(this.caseId);
    this.validation = await this.api.validateWbg(this.caseId);
    this.emit();
  }

  // -- editor actions ----------------------------------------------------------

  private async commit(candidate: WbgDocument): Promise<boolean> {
    if (!this.caseId) return false;
    try {
      this.graph = await this.api.putWbg(this.caseId, candidate);
      this.lastError = null;
      this.validation = await this.api.validateWbg(this.caseId);
      this.emit();
      return true;
    } catch (error) {
      if (error instanceof ApiError) {
        this.lastError = {
          source: 'server',
          message: error.body.message,
          subjects: (error.body.violations ?? []).flatMap((v) => v.subjects),
        };
        this.emit();
        return false;
      }
      throw error;
    }
  }

  async addNode(node: {
    id: string;
    kind: NodeKind;
    label: string;
    fact_refs?: string[];
    sim_binding?: string | null;
  }): Promise<boolean> {
    try {
      return await this.commit(withNode(this.graph, node));
    } catch (error) {
      this.lastError = { source: 'client', message: String(error), subjects: [node.id] };
      this.emit();
      return false;
    }
  }

  async linkNodes(cause: string, effect: string): Promise<boolean> {
    if (wouldCycle(this.graph, cause, effect)) {
      // Inline rejection; the edge never reaches the server.
      this.lastError = {
        source: 'client',
        message: `linking ${cause} -> ${effect} would create a cycle`,
        subjects: [cause, effect],
      };
      this.emit();
      return false;
    }
    try {
      return await this.commit(withEdge(this.graph, cause, effect));
    } catch (error) {
      this.lastError = { source: 'client', message: String(error), subjects: [cause, effect] };
      this.emit();
      return false;
    }
  }

  async unlinkNodes(cause: string, effect: string): Promise<boolean> {
    return this.commit(withoutEdge(this.graph, cause, effect));
  }

  async deleteNode(id: string): Promise<boolean> {
    return this.commit(withoutNode(this.graph, id));
  }

  async retypeNode(id: string, kind: NodeKind): Promise<boolean> {
    try {
      return await this.commit(retypedNode(this.graph, id, kind));
    } catch (error) {
      this.lastError = { source: 'client', message: String(error), subjects: [id] };
      this.emit();
      return false;
    }
  }

  /** Force the candidate through unchanged; used by tests to prove the
   * server refuses what the client-side check would have caught. */
  async putRawGraph(candidate: WbgDocument): Promise<boolean> {
    return this.commit(candidate);
  }

  // -- causal tests --------------------------------------------------------------

  async runEdgeTest(cause: string, effect: string): Promise<Verdict | null> {
    if (!this.caseId) return null;
    const verdict = await this.api.testEdge(this.caseId, cause, effect);
    this.verdicts.set(verdictKey(verdict.target), verdict);
    this.emit();
    return verdict;
  }

  async runNodeTest(id: string): Promise<Verdict | null> {
    if (!this.caseId) return null;
    const verdict = await this.api.testNode(this.caseId, id);
    this.verdicts.set(verdictKey(verdict.target), verdict);
    this.emit();
    return verdict;
  }

  edgeBadge(cause: string, effect: string): Verdict | undefined {
    return this.verdicts.get(`edge:${cause}:${effect}`);
  }

  nodeBadge(id: string): Verdict | undefined {
    return this.verdicts.get(`node:${id}`);
  }

  // -- what-ifs --------------------------------------------------------------------

  async runWhatIf(remedies: string[], seed = 0): Promise<WhatIfResult | null> {
    if (!this.caseId) return null;
    const outcome = await this.api.runSim(this.caseId, remedies, seed);
    this.lastWhatIf = {
      remedies: [...remedies].sort(),
      outcome,
      alarmMishapPrevented:
        outcome.fall_occurred && !outcome.mishaps.includes('Accident2'),
    };
    this.emit();
    return this.lastWhatIf;
  }

  /** Re-run every bound remedy alone and persist its validated flag. */
  async validateRecommendations(seed = 0): Promise<Recommendation[]> {
    if (!this.caseId) return [];
    const baseline = await this.api.runSim(this.caseId, [], seed);
    const updated: Recommendation[] = [];
    for (const rec of this.recommendations) {
      let validated = false;
      if (rec.remedy_binding && baseline.mishaps.includes('Accident2')) {
        const outcome = await this.api.runSim(this.caseId, [rec.remedy_binding], seed);
        validated = !outcome.mishaps.includes('Accident2');
      }
      updated.push({ ...rec, validated });
    }
    this.recommendations = await this.api.putRecommendations(this.caseId, updated);
    this.emit();
    return this.recommendations;
  }
}
