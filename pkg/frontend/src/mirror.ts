import { ApiError, Client, MutationQueue } from "./api";
import type {
  ConflictInfo,
  Diagnostic,
  FeatureSummary,
  LogEntry,
  ModelSummary,
  OptimizeResult,
  Restriction,
  Solution,
  Status,
  VarView,
  View,
  Wire,
} from "./types";

// -- pure view bookkeeping ----------------------------------------------------
// The client never computes domains. It either applies a delta the server
// returned (replacing whole VarView records) or swaps in a fresh GET view.

export function applyDelta(view: View, changed: VarView[]): View {
  const byName = new Map(changed.map((v) => [v.name, v]));
  return {
    ...view,
    vars: view.vars.map((v) => byName.get(v.name) ?? v),
  };
}

export function viewsEqual(a: View, b: View): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

export const STATUS_LABEL: Record<Status, string> = {
  open: "Open",
  fixed: "Fixed",
  forced_in: "ForcedIn",
  forced_out: "ForcedOut",
};

/** "[0..4]", "{32, 64, 256}", with long interval lists cut at `limit`. */
export function domainText(
  domain: [Wire, Wire][],
  limit = 4,
): { text: string; truncated: number } {
  const pieces = domain.map(([lo, hi]) => (lo === hi ? `${lo}` : `${lo}..${hi}`));
  const truncated = pieces.length > limit ? pieces.length - limit : 0;
  const shown = truncated ? pieces.slice(0, limit) : pieces;
  const body = shown.join(", ");
  if (domain.length === 1 && domain[0][0] !== domain[0][1]) {
    return { text: `[${body}]`, truncated };
  }
  return { text: `{${body}}`, truncated };
}

export interface TreeNode {
  feature: FeatureSummary;
  children: TreeNode[];
}

export function buildTree(summary: ModelSummary): TreeNode[] {
  const nodes = new Map<string, TreeNode>();
  for (const f of summary.features) nodes.set(f.name, { feature: f, children: [] });
  const roots: TreeNode[] = [];
  for (const f of summary.features) {
    const node = nodes.get(f.name)!;
    const parent = f.parent === null ? undefined : nodes.get(f.parent);
    if (parent) parent.children.push(node);
    else roots.push(node);
  }
  return roots;
}

export interface TreeRow {
  kind: "feature" | "attribute";
  name: string; // var name: "Feature" or "Feature.Attr"
  depth: number;
  feature: FeatureSummary;
  attrIndex: number; // -1 for feature rows
  hasChildren: boolean;
}

/** Depth-first rows of the expanded part of the tree, attributes under their
 * feature. Collapsed features keep their own row but hide the subtree. */
export function flattenTree(roots: TreeNode[], collapsed: Set<string>): TreeRow[] {
  const rows: TreeRow[] = [];
  const walk = (node: TreeNode, depth: number) => {
    const f = node.feature;
    rows.push({
      kind: "feature",
      name: f.name,
      depth,
      feature: f,
      attrIndex: -1,
      hasChildren: node.children.length > 0 || f.attributes.length > 0,
    });
    if (collapsed.has(f.name)) return;
    f.attributes.forEach((_, i) =>
      rows.push({
        kind: "attribute",
        name: `${f.name}.${f.attributes[i].name}`,
        depth: depth + 1,
        feature: f,
        attrIndex: i,
        hasChildren: false,
      }),
    );
    for (const child of node.children) walk(child, depth + 1);
  };
  for (const root of roots) walk(root, 0);
  return rows;
}

// Windowing kicks in past this many rows; below it the whole tree renders.
export const VIRTUALIZE_AT = 200;
export const ROW_HEIGHT = 28;

export interface Window {
  start: number;
  end: number; // exclusive
  padTop: number;
  padBottom: number;
}

export function rowWindow(total: number, scrollTop: number, viewport: number): Window {
  if (total <= VIRTUALIZE_AT) {
    return { start: 0, end: total, padTop: 0, padBottom: 0 };
  }
  const overscan = 10;
  const first = Math.floor(scrollTop / ROW_HEIGHT);
  const visible = Math.ceil(viewport / ROW_HEIGHT);
  const start = Math.max(0, first - overscan);
  const end = Math.min(total, first + visible + overscan);
  return {
    start,
    end,
    padTop: start * ROW_HEIGHT,
    padBottom: (total - end) * ROW_HEIGHT,
  };
}

// -- enum display -------------------------------------------------------------

/** For an enum-valued attribute, its code names in code order; else null. */
export function enumNamesFor(
  feature: FeatureSummary,
  attrIndex: number,
): string[] | null {
  const dom = feature.attributes[attrIndex].domain;
  if (!("values" in dom) || dom.values.length === 0) return null;
  if (typeof dom.values[0] !== "string") return null;
  return dom.values as string[];
}

/** Integer enum code -> declared name, via the enum that owns the name. */
export function codeName(summary: ModelSummary, names: string[], value: Wire): string {
  for (const e of summary.enums) {
    const i = e.codes.indexOf(names[0]);
    if (i >= 0) {
      const idx = typeof value === "number" ? value : parseInt(value, 10);
      if (idx >= 0 && idx < e.codes.length) return e.codes[idx];
    }
  }
  return `${value}`;
}

// -- the session mirror -------------------------------------------------------

export interface PinnedSolution {
  label: string;
  solution: Solution;
}

export interface MirrorState {
  phase: "model" | "configure";
  modelText: string;
  diagnostics: Diagnostic[];
  summary: ModelSummary | null;
  sessionId: string | null;
  view: View | null;
  log: LogEntry[];
  conflict: ConflictInfo | null;
  error: string | null;
  currentSolution: Solution | null;
  solutionsExhausted: boolean;
  pinned: PinnedSolution[];
  optimizeResult: OptimizeResult | null;
  busy: boolean;
}

/**
 * Client-side mirror of one server session. All mutations funnel through a
 * FIFO queue so no decision is sent while another is in flight, and the
 * rendered state is exactly what the server last said.
 */
export class SessionMirror {
  private state: MirrorState = {
    phase: "model",
    modelText: "",
    diagnostics: [],
    summary: null,
    sessionId: null,
    view: null,
    log: [],
    conflict: null,
    error: null,
    currentSolution: null,
    solutionsExhausted: false,
    pinned: [],
    optimizeResult: null,
    busy: false,
  };
  private listeners = new Set<() => void>();
  private queue = new MutationQueue();

  constructor(readonly client: Client) {
    this.queue.subscribe(() => this.set({ busy: this.queue.busy }));
  }

  subscribe = (fn: () => void): (() => void) => {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  };

  getState = (): MirrorState => this.state;

  private set(patch: Partial<MirrorState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn();
  }

  /** Decisions and undo restart the server-side solution iterator. */
  private dropSolutionCursor(): Partial<MirrorState> {
    return { currentSolution: null, solutionsExhausted: false };
  }

  private fail(e: unknown): void {
    if (e instanceof ApiError && e.status === 409) {
      this.set({
        conflict: {
          message: e.message,
          culprit: e.culprit,
          variable: e.variable,
          action: e.action,
        },
      });
    } else if (e instanceof ApiError) {
      this.set({ error: `${e.code}: ${e.message}` });
    } else {
      this.set({ error: String(e) });
    }
  }

  setModelText(text: string): void {
    this.set({ modelText: text });
  }

  loadModel(text: string): Promise<void> {
    return this.queue.enqueue(async () => {
      this.set({ modelText: text, error: null, conflict: null });
      try {
        const up = await this.client.uploadModel(text);
        if (up.model_id === null) {
          this.set({ diagnostics: up.diagnostics });
          return;
        }
        const summary = await this.client.getModel(up.model_id);
        const sess = await this.client.createSession(up.model_id);
        this.set({
          phase: "configure",
          diagnostics: [],
          summary,
          sessionId: sess.session_id,
          view: sess.view,
          log: [],
          conflict: null,
          error: null,
          currentSolution: null,
          solutionsExhausted: false,
          pinned: [],
          optimizeResult: null,
        });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  decide(name: string, restriction: Restriction): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid || !this.state.view) return;
      try {
        const out = await this.client.decide(sid, name, restriction);
        this.set({
          view: applyDelta(this.state.view!, out.delta.changed),
          log: [...this.state.log, { kind: "decide", name, restriction }],
          conflict: null,
          error: null,
          ...this.dropSolutionCursor(),
        });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  addConstraint(exprText: string): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid || !this.state.view) return;
      try {
        const out = await this.client.addConstraint(sid, exprText);
        this.set({
          view: applyDelta(this.state.view!, out.delta.changed),
          log: [...this.state.log, { kind: "constraint", expr: exprText }],
          conflict: null,
          error: null,
          ...this.dropSolutionCursor(),
        });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  /** Roll back the last k log entries. */
  undo(k: number): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid || !this.state.view || k < 1) return;
      try {
        const out = await this.client.undo(sid, k);
        this.set({
          view: applyDelta(this.state.view!, out.delta.changed),
          log: this.state.log.slice(0, this.state.log.length - k),
          conflict: null,
          error: null,
          ...this.dropSolutionCursor(),
        });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  nextSolution(): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid) return;
      try {
        const out = await this.client.nextSolution(sid);
        if (out === null) {
          this.set({ currentSolution: null, solutionsExhausted: true });
        } else {
          this.set({ currentSolution: out.solution, solutionsExhausted: false, error: null });
        }
      } catch (e) {
        this.fail(e);
      }
    });
  }

  pinCurrent(): void {
    const { currentSolution, pinned } = this.state;
    if (!currentSolution || pinned.length >= 3) return;
    this.set({
      pinned: [...pinned, { label: `pin ${pinned.length + 1}`, solution: currentSolution }],
    });
  }

  clearPins(): void {
    this.set({ pinned: [] });
  }

  optimize(goal: string): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid) return;
      try {
        const res = await this.client.optimize(sid, goal);
        this.set({ optimizeResult: res, error: null });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  /** Pin the optimize witness into the session as one fix decision per
   * variable not already fixed at that value. */
  async applyWitness(): Promise<void> {
    const res = this.state.optimizeResult;
    if (!res || !res.solution) return;
    for (const [name, value] of Object.entries(res.solution)) {
      const before = this.state.view?.vars.find((v) => v.name === name);
      if (before && before.value === value) continue;
      await this.decide(name, { kind: "fix", value });
      if (this.state.conflict) return;
    }
  }

  dismissConflict(): void {
    this.set({ conflict: null });
  }

  dismissError(): void {
    this.set({ error: null });
  }

  /** Replace local state with the server's; the mirror must render equal
   * before and after, which the integration suite asserts. */
  refresh(): Promise<void> {
    return this.queue.enqueue(async () => {
      const sid = this.state.sessionId;
      if (!sid) return;
      try {
        const doc = await this.client.getSession(sid);
        this.set({ view: doc.view, log: doc.log });
      } catch (e) {
        this.fail(e);
      }
    });
  }

  async reset(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid) {
      try {
        await this.client.deleteSession(sid);
      } catch {
        // a vanished session is fine; we are leaving it anyway
      }
    }
    this.set({
      phase: "model",
      summary: null,
      sessionId: null,
      view: null,
      log: [],
      conflict: null,
      error: null,
      currentSolution: null,
      solutionsExhausted: false,
      pinned: [],
      optimizeResult: null,
    });
  }
}
