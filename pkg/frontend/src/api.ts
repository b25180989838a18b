import type {
  Delta,
  LogEntry,
  ModelSummary,
  OptimizeResult,
  Restriction,
  Solution,
  UploadResult,
  View,
  Wire,
} from "./types";

/** A non-2xx reply, carrying the server's error body verbatim. */
export class ApiError extends Error {
  status: number;
  code: string;
  culprit: string | null;
  variable: string | null;
  action: string | null;

  constructor(status: number, body: Record<string, unknown>) {
    super(typeof body.message === "string" ? body.message : `HTTP ${status}`);
    this.status = status;
    this.code = typeof body.code === "string" ? body.code : "error";
    this.culprit = typeof body.culprit === "string" ? body.culprit : null;
    this.variable = typeof body.variable === "string" ? body.variable : null;
    this.action = typeof body.action === "string" ? body.action : null;
  }
}

async function request<T>(
  baseUrl: string,
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const res = await fetch(baseUrl + path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (res.status === 204) return null as T;
  let doc: unknown = null;
  try {
    doc = await res.json();
  } catch {
    doc = null;
  }
  if (!res.ok) {
    const err =
      doc && typeof doc === "object" && "error" in doc
        ? (doc as { error: Record<string, unknown> }).error
        : {};
    throw new ApiError(res.status, err);
  }
  return doc as T;
}

export class Client {
  constructor(readonly baseUrl: string = "") {}

  uploadModel(text: string): Promise<UploadResult> {
    return request(this.baseUrl, "POST", "/models", { text });
  }

  getModel(modelId: string): Promise<ModelSummary> {
    return request(this.baseUrl, "GET", `/models/${modelId}`);
  }

  createSession(modelId: string): Promise<{ session_id: string; view: View }> {
    return request(this.baseUrl, "POST", "/sessions", { model_id: modelId });
  }

  getSession(sessionId: string): Promise<{ model_id: string; view: View; log: LogEntry[] }> {
    return request(this.baseUrl, "GET", `/sessions/${sessionId}`);
  }

  decide(sessionId: string, name: string, restriction: Restriction): Promise<{ delta: Delta }> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/decisions`, {
      name,
      restriction,
    });
  }

  addConstraint(sessionId: string, exprText: string): Promise<{ delta: Delta }> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/constraints`, {
      expr_text: exprText,
    });
  }

  undo(sessionId: string, k: number): Promise<{ delta: Delta }> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/undo`, { k });
  }

  nextSolution(sessionId: string): Promise<{ solution: Solution } | null> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/solutions/next`, {});
  }

  optimize(sessionId: string, goal: string): Promise<OptimizeResult> {
    return request(this.baseUrl, "POST", `/sessions/${sessionId}/optimize`, { goal });
  }

  deleteSession(sessionId: string): Promise<null> {
    return request(this.baseUrl, "DELETE", `/sessions/${sessionId}`);
  }
}

/**
 * FIFO gate for mutations: at most one request in flight, later ones queued
 * behind it. The server serializes per session anyway; queueing client-side
 * keeps the decision log in the order the user acted.
 */
export class MutationQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private pending = 0;
  private listeners = new Set<() => void>();

  get busy(): boolean {
    return this.pending > 0;
  }

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  enqueue<T>(task: () => Promise<T>): Promise<T> {
    this.pending += 1;
    this.notify();
    const run = this.tail.then(task);
    // keep the chain alive whether the task resolved or rejected
    this.tail = run.catch(() => undefined).finally(() => {
      this.pending -= 1;
      this.notify();
    });
    return run;
  }
}

export type { Wire };
