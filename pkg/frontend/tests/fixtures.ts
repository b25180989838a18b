import { vi } from "vitest";
import type { ModelSummary, View } from "../src/types";

// A small canned model: enough structure for every widget kind without
// depending on a live solver. Component tests assert rendering and wire
// traffic; behavioral truth against the real server lives in the
// integration suite.

export const summary: ModelSummary = {
  model_id: "m-1",
  name: "Rover",
  features: [
    { name: "Rover", max_count: 1, parent: null, edge: null, attributes: [] },
    {
      name: "Camera",
      max_count: 1,
      parent: "Rover",
      edge: "optional",
      attributes: [{ name: "Res", domain: { values: [2, 8] } }],
    },
    { name: "Zoom", max_count: 1, parent: "Camera", edge: "optional", attributes: [] },
    { name: "Arm", max_count: 4, parent: "Rover", edge: "mandatory", attributes: [] },
    {
      name: "Mode",
      max_count: 1,
      parent: "Rover",
      edge: "mandatory",
      attributes: [{ name: "Kind", domain: { values: ["eco", "fast"] } }],
    },
  ],
  enums: [{ name: "ModeKind", codes: ["eco", "fast"] }],
  groups: [],
  cross_deps: [],
  constraints: [],
  goals: [
    { name: "cost", direction: "minimize", expr: "2*Arm + Camera" },
  ],
};

export const view0: View = {
  vars: [
    { name: "Rover", domain: [[1, 1]], status: "fixed", value: 1 },
    { name: "Camera", domain: [[0, 1]], status: "open", value: null },
    { name: "Camera.Res", domain: [[2, 2], [8, 8]], status: "open", value: null },
    { name: "Zoom", domain: [[0, 1]], status: "open", value: null },
    { name: "Arm", domain: [[1, 4]], status: "forced_in", value: null },
    { name: "Mode", domain: [[1, 1]], status: "fixed", value: 1 },
    { name: "Mode.Kind", domain: [[0, 1]], status: "open", value: null },
  ],
  remaining: 12,
  exact: true,
};

type ReplyBody = { status?: number; body?: unknown };
type Reply = ReplyBody | ((body: unknown, url: string) => ReplyBody | Promise<ReplyBody>);

export interface Call {
  method: string;
  url: string;
  body: unknown;
}

/** Routed fetch stub: handlers match in order; `once` handlers are consumed. */
export class FakeApi {
  private handlers: { method: string; pattern: RegExp; reply: Reply; once: boolean }[] = [];
  calls: Call[] = [];

  on(method: string, pattern: RegExp, reply: Reply): this {
    this.handlers.push({ method, pattern, reply, once: false });
    return this;
  }

  once(method: string, pattern: RegExp, reply: Reply): this {
    this.handlers.push({ method, pattern, reply, once: true });
    return this;
  }

  install(): void {
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      const method = init?.method ?? "GET";
      const body = init?.body ? JSON.parse(init.body as string) : undefined;
      this.calls.push({ method, url, body });
      const i = this.handlers.findIndex((h) => h.method === method && h.pattern.test(url));
      if (i < 0) throw new Error(`unexpected request: ${method} ${url}`);
      const h = this.handlers[i];
      if (h.once) this.handlers.splice(i, 1);
      const r = typeof h.reply === "function" ? await h.reply(body, url) : h.reply;
      const status = r.status ?? 200;
      if (status === 204) return new Response(null, { status });
      return new Response(JSON.stringify(r.body ?? {}), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    });
  }

  callsTo(pathPart: string): Call[] {
    return this.calls.filter((c) => c.url.includes(pathPart));
  }
}

/** Routes for the happy path up to an open configure screen. */
export function freshApi(): FakeApi {
  return new FakeApi()
    .on("POST", /\/models$/, { body: { model_id: "m-1", diagnostics: [] } })
    .on("GET", /\/models\/m-1$/, { body: summary })
    .on("POST", /\/sessions$/, { status: 201, body: { session_id: "s-1", view: view0 } });
}

export function deferred<T>() {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}
