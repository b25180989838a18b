import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiError, Client } from "../src/api";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("Client", () => {
  it("sends decisions with the wire field names", async () => {
    const seen: { url: string; init: RequestInit }[] = [];
    vi.stubGlobal("fetch", (url: string, init: RequestInit) => {
      seen.push({ url, init });
      return Promise.resolve(jsonResponse(200, { delta: { changed: [] } }));
    });
    const c = new Client("http://x");
    await c.decide("s-1", "Audio", { kind: "fix", value: 1 });
    await c.addConstraint("s-1", "Visual + Audio = 1");
    expect(seen[0].url).toBe("http://x/sessions/s-1/decisions");
    expect(JSON.parse(seen[0].init.body as string)).toEqual({
      name: "Audio",
      restriction: { kind: "fix", value: 1 },
    });
    expect(JSON.parse(seen[1].init.body as string)).toEqual({
      expr_text: "Visual + Audio = 1",
    });
  });

  it("turns a 409 into an ApiError carrying the culprit", async () => {
    vi.stubGlobal("fetch", () =>
      Promise.resolve(
        jsonResponse(409, {
          error: {
            code: "conflict",
            message: "rejected: Audio = 1",
            culprit: "Visual + Audio = 1",
            variable: "Audio",
            action: "Audio = 1",
          },
        }),
      ),
    );
    const c = new Client();
    const err = await c.decide("s", "Audio", { kind: "fix", value: 1 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
    expect(err.culprit).toBe("Visual + Audio = 1");
    expect(err.variable).toBe("Audio");
    expect(err.message).toBe("rejected: Audio = 1");
  });

  it("maps 204 to null", async () => {
    vi.stubGlobal("fetch", () => Promise.resolve(new Response(null, { status: 204 })));
    const c = new Client();
    expect(await c.nextSolution("s")).toBeNull();
  });

  it("survives an error reply without a JSON body", async () => {
    vi.stubGlobal("fetch", () => Promise.resolve(new Response("gone", { status: 502 })));
    const c = new Client();
    const err = await c.getModel("m").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("error");
    expect(err.message).toBe("HTTP 502");
  });

  it("keeps big integers as strings end to end", async () => {
    vi.stubGlobal("fetch", () =>
      Promise.resolve(
        jsonResponse(200, {
          vars: [
            {
              name: "Big.N",
              domain: [[0, "36028797018963968"]],
              status: "open",
              value: null,
            },
          ],
          remaining: "9007199254740993",
          exact: true,
        }),
      ),
    );
    const c = new Client();
    const view = await (c as unknown as {
      getModel(id: string): Promise<{ remaining: string; vars: { domain: [unknown, unknown][] }[] }>;
    }).getModel("m");
    expect(view.remaining).toBe("9007199254740993");
    expect(view.vars[0].domain[0][1]).toBe("36028797018963968");
  });
});
