import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, RequestSuperseded } from "../src/api";
import { ApiError } from "../src/types";

interface PendingCall {
  url: string;
  init: RequestInit | undefined;
  resolve: (response: Response) => void;
  reject: (reason: unknown) => void;
}

function controllableFetch() {
  const calls: PendingCall[] = [];
  const mock = vi.fn(
    (url: string, init?: RequestInit) =>
      new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () =>
          reject(new DOMException("aborted", "AbortError")),
        );
        calls.push({ url, init, resolve, reject });
      }),
  );
  vi.stubGlobal("fetch", mock);
  return calls;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient.infer", () => {
  it("posts the scenario wire format", async () => {
    const calls = controllableFetch();
    const client = new ApiClient();
    const pending = client.infer("working", { CommentRatio: 0.2517 });
    expect(calls[0].url).toBe("/api/infer");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      name: "working",
      evidence: { CommentRatio: 0.2517 },
    });
    calls[0].resolve(jsonResponse({ posteriors: {} }));
    await expect(pending).resolves.toEqual({ posteriors: {} });
  });

  it("cancels the in-flight request when a newer edit arrives", async () => {
    const calls = controllableFetch();
    const client = new ApiClient();
    const first = client.infer("working", { AvgModuleSize: 10 });
    expect(calls[0].init?.signal?.aborted).toBe(false);
    const second = client.infer("working", { AvgModuleSize: 20 });
    expect(calls[0].init?.signal?.aborted).toBe(true);
    await expect(first).rejects.toBeInstanceOf(RequestSuperseded);
    calls[1].resolve(jsonResponse({ posteriors: { A: [1] } }));
    await expect(second).resolves.toEqual({ posteriors: { A: [1] } });
  });

  it.each([
    [400, "evidence for 'X' must be a state label or a number"],
    [404, "unknown node 'Nope'"],
    [409, "evidence has probability zero"],
  ])("maps HTTP %i to an ApiError with the server message", async (status, message) => {
    const calls = controllableFetch();
    const client = new ApiClient();
    const pending = client.infer("working", {});
    calls[0].resolve(jsonResponse({ error: message }, status));
    const err = (await pending.catch((e) => e)) as ApiError;
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(status);
    expect(err.message).toBe(message);
  });
});

describe("ApiClient.mpe", () => {
  it("sends evidence plus the restriction list", async () => {
    const calls = controllableFetch();
    const client = new ApiClient();
    const pending = client.mpe({ ChangeEffort: "[3.9,11.7375)" }, ["CommentRatio"]);
    expect(calls[0].url).toBe("/api/mpe");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      evidence: { ChangeEffort: "[3.9,11.7375)" },
      restrictTo: ["CommentRatio"],
    });
    calls[0].resolve(jsonResponse({ assignment: {}, jointProbability: 0.5 }));
    await expect(pending).resolves.toEqual({ assignment: {}, jointProbability: 0.5 });
  });
});

describe("ApiClient.network", () => {
  it("fetches and returns the network", async () => {
    const calls = controllableFetch();
    const client = new ApiClient();
    const pending = client.network();
    expect(calls[0].url).toBe("/api/network");
    calls[0].resolve(jsonResponse({ name: "cm1", nodes: [] }));
    await expect(pending).resolves.toEqual({ name: "cm1", nodes: [] });
  });
});
