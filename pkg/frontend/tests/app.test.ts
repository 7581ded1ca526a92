// Integration test of the app wiring: bootstrap, evidence edits, scenario
// switching, clearing, and backward explanation against a stubbed API.
import { beforeAll, describe, expect, it, vi } from "vitest";

import networkFixture from "../src/fixtures/network.json";
import baselineFixture from "../src/fixtures/infer_baseline.json";
import measuredFixture from "../src/fixtures/scenario_measured.json";
import explainFixture from "../src/fixtures/explain.json";

interface Call {
  url: string;
  body: unknown;
}

const calls: Call[] = [];

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function router(url: string, init?: RequestInit): Response {
  const body = init?.body ? JSON.parse(init.body as string) : undefined;
  calls.push({ url, body });
  if (url === "/api/network") return jsonResponse(networkFixture);
  if (url === "/api/infer") {
    const evidence = (body as { evidence: Record<string, unknown> }).evidence;
    return jsonResponse(
      Object.keys(evidence).length === 0 ? baselineFixture : measuredFixture,
    );
  }
  if (url === "/api/mpe") {
    return jsonResponse({
      assignment: explainFixture.assignment,
      jointProbability: explainFixture.jointProbability,
    });
  }
  return jsonResponse({ error: `unexpected ${url}` }, 500);
}

async function flush(): Promise<void> {
  for (let i = 0; i < 6; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function inferCalls(): Call[] {
  return calls.filter((c) => c.url === "/api/infer");
}

beforeAll(async () => {
  vi.stubGlobal("fetch", vi.fn(router));
  document.body.innerHTML = '<div id="app"></div>';
  await import("../src/main");
  await flush();
});

describe("application wiring", () => {
  it("bootstraps with the network and one baseline inference", () => {
    expect(calls[0].url).toBe("/api/network");
    expect(inferCalls()).toHaveLength(1);
    expect(inferCalls()[0].body).toEqual({ name: "baseline", evidence: {} });
    expect(document.querySelector(".card[data-node='ChangeEffort']")).toBeTruthy();
  });

  it("runs inference when a valid observation is entered", async () => {
    const input = document.querySelector(
      ".observe-input[data-node='CommentRatio']",
    ) as HTMLInputElement;
    input.value = "0.2517";
    input.dispatchEvent(new Event("change"));
    await flush();
    const latest = inferCalls().at(-1)!;
    expect(latest.body).toEqual({
      name: "working",
      evidence: { CommentRatio: 0.2517 },
    });
    const mean = document.querySelector(
      ".moment-mean[data-node='ChangeEffort'][data-scenario='working']",
    );
    expect(Number(mean?.textContent)).toBe(
      (measuredFixture as { moments: Record<string, { mean: number }> }).moments[
        "ChangeEffort"
      ].mean,
    );
  });

  it("does not infer when switching the highlighted scenario", async () => {
    const before = inferCalls().length;
    (document.querySelector(".toggle-baseline") as HTMLButtonElement).click();
    (document.querySelector(".toggle-working") as HTMLButtonElement).click();
    await flush();
    expect(inferCalls().length).toBe(before);
  });

  it("rejects invalid input locally without any request", async () => {
    const before = inferCalls().length;
    const input = document.querySelector(
      ".observe-input[data-node='AvgModuleSize']",
    ) as HTMLInputElement;
    input.value = "-5";
    input.dispatchEvent(new Event("change"));
    await flush();
    expect(inferCalls().length).toBe(before);
    const error = document.querySelector(".inline-error[data-node='AvgModuleSize']");
    expect(error?.textContent).toMatch(/within/);
    // The previously entered evidence survives the bad edit.
    const kept = document.querySelector(
      ".observe-input[data-node='CommentRatio']",
    ) as HTMLInputElement;
    expect(kept.value).toBe("0.2517");
  });

  it("clears all observations without re-inferring and falls back to baseline", async () => {
    const before = inferCalls().length;
    (document.querySelector(".clear-all") as HTMLButtonElement).click();
    await flush();
    expect(inferCalls().length).toBe(before);
    const mean = document.querySelector(
      ".moment-mean[data-node='ChangeEffort'][data-scenario='working']",
    );
    expect(Number(mean?.textContent)).toBe(
      (baselineFixture as { moments: Record<string, { mean: number }> }).moments[
        "ChangeEffort"
      ].mean,
    );
  });

  it("explains a goal through /api/mpe restricted to the fact indicators", async () => {
    (document.querySelector(".explain-run") as HTMLButtonElement).click();
    await flush();
    const mpeCall = calls.filter((c) => c.url === "/api/mpe").at(-1)!;
    expect((mpeCall.body as { restrictTo: string[] }).restrictTo).toEqual([
      "AvgModuleSize",
      "AvgCyclomaticComplexity",
      "CommentRatio",
    ]);
    const values = [...document.querySelectorAll(".explain-value")].map(
      (el) => el.textContent,
    );
    expect(values).toEqual(Object.values(explainFixture.assignment));
  });
});
