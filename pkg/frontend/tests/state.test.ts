import { describe, expect, it } from "vitest";

import {
  applyObservation,
  applyResponse,
  clearAllObservations,
  clearObservation,
  effectiveResponse,
  factIndicatorIds,
  groupNodes,
  initialState,
  setActiveScenario,
  validateObservation,
} from "../src/state";
import type { StudioState } from "../src/state";
import type { InferResponse, NetworkView } from "../src/types";

import networkFixture from "../src/fixtures/network.json";
import baselineFixture from "../src/fixtures/infer_baseline.json";
import measuredFixture from "../src/fixtures/scenario_measured.json";

const network = networkFixture as unknown as NetworkView;
const baseline = baselineFixture as unknown as InferResponse;
const measured = measuredFixture as unknown as InferResponse;

function loadedState(): StudioState {
  return applyResponse({ ...initialState(), network }, "baseline", baseline);
}

describe("network grouping", () => {
  it("splits nodes into the three display columns", () => {
    const groups = groupNodes(network);
    expect(groups.facts.map((n) => n.id)).toEqual([
      "Module.Extent",
      "Implementation.Regularity",
      "Comment.Appropriateness",
    ]);
    expect(groups.activities).toHaveLength(8);
    expect(groups.indicators).toHaveLength(4);
  });

  it("identifies the fact indicators", () => {
    expect(factIndicatorIds(network)).toEqual([
      "AvgModuleSize",
      "AvgCyclomaticComplexity",
      "CommentRatio",
    ]);
  });
});

describe("observation validation", () => {
  it("rejects a negative module size with an inline error and no request", () => {
    const state = loadedState();
    const outcome = applyObservation(state, "AvgModuleSize", "-5");
    expect(outcome.shouldInfer).toBe(false);
    expect(outcome.state.inputErrors["AvgModuleSize"]).toMatch(/within \[0, 300\]/);
    expect(outcome.state.working).toEqual({});
  });

  it("rejects values above the indicator range", () => {
    const checked = validateObservation(network, "ChangeEffort", "1000");
    expect(checked.ok).toBe(false);
  });

  it("rejects non-numeric indicator input", () => {
    const checked = validateObservation(network, "AvgModuleSize", "tiny");
    expect(checked).toEqual({ ok: false, message: "AvgModuleSize takes a number" });
  });

  it("accepts a valid measurement and requests inference", () => {
    const outcome = applyObservation(loadedState(), "AvgModuleSize", "33.47");
    expect(outcome.shouldInfer).toBe(true);
    expect(outcome.state.working).toEqual({ AvgModuleSize: 33.47 });
    expect(outcome.state.inputErrors).toEqual({});
  });

  it("accepts ranked state labels only", () => {
    expect(validateObservation(network, "Maintenance", "high")).toEqual({
      ok: true,
      value: "high",
    });
    const bad = validateObservation(network, "Maintenance", "superb");
    expect(bad.ok).toBe(false);
  });

  it("keeps previously entered evidence when a later edit is invalid", () => {
    let state = applyObservation(loadedState(), "CommentRatio", "0.2517").state;
    const outcome = applyObservation(state, "CommentRatio", "9.9");
    expect(outcome.shouldInfer).toBe(false);
    expect(outcome.state.working).toEqual({ CommentRatio: 0.2517 });
    expect(outcome.state.inputErrors["CommentRatio"]).toBeTruthy();
  });
});

describe("scenario handling", () => {
  it("clearing all observations makes working equal baseline everywhere", () => {
    let state = loadedState();
    state = applyObservation(state, "CommentRatio", "0.2517").state;
    state = applyResponse(state, "working", measured);
    expect(effectiveResponse(state, "working")).toBe(measured);

    const cleared = clearAllObservations(state);
    expect(cleared.state.working).toEqual({});
    expect(effectiveResponse(cleared.state, "working")).toBe(baseline);
  });

  it("clearing a single observation flags re-inference only when set", () => {
    let state = applyObservation(loadedState(), "CommentRatio", "0.2517").state;
    const cleared = clearObservation(state, "CommentRatio");
    expect(cleared.shouldInfer).toBe(true);
    expect(clearObservation(cleared.state, "CommentRatio").shouldInfer).toBe(false);
  });

  it("switching the highlighted scenario never triggers inference", () => {
    const state = loadedState();
    expect(setActiveScenario(state, "baseline").shouldInfer).toBe(false);
    expect(setActiveScenario(state, "working").shouldInfer).toBe(false);
    expect(setActiveScenario(state, "baseline").state.active).toBe("baseline");
  });
});
