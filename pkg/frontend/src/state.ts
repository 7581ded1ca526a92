import type {
  Evidence,
  EvidenceValue,
  InferResponse,
  NetworkNode,
  NetworkView,
} from "./types";

export type ScenarioKind = "baseline" | "working";

export interface ExplainView {
  target: string;
  state: string;
  assignment: Record<string, string>;
  jointProbability: number;
  unreachable: boolean;
}

/**
 * UI state: one fixed baseline (no observations) and one editable working
 * scenario, plus the last inference response of each.  The baseline never
 * changes after the initial load; switching which scenario is highlighted
 * re-renders but never re-infers.
 */
export interface StudioState {
  network: NetworkView | null;
  working: Evidence;
  responses: Record<ScenarioKind, InferResponse | null>;
  active: ScenarioKind;
  inputErrors: Record<string, string>;
  requestError: string | null;
  explain: ExplainView | null;
}

export function initialState(): StudioState {
  return {
    network: null,
    working: {},
    responses: { baseline: null, working: null },
    active: "working",
    inputErrors: {},
    requestError: null,
    explain: null,
  };
}

export interface NodeGroups {
  facts: NetworkNode[];
  activities: NetworkNode[];
  indicators: NetworkNode[];
}

export function groupNodes(network: NetworkView): NodeGroups {
  return {
    facts: network.nodes.filter((n) => n.kind === "fact"),
    activities: network.nodes.filter((n) => n.kind === "activity"),
    indicators: network.nodes.filter((n) => n.kind === "indicator"),
  };
}

/** Indicator nodes whose single parent is a fact node. */
export function factIndicatorIds(network: NetworkView): string[] {
  const kinds = new Map(network.nodes.map((n) => [n.id, n.kind]));
  return network.nodes
    .filter((n) => n.kind === "indicator" && kinds.get(n.parents[0] ?? "") === "fact")
    .map((n) => n.id);
}

export type Validation =
  | { ok: true; value: EvidenceValue }
  | { ok: false; message: string };

/**
 * Validate one observation before it may reach the server.  Indicators
 * take finite numbers within their interval range; ranked nodes take one
 * of their state labels.
 */
export function validateObservation(
  network: NetworkView,
  nodeId: string,
  raw: string,
): Validation {
  const node = network.nodes.find((n) => n.id === nodeId);
  if (!node) return { ok: false, message: `unknown node ${nodeId}` };
  const text = raw.trim();
  if (text === "") return { ok: false, message: "enter a value" };
  if (node.kind === "indicator" && node.bounds) {
    const value = Number(text);
    if (!Number.isFinite(value)) {
      return { ok: false, message: `${node.id} takes a number` };
    }
    const lo = node.bounds[0];
    const hi = node.bounds[node.bounds.length - 1];
    if (value < lo || value > hi) {
      return { ok: false, message: `value must be within [${lo}, ${hi}]` };
    }
    return { ok: true, value };
  }
  if (!node.states.includes(text)) {
    return { ok: false, message: `pick one of: ${node.states.join(", ")}` };
  }
  return { ok: true, value: text };
}

export interface EditOutcome {
  state: StudioState;
  /** True when the working evidence changed and an inference should run. */
  shouldInfer: boolean;
}

/** Apply one observation edit; invalid input surfaces inline and is never sent. */
export function applyObservation(
  state: StudioState,
  nodeId: string,
  raw: string,
): EditOutcome {
  if (!state.network) return { state, shouldInfer: false };
  const checked = validateObservation(state.network, nodeId, raw);
  if (!checked.ok) {
    return {
      state: {
        ...state,
        inputErrors: { ...state.inputErrors, [nodeId]: checked.message },
      },
      shouldInfer: false,
    };
  }
  const errors = { ...state.inputErrors };
  delete errors[nodeId];
  const working = { ...state.working, [nodeId]: checked.value };
  return {
    state: { ...state, working, inputErrors: errors },
    shouldInfer: true,
  };
}

export function clearObservation(state: StudioState, nodeId: string): EditOutcome {
  if (!(nodeId in state.working) && !(nodeId in state.inputErrors)) {
    return { state, shouldInfer: false };
  }
  const working = { ...state.working };
  const changed = nodeId in working;
  delete working[nodeId];
  const errors = { ...state.inputErrors };
  delete errors[nodeId];
  return { state: { ...state, working, inputErrors: errors }, shouldInfer: changed };
}

export function clearAllObservations(state: StudioState): EditOutcome {
  const changed = Object.keys(state.working).length > 0;
  return {
    state: { ...state, working: {}, inputErrors: {} },
    shouldInfer: changed,
  };
}

/** Highlight the other scenario; rendering only, never triggers inference. */
export function setActiveScenario(state: StudioState, kind: ScenarioKind): EditOutcome {
  return { state: { ...state, active: kind }, shouldInfer: false };
}

export function applyResponse(
  state: StudioState,
  kind: ScenarioKind,
  response: InferResponse,
): StudioState {
  return {
    ...state,
    responses: { ...state.responses, [kind]: response },
    requestError: null,
  };
}

/** A failed request surfaces inline; entered evidence is never dropped. */
export function setRequestError(state: StudioState, message: string): StudioState {
  return { ...state, requestError: message };
}

export function applyExplain(state: StudioState, view: ExplainView): StudioState {
  return { ...state, explain: view };
}

/**
 * The working scenario with no observations shows the baseline response,
 * so clearing everything makes both scenarios agree everywhere.
 */
export function effectiveResponse(
  state: StudioState,
  kind: ScenarioKind,
): InferResponse | null {
  if (kind === "working" && Object.keys(state.working).length === 0) {
    return state.responses.baseline;
  }
  return state.responses[kind];
}
