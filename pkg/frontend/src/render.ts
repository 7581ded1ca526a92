import { effectiveResponse, groupNodes } from "./state";
import type { ScenarioKind, StudioState } from "./state";
import type { InferResponse, NetworkNode } from "./types";

/**
 * Numbers shown in the UI are the API's numbers, never recomputed or
 * rounded: String() of a parsed JSON double is its shortest lossless form.
 */
export function displayNumber(value: number): string {
  return String(value);
}

export interface Handlers {
  onObserve(nodeId: string, raw: string): void;
  onClear(nodeId: string): void;
  onClearAll(): void;
  onScenarioSwitch(kind: ScenarioKind): void;
  onExplain(target: string, stateLabel: string): void;
}

const SCENARIO_LABELS: Record<ScenarioKind, string> = {
  baseline: "baseline (no observations)",
  working: "working scenario",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function posteriorRows(
  node: NetworkNode,
  baseline: InferResponse | null,
  working: InferResponse | null,
): HTMLElement {
  const table = el("div", "posteriors");
  node.states.forEach((label, index) => {
    const row = el("div", "state-row");
    row.appendChild(el("span", "state-label", label));
    const bars = el("div", "bars");
    for (const [kind, response] of [
      ["baseline", baseline],
      ["working", working],
    ] as const) {
      const probability = response?.posteriors[node.id]?.[index];
      const bar = el("div", `bar bar-${kind}`);
      const fill = el("div", "bar-fill");
      if (probability !== undefined) {
        fill.style.width = `${probability * 100}%`;
      }
      bar.appendChild(fill);
      const value = el("span", `posterior-value value-${kind}`);
      value.dataset.node = node.id;
      value.dataset.state = label;
      value.textContent = probability === undefined ? "" : displayNumber(probability);
      bars.appendChild(bar);
      bars.appendChild(value);
      bar.title = value.textContent ?? "";
    }
    row.appendChild(bars);
    table.appendChild(row);
  });
  return table;
}

function momentsReadout(
  node: NetworkNode,
  baseline: InferResponse | null,
  working: InferResponse | null,
): HTMLElement {
  const box = el("div", "moments");
  for (const [kind, response] of [
    ["baseline", baseline],
    ["working", working],
  ] as const) {
    const moments = response?.moments[node.id];
    const line = el("div", `moment moment-${kind}`);
    line.appendChild(el("span", "moment-kind", kind));
    const mean = el("span", "moment-mean");
    mean.dataset.node = node.id;
    mean.dataset.scenario = kind;
    mean.textContent = moments ? displayNumber(moments.mean) : "";
    const sd = el("span", "moment-sd");
    sd.dataset.node = node.id;
    sd.dataset.scenario = kind;
    sd.textContent = moments ? displayNumber(moments.sd) : "";
    line.appendChild(mean);
    line.appendChild(el("span", "moment-pm", "±"));
    line.appendChild(sd);
    box.appendChild(line);
  }
  return box;
}

function observationControls(
  node: NetworkNode,
  state: StudioState,
  handlers: Handlers,
): HTMLElement {
  const controls = el("div", "controls");
  const current = state.working[node.id];
  if (node.kind === "indicator" && node.bounds) {
    const input = el("input", "observe-input") as HTMLInputElement;
    input.type = "text";
    input.placeholder = `${node.bounds[0]} .. ${node.bounds[node.bounds.length - 1]}`;
    input.value = current === undefined ? "" : String(current);
    input.dataset.node = node.id;
    input.addEventListener("change", () => handlers.onObserve(node.id, input.value));
    controls.appendChild(input);
  } else {
    const select = el("select", "observe-select") as HTMLSelectElement;
    select.dataset.node = node.id;
    const blank = el("option", undefined, "(not observed)") as HTMLOptionElement;
    blank.value = "";
    select.appendChild(blank);
    for (const label of node.states) {
      const option = el("option", undefined, label) as HTMLOptionElement;
      option.value = label;
      if (current === label) option.selected = true;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      if (select.value === "") handlers.onClear(node.id);
      else handlers.onObserve(node.id, select.value);
    });
    controls.appendChild(select);
  }
  const clear = el("button", "clear-button", "clear") as HTMLButtonElement;
  clear.addEventListener("click", () => handlers.onClear(node.id));
  controls.appendChild(clear);
  const error = el("div", "inline-error");
  error.dataset.node = node.id;
  const message = state.inputErrors[node.id];
  if (message) error.textContent = message;
  controls.appendChild(error);
  return controls;
}

function nodeCard(
  node: NetworkNode,
  state: StudioState,
  handlers: Handlers,
  baseline: InferResponse | null,
  working: InferResponse | null,
): HTMLElement {
  const card = el("section", `card kind-${node.kind}`);
  card.dataset.node = node.id;
  const title = el("h3", "card-title", node.id);
  if (working?.evidence[node.id]) {
    title.appendChild(el("span", "evidence-badge", ` = ${working.evidence[node.id]}`));
  }
  card.appendChild(title);
  card.appendChild(posteriorRows(node, baseline, working));
  if (node.kind === "indicator") {
    card.appendChild(momentsReadout(node, baseline, working));
  }
  card.appendChild(observationControls(node, state, handlers));
  return card;
}

function explainPanel(state: StudioState, handlers: Handlers): HTMLElement {
  const panel = el("section", "explain-panel");
  panel.appendChild(el("h2", undefined, "Explain a target"));
  const network = state.network!;
  const indicators = network.nodes.filter((n) => n.kind === "indicator");
  const targetSelect = el("select", "explain-target") as HTMLSelectElement;
  for (const node of indicators) {
    const option = el("option", undefined, node.id) as HTMLOptionElement;
    option.value = node.id;
    targetSelect.appendChild(option);
  }
  const stateSelect = el("select", "explain-state") as HTMLSelectElement;
  const fillStates = () => {
    stateSelect.textContent = "";
    const chosen = network.nodes.find((n) => n.id === targetSelect.value);
    for (const label of chosen?.states ?? []) {
      const option = el("option", undefined, label) as HTMLOptionElement;
      option.value = label;
      stateSelect.appendChild(option);
    }
  };
  fillStates();
  targetSelect.addEventListener("change", fillStates);
  const run = el("button", "explain-run", "explain") as HTMLButtonElement;
  run.addEventListener("click", () =>
    handlers.onExplain(targetSelect.value, stateSelect.value),
  );
  panel.appendChild(targetSelect);
  panel.appendChild(stateSelect);
  panel.appendChild(run);
  const result = el("div", "explain-result");
  if (state.explain !== null) {
    if (state.explain.unreachable) {
      result.appendChild(el("div", "explain-unreachable", "target unreachable"));
    } else {
      const list = el("dl", "explain-assignment");
      for (const [nodeId, label] of Object.entries(state.explain.assignment)) {
        const term = el("dt", "explain-node", nodeId);
        const value = el("dd", "explain-value", label);
        value.dataset.node = nodeId;
        list.appendChild(term);
        list.appendChild(value);
      }
      result.appendChild(list);
      const probability = el("div", "explain-probability");
      probability.textContent = displayNumber(state.explain.jointProbability);
      result.appendChild(probability);
    }
  }
  panel.appendChild(result);
  return panel;
}

export function render(root: HTMLElement, state: StudioState, handlers: Handlers): void {
  root.textContent = "";
  if (!state.network) {
    root.appendChild(el("p", "loading", "loading network..."));
    return;
  }
  const header = el("header", "top");
  header.appendChild(el("h1", undefined, `qualinet studio: ${state.network.name}`));
  const toggle = el("div", "scenario-toggle");
  for (const kind of ["baseline", "working"] as const) {
    const button = el(
      "button",
      `toggle-${kind}${state.active === kind ? " active" : ""}`,
      SCENARIO_LABELS[kind],
    ) as HTMLButtonElement;
    button.addEventListener("click", () => handlers.onScenarioSwitch(kind));
    toggle.appendChild(button);
  }
  header.appendChild(toggle);
  const clearAll = el("button", "clear-all", "clear all observations") as HTMLButtonElement;
  clearAll.addEventListener("click", () => handlers.onClearAll());
  header.appendChild(clearAll);
  const working = effectiveResponse(state, "working");
  if (working) {
    const p = el("span", "evidence-probability");
    p.textContent = `P(evidence) = ${displayNumber(working.evidenceProbability)}`;
    header.appendChild(p);
  }
  if (state.requestError) {
    header.appendChild(el("div", "request-error", state.requestError));
  }
  root.appendChild(header);

  const baseline = state.responses.baseline;
  const groups = groupNodes(state.network);
  const columns = el("main", "columns");
  for (const [name, nodes] of [
    ["Facts", groups.facts],
    ["Activities", groups.activities],
    ["Indicators", groups.indicators],
  ] as const) {
    const column = el("div", `column column-${name.toLowerCase()}`);
    column.appendChild(el("h2", undefined, name));
    for (const node of nodes) {
      column.appendChild(nodeCard(node, state, handlers, baseline, working));
    }
    columns.appendChild(column);
  }
  root.appendChild(columns);

  for (const warning of working?.warnings ?? []) {
    root.appendChild(el("div", "warning", warning));
  }
  root.appendChild(explainPanel(state, handlers));
}
