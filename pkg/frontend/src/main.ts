import { ApiClient, RequestSuperseded } from "./api";
import { render } from "./render";
import type { Handlers } from "./render";
import {
  applyExplain,
  applyObservation,
  applyResponse,
  clearAllObservations,
  clearObservation,
  factIndicatorIds,
  initialState,
  setActiveScenario,
  setRequestError,
} from "./state";
import type { StudioState } from "./state";
import { ApiError } from "./types";
import "./style.css";

const api = new ApiClient();
const root = document.getElementById("app") as HTMLElement;
let state: StudioState = initialState();

function update(next: StudioState): void {
  state = next;
  render(root, state, handlers);
}

async function inferWorking(): Promise<void> {
  try {
    const response = await api.infer("working", state.working);
    update(applyResponse(state, "working", response));
  } catch (err) {
    if (err instanceof RequestSuperseded) return;
    const message = err instanceof ApiError ? err.message : String(err);
    update(setRequestError(state, message));
  }
}

const handlers: Handlers = {
  onObserve(nodeId, raw) {
    const outcome = applyObservation(state, nodeId, raw);
    update(outcome.state);
    if (outcome.shouldInfer) void inferWorking();
  },
  onClear(nodeId) {
    const outcome = clearObservation(state, nodeId);
    update(outcome.state);
    if (outcome.shouldInfer) void inferWorking();
  },
  onClearAll() {
    const outcome = clearAllObservations(state);
    update(outcome.state);
    // With no observations the working panel falls back to the baseline
    // response, so no request is needed.
  },
  onScenarioSwitch(kind) {
    update(setActiveScenario(state, kind).state);
  },
  async onExplain(target, stateLabel) {
    if (!state.network) return;
    try {
      const result = await api.mpe(
        { ...state.working, [target]: stateLabel },
        factIndicatorIds(state.network),
      );
      update(
        applyExplain(state, {
          target,
          state: stateLabel,
          assignment: result.assignment,
          jointProbability: result.jointProbability,
          unreachable: false,
        }),
      );
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        update(
          applyExplain(state, {
            target,
            state: stateLabel,
            assignment: {},
            jointProbability: 0,
            unreachable: true,
          }),
        );
        return;
      }
      const message = err instanceof ApiError ? err.message : String(err);
      update(setRequestError(state, message));
    }
  },
};

async function bootstrap(): Promise<void> {
  render(root, state, handlers);
  try {
    const network = await api.network();
    update({ ...state, network });
    const baseline = await api.infer("baseline", {});
    update(applyResponse(state, "baseline", baseline));
  } catch (err) {
    const message = err instanceof ApiError ? err.message : String(err);
    update(setRequestError(state, message));
  }
}

void bootstrap();
