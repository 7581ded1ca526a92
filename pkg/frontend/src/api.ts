import { ApiError } from "./types";
import type { Evidence, InferResponse, MpeResponse, NetworkView } from "./types";

/** Thrown internally when a newer edit cancels an in-flight inference. */
export class RequestSuperseded extends Error {
  constructor() {
    super("request superseded by a newer edit");
    this.name = "RequestSuperseded";
  }
}

async function readError(response: Response): Promise<ApiError> {
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(response.status, message);
}

/**
 * Client for the inference API.  At most one inference request is in
 * flight: issuing a new one aborts its predecessor, so stale responses
 * can never overwrite newer state.
 */
export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(private readonly base: string = "") {}

  async network(): Promise<NetworkView> {
    const response = await fetch(`${this.base}/api/network`);
    if (!response.ok) throw await readError(response);
    return (await response.json()) as NetworkView;
  }

  async infer(name: string | null, evidence: Evidence): Promise<InferResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    let response: Response;
    try {
      response = await fetch(`${this.base}/api/infer`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ name, evidence }),
        signal: controller.signal,
      });
    } catch (err) {
      if (controller.signal.aborted) throw new RequestSuperseded();
      throw err;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
    if (!response.ok) throw await readError(response);
    return (await response.json()) as InferResponse;
  }

  async mpe(evidence: Evidence, restrictTo: string[]): Promise<MpeResponse> {
    const response = await fetch(`${this.base}/api/mpe`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ evidence, restrictTo }),
    });
    if (!response.ok) throw await readError(response);
    return (await response.json()) as MpeResponse;
  }
}
