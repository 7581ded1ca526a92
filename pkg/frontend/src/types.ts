/** Wire types of the qualinet HTTP API. */

export type NodeKind = "activity" | "fact" | "indicator";

export interface NetworkNode {
  id: string;
  kind: NodeKind;
  states: string[];
  bounds?: number[];
  parents: string[];
  cpt: number[];
}

export interface NetworkView {
  name: string;
  nodes: NetworkNode[];
}

export interface Moments {
  mean: number;
  sd: number;
}

export interface InferResponse {
  scenario: string | null;
  evidence: Record<string, string>;
  evidenceProbability: number;
  posteriors: Record<string, number[]>;
  moments: Record<string, Moments>;
  warnings: string[];
}

export interface MpeResponse {
  assignment: Record<string, string>;
  jointProbability: number;
}

/** Evidence as entered: state label for ranked nodes, number for indicators. */
export type EvidenceValue = number | string;
export type Evidence = Record<string, EvidenceValue>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}
