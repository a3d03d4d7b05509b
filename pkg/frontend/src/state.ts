// Panel view state and its derived request bodies. The display is a pure
// function of this state: rebuilding the same state issues byte-identical
// requests, so a refresh reproduces the identical screen.

import { Mask, maskToSchema } from "./masks.js";

export type NearViewMode = "render" | "dpc";

export interface RoiState {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  width: number;
  nLines: number;
}

export interface ViewState {
  datasetId: string | null;
  mask: Mask;
  mode: NearViewMode;
  minCounts: number;
  bin: number;
  roi: RoiState | null;
}

export function initialState(): ViewState {
  return {
    datasetId: null,
    mask: { kind: "half_plane", angle: 0, offset: 0 },
    mode: "render",
    minCounts: 10,
    bin: 1,
    roi: null,
  };
}

export function renderRequestBody(state: ViewState) {
  return { mask: maskToSchema(state.mask), bin: state.bin };
}

export function dpcRequestBody(state: ViewState) {
  // mask_b omitted: the server uses the complement, matching the CLI default
  return {
    mask_a: maskToSchema(state.mask),
    min_counts: state.minCounts,
    bin: state.bin,
  };
}

export function visibilityRequestBody(state: ViewState, mask: Mask) {
  if (!state.roi) {
    throw new Error("no ROI drawn");
  }
  const { x0, y0, x1, y1, width, nLines } = state.roi;
  return {
    mask: maskToSchema(mask),
    roi: { x0, y0, x1, y1, width },
    n_lines: nLines,
    bin: state.bin,
  };
}

export interface ExportBundle {
  endpoint: string;
  request: unknown;
  response: unknown;
}

/**
 * The export action downloads the exact server payload with the request that
 * produced it, so a render can be reproduced (or diffed against the CLI)
 * outside the browser.
 */
export function exportBundle(endpoint: string, request: unknown,
                             response: unknown): string {
  const bundle: ExportBundle = { endpoint, request, response };
  return JSON.stringify(bundle, null, 2);
}
