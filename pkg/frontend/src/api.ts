// Typed client for the aperture service. Every panel funnels its requests
// through a SingleFlight lane so a newer edit cancels the in-flight render.

export interface DatasetMeta {
  id: string;
  path: string;
  pairs: number;
  exposure: number | null;
  near_region: [number, number, number, number];
  far_region: [number, number, number, number];
  time_bin: number;
}

export interface FramePayload {
  width: number;
  height: number;
  counts_pgm_b64: string;
  total: number;
  max: number;
  selected_pairs: number;
  meta: Record<string, unknown>;
}

export interface RegisteredDataset extends DatasetMeta {
  far_occupancy: FramePayload;
}

export interface DpcPayload {
  width: number;
  height: number;
  values_b64: string;
  valid_b64: string;
  selected_pairs: [number, number];
  meta: Record<string, unknown>;
}

export interface VisibilityPayload {
  v: number;
  i_max_bar: number;
  i_min_bar: number;
  roi: { x0: number; y0: number; x1: number; y1: number; width: number };
  profile: number[];
  peak_positions: number[];
  trough_positions: number[];
}

export interface ServerError {
  status: number;
  body: unknown;          // surfaced verbatim in the UI
  request: RequestRecord; // the failing request, shown next to the error
}

export interface RequestRecord {
  method: string;
  url: string;
  body?: unknown;
}

export class ApiError extends Error implements ServerError {
  status: number;
  body: unknown;
  request: RequestRecord;

  constructor(status: number, body: unknown, request: RequestRecord) {
    super(`HTTP ${status} for ${request.method} ${request.url}`);
    this.status = status;
    this.body = body;
    this.request = request;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  baseUrl: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown,
                           signal?: AbortSignal): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    const record: RequestRecord = { method, url, body };
    const init: RequestInit = { method, signal };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const resp = await this.fetchImpl(url, init);
    const text = await resp.text();
    let parsed: unknown;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = text;
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, parsed, record);
    }
    return parsed as T;
  }

  listDatasets(signal?: AbortSignal): Promise<DatasetMeta[]> {
    return this.request("GET", "/datasets", undefined, signal);
  }

  registerDataset(path: string, signal?: AbortSignal): Promise<RegisteredDataset> {
    return this.request("POST", "/datasets", { path }, signal);
  }

  occupancy(id: string, signal?: AbortSignal): Promise<FramePayload> {
    return this.request("GET", `/datasets/${id}/occupancy`, undefined, signal);
  }

  render(id: string, body: { mask: unknown; bin?: number },
         signal?: AbortSignal): Promise<FramePayload> {
    return this.request("POST", `/datasets/${id}/render`, body, signal);
  }

  dpc(id: string,
      body: { mask_a: unknown; mask_b?: unknown; min_counts?: number; bin?: number },
      signal?: AbortSignal): Promise<DpcPayload> {
    return this.request("POST", `/datasets/${id}/dpc`, body, signal);
  }

  visibility(id: string,
             body: { mask: unknown; roi: unknown; n_lines?: number; bin?: number },
             signal?: AbortSignal): Promise<VisibilityPayload> {
    return this.request("POST", `/datasets/${id}/visibility`, body, signal);
  }
}

/**
 * One in-flight request per panel: issuing a new request aborts the previous
 * one, and stale responses never resolve to the caller.
 */
export class SingleFlight {
  private controller: AbortController | null = null;
  private generation = 0;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const gen = ++this.generation;
    const result = await task(controller.signal);
    if (gen !== this.generation) {
      throw new DOMException("superseded by a newer request", "AbortError");
    }
    return result;
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
    this.generation++;
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
