/** Thin fetch client for the refocus service. */

export interface RenderParams {
  x?: number;
  y?: number;
  dF?: number;
  k: number;
  previewScale?: number;
}

export interface RenderResult {
  blob: Blob;
  resolvedDf: number;
  renderMillis: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string
  ) {
    super(message);
  }
}

async function raiseApiError(resp: Response): Promise<never> {
  let code = "error";
  let message = `request failed with status ${resp.status}`;
  try {
    const body = await resp.json();
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  async createSession(image: File, disparity: File): Promise<string> {
    const form = new FormData();
    form.append("image", image);
    form.append("disparity", disparity);
    const resp = await fetch(`${this.baseUrl}/sessions`, { method: "POST", body: form });
    if (!resp.ok) await raiseApiError(resp);
    const body = await resp.json();
    return body.id as string;
  }

  async render(sessionId: string, params: RenderParams): Promise<RenderResult> {
    const payload: Record<string, number> = { k: params.k };
    if (params.x !== undefined) payload.x = params.x;
    if (params.y !== undefined) payload.y = params.y;
    if (params.dF !== undefined) payload.d_f = params.dF;
    if (params.previewScale !== undefined) payload.preview_scale = params.previewScale;
    const resp = await fetch(`${this.baseUrl}/sessions/${sessionId}/render`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!resp.ok) await raiseApiError(resp);
    return {
      blob: await resp.blob(),
      resolvedDf: Number(resp.headers.get("x-resolved-df")),
      renderMillis: Number(resp.headers.get("x-render-millis")),
    };
  }

  exportUrl(sessionId: string, k: number, dF: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/export?k=${k}&df=${dF}`;
  }
}
