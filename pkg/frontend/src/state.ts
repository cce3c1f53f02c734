import { ImagePoint } from "./coords";

export const K_MIN = 0;
export const K_MAX = 64;
export const SLIDER_DEBOUNCE_MS = 150;

export type Status = "idle" | "uploading" | "ready" | "rendering";

/** Everything the view renders; updated immutably so changes are replayable. */
export interface ViewState {
  sessionId: string | null;
  /** Last accepted render payload (stale responses never land here). */
  rendered: Blob | null;
  lastClick: ImagePoint | null;
  k: number;
  resolvedDf: number | null;
  renderMillis: number | null;
  /** When true the view shows the uploaded original instead of the render. */
  compareOriginal: boolean;
  status: Status;
  error: string | null;
  canRetry: boolean;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    rendered: null,
    lastClick: null,
    k: 16,
    resolvedDf: null,
    renderMillis: null,
    compareOriginal: false,
    status: "idle",
    error: null,
    canRetry: false,
  };
}

export function clampK(k: number): number {
  if (Number.isNaN(k)) return K_MIN;
  return Math.min(Math.max(k, K_MIN), K_MAX);
}
