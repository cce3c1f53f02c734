import { ApiClient, ApiError } from "./api";
import { DisplayRect, displayToImage } from "./coords";
import { debounce } from "./debounce";
import { clampK, initialState, SLIDER_DEBOUNCE_MS, ViewState } from "./state";
import { LatestOnly } from "./supersession";

/**
 * Drives the refocus loop: upload -> click to focus -> aperture sweeps.
 *
 * Clicks render immediately; slider changes are debounced. Every render takes
 * a supersession ticket, so under rapid interaction only the response to the
 * newest request is ever displayed; stale responses are dropped silently.
 */
export class RefocusController {
  state: ViewState = initialState();

  private gate = new LatestOnly();
  private lastUpload: { image: File; disparity: File } | null = null;
  private debouncedRender: { (): void; cancel(): void };

  constructor(
    private api: ApiClient,
    private onChange: (state: ViewState) => void,
    debounceMs: number = SLIDER_DEBOUNCE_MS
  ) {
    this.debouncedRender = debounce(() => {
      void this.issueRender();
    }, debounceMs);
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async uploadFlow(image: File | null, disparity: File | null): Promise<void> {
    if (!image || !disparity) {
      this.update({ error: "select both an image and a disparity map", canRetry: false });
      return;
    }
    this.lastUpload = { image, disparity };
    this.update({ status: "uploading", error: null, canRetry: false });
    try {
      const sessionId = await this.api.createSession(image, disparity);
      this.update({
        sessionId,
        status: "ready",
        rendered: null,
        lastClick: null,
        resolvedDf: null,
        renderMillis: null,
        error: null,
        canRetry: false,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        // server rejected the pair (e.g. dimension mismatch): show inline
        this.update({ status: "idle", error: err.message, canRetry: false });
      } else {
        this.update({ status: "idle", error: "network failure during upload", canRetry: true });
      }
    }
  }

  /** Re-run the last failed upload (network-failure affordance). */
  async retryUpload(): Promise<void> {
    if (this.lastUpload) {
      await this.uploadFlow(this.lastUpload.image, this.lastUpload.disparity);
    }
  }

  /** Click-to-focus: map display coords to image pixels and render now. */
  clickToFocus(
    clientX: number,
    clientY: number,
    rect: DisplayRect,
    imageWidth: number,
    imageHeight: number
  ): void {
    if (!this.state.sessionId) return;
    const point = displayToImage(clientX, clientY, rect, imageWidth, imageHeight);
    this.update({ lastClick: point });
    this.debouncedRender.cancel(); // a click always outranks a pending slider render
    void this.issueRender();
  }

  /** Aperture slider: clamp, store, and render (debounced) once focus exists. */
  setAperture(k: number): void {
    this.update({ k: clampK(k) });
    if (this.state.sessionId && this.state.lastClick) {
      this.debouncedRender();
    }
  }

  toggleCompare(): void {
    this.update({ compareOriginal: !this.state.compareOriginal });
  }

  private async issueRender(): Promise<void> {
    const { sessionId, lastClick, k } = this.state;
    if (!sessionId || !lastClick) return;
    const ticket = this.gate.take();
    this.update({ status: "rendering" });
    try {
      const result = await this.api.render(sessionId, { x: lastClick.x, y: lastClick.y, k });
      if (!this.gate.isCurrent(ticket)) return; // superseded: discard silently
      this.update({
        rendered: result.blob,
        resolvedDf: result.resolvedDf,
        renderMillis: result.renderMillis,
        status: "ready",
        error: null,
      });
    } catch (err) {
      if (!this.gate.isCurrent(ticket)) return;
      const message = err instanceof ApiError ? err.message : "network failure during render";
      this.update({ status: "ready", error: message });
    }
  }
}
