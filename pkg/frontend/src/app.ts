import { ApiClient } from "./api";
import { RefocusController } from "./controller";
import { K_MAX, K_MIN, ViewState } from "./state";

/** Element ids the page must provide. */
export interface AppElements {
  imageInput: HTMLInputElement;
  disparityInput: HTMLInputElement;
  uploadButton: HTMLButtonElement;
  viewer: HTMLImageElement;
  slider: HTMLInputElement;
  kReadout: HTMLElement;
  dfReadout: HTMLElement;
  latencyReadout: HTMLElement;
  compareButton: HTMLButtonElement;
  errorBox: HTMLElement;
  retryButton: HTMLButtonElement;
  exportLink: HTMLAnchorElement;
}

function grab(doc: Document, id: string): HTMLElement {
  const el = doc.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export function collectElements(doc: Document): AppElements {
  return {
    imageInput: grab(doc, "image-file") as HTMLInputElement,
    disparityInput: grab(doc, "disparity-file") as HTMLInputElement,
    uploadButton: grab(doc, "upload") as HTMLButtonElement,
    viewer: grab(doc, "viewer") as HTMLImageElement,
    slider: grab(doc, "aperture") as HTMLInputElement,
    kReadout: grab(doc, "k-readout"),
    dfReadout: grab(doc, "df-readout"),
    latencyReadout: grab(doc, "latency-readout"),
    compareButton: grab(doc, "compare") as HTMLButtonElement,
    errorBox: grab(doc, "error"),
    retryButton: grab(doc, "retry") as HTMLButtonElement,
    exportLink: grab(doc, "export") as HTMLAnchorElement,
  };
}

/** Wire the controller to the DOM; returns the controller for scripting. */
export function initApp(doc: Document, api: ApiClient): RefocusController {
  const els = collectElements(doc);
  let originalUrl: string | null = null;
  let renderedUrl: string | null = null;
  let lastRenderedBlob: Blob | null = null;

  const view = (state: ViewState): void => {
    if (state.rendered && state.rendered !== lastRenderedBlob) {
      if (renderedUrl) URL.revokeObjectURL(renderedUrl);
      renderedUrl = URL.createObjectURL(state.rendered);
      lastRenderedBlob = state.rendered;
    }
    const showOriginal = state.compareOriginal || !renderedUrl;
    const src = showOriginal ? originalUrl : renderedUrl;
    if (src && els.viewer.src !== src) els.viewer.src = src;

    els.kReadout.textContent = state.k.toFixed(0);
    els.dfReadout.textContent = state.resolvedDf === null ? "-" : state.resolvedDf.toFixed(4);
    els.latencyReadout.textContent =
      state.renderMillis === null ? "-" : `${state.renderMillis.toFixed(0)} ms`;
    els.errorBox.textContent = state.error ?? "";
    els.retryButton.hidden = !state.canRetry;
    els.compareButton.textContent = state.compareOriginal ? "show render" : "show original";

    const busy = state.status === "uploading";
    els.uploadButton.disabled = busy || !els.imageInput.files?.length
      || !els.disparityInput.files?.length;
    const interactive = state.sessionId !== null && !busy;
    els.slider.disabled = !interactive;
    els.compareButton.disabled = !interactive || !renderedUrl;
    if (state.sessionId && state.resolvedDf !== null) {
      els.exportLink.href = api.exportUrl(state.sessionId, state.k, state.resolvedDf);
      els.exportLink.hidden = false;
    } else {
      els.exportLink.hidden = true;
    }
  };

  const controller = new RefocusController(api, view);

  const refreshUploadButton = (): void => {
    els.uploadButton.disabled = !els.imageInput.files?.length
      || !els.disparityInput.files?.length;
  };
  els.imageInput.addEventListener("change", refreshUploadButton);
  els.disparityInput.addEventListener("change", refreshUploadButton);

  els.uploadButton.addEventListener("click", () => {
    const image = els.imageInput.files?.[0] ?? null;
    if (image) {
      if (originalUrl) URL.revokeObjectURL(originalUrl);
      originalUrl = URL.createObjectURL(image);
      els.viewer.src = originalUrl;
    }
    void controller.uploadFlow(image, els.disparityInput.files?.[0] ?? null);
  });

  els.retryButton.addEventListener("click", () => {
    void controller.retryUpload();
  });

  els.viewer.addEventListener("click", (ev: MouseEvent) => {
    const rect = els.viewer.getBoundingClientRect();
    if (rect.width === 0 || rect.height === 0) return;
    const w = els.viewer.naturalWidth || rect.width;
    const h = els.viewer.naturalHeight || rect.height;
    controller.clickToFocus(ev.clientX, ev.clientY, rect, w, h);
  });

  els.slider.min = String(K_MIN);
  els.slider.max = String(K_MAX);
  els.slider.addEventListener("input", () => {
    controller.setAperture(Number(els.slider.value));
  });

  els.compareButton.addEventListener("click", () => controller.toggleCompare());

  view(controller.state);
  return controller;
}
