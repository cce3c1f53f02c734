import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, RenderParams, RenderResult } from "../src/api";
import { RefocusController } from "../src/controller";
import { ViewState } from "../src/state";

/** Scriptable ApiClient stand-in: per-call delays, df derived from (x, y). */
class FakeApi {
  rendered: RenderParams[] = [];
  delays: number[] = [];
  failUploads = 0;
  uploadError: ApiError | null = null;

  async createSession(_image: File, _disparity: File): Promise<string> {
    if (this.uploadError) throw this.uploadError;
    if (this.failUploads > 0) {
      this.failUploads -= 1;
      throw new TypeError("fetch failed");
    }
    return "session-1";
  }

  async render(_sid: string, params: RenderParams): Promise<RenderResult> {
    this.rendered.push(params);
    const delay = this.delays.shift() ?? 0;
    if (delay > 0) await new Promise((resolve) => setTimeout(resolve, delay));
    return {
      blob: new Blob([`render x=${params.x} y=${params.y} k=${params.k}`]),
      resolvedDf: (params.x ?? 0) / 100,
      renderMillis: 5,
    };
  }

  exportUrl(sid: string, k: number, dF: number): string {
    return `/sessions/${sid}/export?k=${k}&df=${dF}`;
  }
}

const rect = { left: 0, top: 0, width: 100, height: 100 };
const file = (name: string) => new File(["x"], name);

function makeController(api: FakeApi) {
  const states: ViewState[] = [];
  const controller = new RefocusController(api as never, (s) => states.push(s), 150);
  return { controller, states };
}

async function flushMicrotasks(): Promise<void> {
  await vi.advanceTimersByTimeAsync(0);
}

describe("RefocusController", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("upload flow establishes a session", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    expect(controller.state.sessionId).toBe("session-1");
    expect(controller.state.status).toBe("ready");
    expect(controller.state.error).toBeNull();
  });

  it("server rejection surfaces inline without retry affordance", async () => {
    const api = new FakeApi();
    api.uploadError = new ApiError(422, "dimension_mismatch", "image is 32x32 but ...");
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    expect(controller.state.sessionId).toBeNull();
    expect(controller.state.error).toContain("image is 32x32");
    expect(controller.state.canRetry).toBe(false);
  });

  it("network failure offers retry and retry succeeds", async () => {
    const api = new FakeApi();
    api.failUploads = 1;
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    expect(controller.state.canRetry).toBe(true);
    await controller.retryUpload();
    expect(controller.state.sessionId).toBe("session-1");
  });

  it("missing disparity file never hits the server", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), null);
    expect(controller.state.sessionId).toBeNull();
    expect(controller.state.error).toContain("disparity");
  });

  it("click renders immediately with the current aperture", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.setAperture(24);
    controller.clickToFocus(40, 70, rect, 100, 100);
    await flushMicrotasks();
    expect(api.rendered).toEqual([{ x: 40, y: 70, k: 24 }]);
    expect(controller.state.resolvedDf).toBeCloseTo(0.4);
    expect(controller.state.renderMillis).toBe(5);
  });

  it("rapid double click displays only the last click, even out of order", async () => {
    const api = new FakeApi();
    api.delays = [200, 10]; // first response lands after the second
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.clickToFocus(10, 10, rect, 100, 100);
    controller.clickToFocus(90, 90, rect, 100, 100);
    await vi.advanceTimersByTimeAsync(300);
    expect(api.rendered.length).toBe(2);
    expect(controller.state.resolvedDf).toBeCloseTo(0.9);
    const text = await controller.state.rendered!.text();
    expect(text).toContain("x=90 y=90");
  });

  it("slider sweep issues one debounced render per settled value", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.clickToFocus(50, 50, rect, 100, 100);
    await flushMicrotasks();
    api.rendered.length = 0;

    for (const k of [8, 16, 24]) {
      controller.setAperture(k);
      await vi.advanceTimersByTimeAsync(200); // past the 150 ms debounce
    }
    expect(api.rendered.map((r) => r.k)).toEqual([8, 16, 24]);
    expect(api.rendered.every((r) => r.x === 50 && r.y === 50)).toBe(true);
    expect(controller.state.resolvedDf).toBeCloseTo(0.5);
  });

  it("rapid slider drag collapses to the final value", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.clickToFocus(50, 50, rect, 100, 100);
    await flushMicrotasks();
    api.rendered.length = 0;

    for (const k of [3, 9, 27, 41]) controller.setAperture(k);
    await vi.advanceTimersByTimeAsync(200);
    expect(api.rendered.map((r) => r.k)).toEqual([41]);
  });

  it("slider bounds are enforced at [0, 64]", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    controller.setAperture(500);
    expect(controller.state.k).toBe(64);
    controller.setAperture(-3);
    expect(controller.state.k).toBe(0);
  });

  it("slider without a chosen focus does not render", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.setAperture(32);
    await vi.advanceTimersByTimeAsync(400);
    expect(api.rendered).toEqual([]);
  });

  it("compare toggle flips without touching the render", async () => {
    const api = new FakeApi();
    const { controller } = makeController(api);
    await controller.uploadFlow(file("i.png"), file("d.png"));
    controller.clickToFocus(50, 50, rect, 100, 100);
    await flushMicrotasks();
    const before = controller.state.rendered;
    controller.toggleCompare();
    expect(controller.state.compareOriginal).toBe(true);
    expect(controller.state.rendered).toBe(before);
    controller.toggleCompare();
    expect(controller.state.compareOriginal).toBe(false);
  });
});
