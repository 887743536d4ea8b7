// Scripted end-to-end annotation loop against the live service: mark at a
// known paused position, label it, confirm, retract another mark, and check
// after every mutation that the rendered list equals GET /annotations.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, AnnotationRecord } from "../src/api.js";
import { ManualPlayback } from "../src/playback.js";
import { SessionController } from "../src/state.js";
import { mountAnnotationUi, AnnotationUi } from "../src/ui.js";
import { RunningServer, startServer } from "./server.js";

const PORT = 8931;

let server: RunningServer;

beforeAll(async () => {
  server = await startServer(PORT);
});

afterAll(() => {
  server.stop();
});

async function waitFor(cond: () => boolean, ms = 5000): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > ms) throw new Error("timed out waiting for condition");
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

function domAnnotations(ui: AnnotationUi): string[] {
  const list = ui.root.querySelector('[data-testid="annotations"]')!;
  return Array.from(list.querySelectorAll("li")).map((li) => li.textContent ?? "");
}

async function expectListMirrorsServer(
  api: ApiClient,
  controller: SessionController,
  ui: AnnotationUi,
): Promise<AnnotationRecord[]> {
  const serverSide = await api.annotations(controller.view.sessionId!);
  expect(controller.view.annotations).toEqual(serverSide);
  const rendered = domAnnotations(ui);
  expect(rendered.length).toBe(serverSide.length);
  serverSide.forEach((ann, i) => {
    expect(rendered[i]).toContain(ann.label);
    expect(rendered[i]).toContain(ann.intensity);
    expect(rendered[i]).toContain(ann.t_event_s.toFixed(2));
  });
  return serverSide;
}

describe("annotation loop", () => {
  it("marks the paused position, labels it, and stays in sync with the server", async () => {
    const api = new ApiClient(server.baseUrl);
    const playback = new ManualPlayback(60.0);
    const controller = new SessionController(api, playback);
    const vocabulary = await api.vocabulary();
    expect(vocabulary.labels).toContain("Fear");

    await controller.start("P01", { stimulus_id: "stim01", duration_s: 60.0, media_url: "" });
    const ui = mountAnnotationUi(document.body, controller, vocabulary);
    await expectListMirrorsServer(api, controller, ui);

    // replay, then pause at a known position and mark via the UI button
    playback.play();
    playback.pause();
    playback.seek(30.02);
    const pausedAt = playback.currentTime;
    (ui.root.querySelector('[data-testid="mark"]') as HTMLButtonElement).click();
    await waitFor(() => controller.view.marks.length === 1);
    expect(playback.paused).toBe(true);
    expect(Math.abs(controller.view.marks[0] - pausedAt)).toBeLessThanOrEqual(0.05);
    await expectListMirrorsServer(api, controller, ui);

    // choose Fear/High and confirm
    const labelSelect = ui.root.querySelector('[data-testid="label-select"]') as HTMLSelectElement;
    const intensitySelect = ui.root.querySelector(
      '[data-testid="intensity-select"]',
    ) as HTMLSelectElement;
    labelSelect.value = "Fear";
    intensitySelect.value = "High";
    (ui.root.querySelector('[data-testid="confirm"]') as HTMLButtonElement).click();
    await waitFor(() => controller.view.annotations.length === 1);

    const serverSide = await expectListMirrorsServer(api, controller, ui);
    expect(serverSide[0].label).toBe("Fear");
    expect(serverSide[0].intensity).toBe("High");
    expect(Math.abs(serverSide[0].t_event_s - pausedAt)).toBeLessThanOrEqual(0.05);
    expect(controller.view.marks).toEqual([]);

    // a second mark, then retraction removes it from the server
    playback.seek(42.5);
    (ui.root.querySelector('[data-testid="mark"]') as HTMLButtonElement).click();
    await waitFor(() => controller.view.marks.length === 1);
    (ui.root.querySelector('[data-testid="retract"]') as HTMLButtonElement).click();
    await waitFor(() => controller.view.marks.length === 0);
    const session = await api.getSession(controller.view.sessionId!);
    expect(session.marks).toEqual([]);
    expect(session.state).toBe("replaying");
    await expectListMirrorsServer(api, controller, ui);
    expect(controller.view.annotations.length).toBe(1);
  });

  it("confirm without an intensity is blocked client-side", async () => {
    const api = new ApiClient(server.baseUrl);
    const playback = new ManualPlayback(60.0);
    const controller = new SessionController(api, playback);
    const vocabulary = await api.vocabulary();
    await controller.start("P02", { stimulus_id: "stim01", duration_s: 60.0, media_url: "" });
    const host = document.createElement("div");
    document.body.appendChild(host);
    const ui = mountAnnotationUi(host, controller, vocabulary);

    playback.seek(10.0);
    (ui.root.querySelector('[data-testid="mark"]') as HTMLButtonElement).click();
    await waitFor(() => controller.view.marks.length === 1);

    (ui.root.querySelector('[data-testid="confirm"]') as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 150));
    expect(controller.view.annotations.length).toBe(0);  // nothing was sent
    const status = ui.root.querySelector('[data-testid="status"]')!;
    expect(status.textContent).toContain("intensity");
  });

  it("server validation errors surface without phantom state", async () => {
    const api = new ApiClient(server.baseUrl);
    const playback = new ManualPlayback(60.0);
    const controller = new SessionController(api, playback);
    await controller.start("P03", { stimulus_id: "stim01", duration_s: 60.0, media_url: "" });

    playback.seek(60.0);
    // out-of-bounds mark: manual clock clamps, so call the API directly
    await expect(api.mark(controller.view.sessionId!, 75.0)).rejects.toMatchObject({
      status: 400,
      code: "validation",
    });
    await controller.refreshFromServer();
    expect(controller.view.marks).toEqual([]);
  });
});
