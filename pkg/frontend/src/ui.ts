// DOM layer: renders the controller's view and wires controls. Every mouse
// action has a keyboard route (buttons and selects are focusable; global
// hotkeys cover the frequent ones: Space play/pause, M mark, Enter confirm,
// Delete retract).

import { Vocabulary } from "./api.js";
import { SessionController } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function formatTime(t: number): string {
  const m = Math.floor(t / 60);
  const s = (t - m * 60).toFixed(2);
  return `${m}:${s.padStart(5, "0")}`;
}

export interface AnnotationUi {
  root: HTMLElement;
  refresh(): void;
}

export function mountAnnotationUi(
  container: HTMLElement,
  controller: SessionController,
  vocabulary: Vocabulary,
): AnnotationUi {
  const root = el("div", { class: "annotator" });

  const status = el("p", { "data-testid": "status" });
  const position = el("span", { "data-testid": "position" });
  const sessionState = el("span", { "data-testid": "session-state" });

  const playButton = el("button", { "data-testid": "play", title: "Space" }, "Play/Pause");
  playButton.addEventListener("click", () => controller.togglePlayback());

  const scrubber = el("input", { type: "range", min: "0", step: "0.01", "data-testid": "scrubber" });
  scrubber.addEventListener("input", () => controller.playback.seek(Number(scrubber.value)));

  const markButton = el("button", { "data-testid": "mark", title: "M" }, "Mark onset");
  markButton.addEventListener("click", () => void controller.markAtCurrentPosition().catch(() => {}));

  const markSelect = el("select", { "data-testid": "mark-select", size: "4" });
  const labelSelect = el("select", { "data-testid": "label-select" });
  for (const label of vocabulary.labels) {
    labelSelect.appendChild(el("option", { value: label }, label));
  }
  const intensitySelect = el("select", { "data-testid": "intensity-select" });
  intensitySelect.appendChild(el("option", { value: "" }, "choose intensity"));
  for (const intensity of vocabulary.intensities) {
    intensitySelect.appendChild(el("option", { value: intensity }, intensity));
  }

  const confirmButton = el("button", { "data-testid": "confirm", title: "Enter" }, "Confirm label");
  const retractButton = el("button", { "data-testid": "retract", title: "Delete" }, "Retract mark");

  const confirm = () => {
    const markIndex = markSelect.selectedIndex;
    if (markIndex < 0 || !intensitySelect.value) {
      status.textContent = "select a mark and an intensity first";
      return;
    }
    void controller.annotate(markIndex, labelSelect.value, intensitySelect.value).catch(() => {});
  };
  const retract = () => {
    const markIndex = markSelect.selectedIndex;
    if (markIndex < 0) {
      status.textContent = "select a mark to retract";
      return;
    }
    void controller.retract(markIndex).catch(() => {});
  };
  confirmButton.addEventListener("click", confirm);
  retractButton.addEventListener("click", retract);

  const annotationList = el("ul", { "data-testid": "annotations" });

  root.append(
    el("h1", {}, "Onset annotation"),
    status,
    el("p", {}, "position: "),
    position,
    el("p", {}, "state: "),
    sessionState,
    playButton,
    scrubber,
    markButton,
    el("h2", {}, "Pending marks"),
    markSelect,
    labelSelect,
    intensitySelect,
    confirmButton,
    retractButton,
    el("h2", {}, "Annotations"),
    annotationList,
  );
  container.appendChild(root);

  root.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    if (event.code === "Space") {
      event.preventDefault();
      controller.togglePlayback();
    } else if (event.code === "KeyM") {
      void controller.markAtCurrentPosition().catch(() => {});
    } else if (event.code === "Enter") {
      confirm();
    } else if (event.code === "Delete") {
      retract();
    }
  });

  const refresh = () => {
    const view = controller.view;
    position.textContent = formatTime(view.position);
    sessionState.textContent = view.sessionState;
    scrubber.max = String(view.stimulus?.duration_s ?? 0);
    scrubber.value = String(view.position);
    status.textContent =
      view.connection === "offline"
        ? `offline: ${view.error ?? "server unreachable"}`
        : view.error ?? "";
    markButton.disabled = view.connection === "offline" || view.sessionId === null;

    const selected = markSelect.selectedIndex;
    markSelect.replaceChildren(
      ...view.marks.map((t, i) => el("option", { value: String(i) }, `mark ${i}: ${formatTime(t)}`)),
    );
    if (selected >= 0 && selected < view.marks.length) markSelect.selectedIndex = selected;
    else if (view.marks.length > 0) markSelect.selectedIndex = view.marks.length - 1;

    annotationList.replaceChildren(
      ...view.annotations.map((a) =>
        el("li", {}, `${a.t_event_s.toFixed(2)}s ${a.label} ${a.intensity}`),
      ),
    );
  };
  controller.onChange(refresh);
  refresh();
  return { root, refresh };
}
