// Session state driven strictly by the server: every mutation round-trips
// and then refetches, so the local view can never diverge from
// GET /annotations (optimistic updates are deliberately absent).

import { ApiClient, ApiError, AnnotationRecord, StimulusInfo } from "./api.js";
import { Playback } from "./playback.js";

export type Connection = "online" | "offline";

export interface UiSessionView {
  sessionId: string | null;
  stimulus: StimulusInfo | null;
  sessionState: string;
  position: number;
  marks: number[];
  annotations: AnnotationRecord[];
  connection: Connection;
  error: string | null;
}

export class SessionController {
  readonly view: UiSessionView = {
    sessionId: null,
    stimulus: null,
    sessionState: "",
    position: 0,
    marks: [],
    annotations: [],
    connection: "online",
    error: null,
  };

  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: ApiClient,
    readonly playback: Playback,
  ) {
    playback.onTick((t) => {
      this.view.position = t;
      this.notify();
    });
  }

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  private fail(err: unknown): never {
    if (err instanceof ApiError) {
      this.view.connection = err.status === 0 ? "offline" : "online";
      this.view.error = err.message;
    } else {
      this.view.error = String(err);
    }
    this.notify();
    throw err;
  }

  async start(participantId: string, stimulus: StimulusInfo): Promise<void> {
    try {
      const sessionId = await this.api.createSession(participantId, stimulus.stimulus_id);
      this.view.sessionId = sessionId;
      this.view.stimulus = stimulus;
      await this.refreshFromServer();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Pull session state + annotations; the only way the lists change. */
  async refreshFromServer(): Promise<void> {
    if (this.view.sessionId === null) return;
    try {
      const session = await this.api.getSession(this.view.sessionId);
      this.view.sessionState = session.state;
      this.view.marks = session.marks;
      this.view.annotations = await this.api.annotations(this.view.sessionId);
      this.view.connection = "online";
      this.view.error = null;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Pause playback and mark the paused position as a pending event time. */
  async markAtCurrentPosition(): Promise<number> {
    if (this.view.sessionId === null) throw new Error("no active session");
    this.playback.pause();
    const t = this.playback.currentTime;
    try {
      const mark = await this.api.mark(this.view.sessionId, t);
      await this.refreshFromServer();
      return mark.mark_index;
    } catch (err) {
      this.fail(err);
    }
  }

  async annotate(markIndex: number, label: string, intensity: string): Promise<void> {
    if (this.view.sessionId === null) throw new Error("no active session");
    try {
      await this.api.annotate(this.view.sessionId, markIndex, label, intensity);
      await this.refreshFromServer();
    } catch (err) {
      this.fail(err);
    }
  }

  async retract(markIndex: number): Promise<void> {
    if (this.view.sessionId === null) throw new Error("no active session");
    try {
      await this.api.retract(this.view.sessionId, markIndex);
      await this.refreshFromServer();
    } catch (err) {
      this.fail(err);
    }
  }

  togglePlayback(): void {
    if (this.playback.paused) {
      this.playback.play();
    } else {
      this.playback.pause();
    }
    this.view.position = this.playback.currentTime;
    this.notify();
  }
}
