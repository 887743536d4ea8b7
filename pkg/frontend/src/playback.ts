// Playback abstraction: the controller only needs position, pause state and
// seeking. VideoPlayback wraps a media element (position comes straight from
// the element's reported currentTime at pause, no frame counting);
// ManualPlayback is a timer-driven clock for stimuli without a media file
// and for tests.

export interface Playback {
  readonly duration: number;
  readonly currentTime: number;
  readonly paused: boolean;
  play(): void;
  pause(): void;
  seek(t: number): void;
  onTick(cb: (t: number) => void): void;
}

export class VideoPlayback implements Playback {
  private listeners: Array<(t: number) => void> = [];

  constructor(
    private readonly video: HTMLVideoElement,
    private readonly fallbackDuration: number,
  ) {
    video.addEventListener("timeupdate", () => this.emit());
    video.addEventListener("seeked", () => this.emit());
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.currentTime);
  }

  get duration(): number {
    return Number.isFinite(this.video.duration) && this.video.duration > 0
      ? this.video.duration
      : this.fallbackDuration;
  }

  get currentTime(): number {
    return this.video.currentTime;
  }

  get paused(): boolean {
    return this.video.paused;
  }

  play(): void {
    void this.video.play();
  }

  pause(): void {
    this.video.pause();
  }

  seek(t: number): void {
    this.video.currentTime = Math.min(Math.max(t, 0), this.duration);
  }

  onTick(cb: (t: number) => void): void {
    this.listeners.push(cb);
  }
}

export class ManualPlayback implements Playback {
  private position = 0;
  private playing = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  private listeners: Array<(t: number) => void> = [];

  constructor(
    readonly duration: number,
    private readonly tickMs: number = 100,
  ) {}

  get currentTime(): number {
    return this.position;
  }

  get paused(): boolean {
    return !this.playing;
  }

  play(): void {
    if (this.playing) return;
    this.playing = true;
    this.timer = setInterval(() => this.advance(this.tickMs / 1000), this.tickMs);
  }

  pause(): void {
    this.playing = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  seek(t: number): void {
    this.position = Math.min(Math.max(t, 0), this.duration);
    this.emit();
  }

  /** Move the clock forward; exposed so tests can step time deterministically. */
  advance(dt: number): void {
    this.position = Math.min(this.position + dt, this.duration);
    if (this.position >= this.duration) this.pause();
    this.emit();
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.position);
  }

  onTick(cb: (t: number) => void): void {
    this.listeners.push(cb);
  }
}
