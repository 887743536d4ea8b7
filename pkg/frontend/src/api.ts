// Typed client for the annotation session HTTP API. Every failure surfaces
// as ApiError carrying the server's {code, message} body (or a network code
// when the request never reached the server).

export interface StimulusInfo {
  stimulus_id: string;
  duration_s: number;
  media_url: string;
}

export interface AnnotationRecord {
  t_event_s: number;
  label: string;
  intensity: string;
  session_id: string;
  participant_id: string;
}

export interface SessionState {
  session_id: string;
  participant_id: string;
  stimulus_id: string;
  state: string;
  marks: number[];
  annotations: AnnotationRecord[];
}

export interface Vocabulary {
  labels: string[];
  intensities: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "network", `server unreachable: ${String(err)}`);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const code = typeof body.code === "string" ? body.code : "error";
      const message = typeof body.message === "string" ? body.message : response.statusText;
      throw new ApiError(response.status, code, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listStimuli(): Promise<StimulusInfo[]> {
    return this.request("/api/stimuli");
  }

  vocabulary(): Promise<Vocabulary> {
    return this.request("/api/vocabulary");
  }

  async createSession(participantId: string, stimulusId: string): Promise<string> {
    const body = await this.post<{ session_id: string }>("/api/sessions", {
      participant_id: participantId,
      stimulus_id: stimulusId,
    });
    return body.session_id;
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  mark(sessionId: string, tEventS: number): Promise<{ mark_index: number; t_event_s: number }> {
    return this.post(`/api/sessions/${sessionId}/mark`, { t_event_s: tEventS });
  }

  annotate(
    sessionId: string,
    markIndex: number,
    label: string,
    intensity: string,
  ): Promise<AnnotationRecord> {
    return this.post(`/api/sessions/${sessionId}/annotate`, {
      mark_index: markIndex,
      label,
      intensity,
    });
  }

  retract(sessionId: string, markIndex: number): Promise<void> {
    return this.request(`/api/sessions/${sessionId}/mark/${markIndex}`, { method: "DELETE" });
  }

  complete(sessionId: string): Promise<SessionState> {
    return this.post(`/api/sessions/${sessionId}/complete`, {});
  }

  annotations(sessionId: string): Promise<AnnotationRecord[]> {
    return this.request(`/api/sessions/${sessionId}/annotations`);
  }
}
