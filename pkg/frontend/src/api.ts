/**
 * Typed client for the /v1 experiment wire API.
 *
 * The UI is a pure client: every pattern, trial and result it shows
 * comes from these endpoints.
 */

import type { ScheduleDoc } from "./preview.js";

export interface ParticipantInfo {
  id: string;
  age?: number | null;
  handedness?: string | null;
  braille_experience_years?: number | null;
}

export interface SessionCreateRequest {
  participant: ParticipantInfo;
  participant_index?: number;
  methods?: string[] | null;
  trials_per_method?: number;
  training_per_method?: number;
  seed?: number;
  ordering?: string;
}

export interface TrialView {
  trial_id: string;
  index: number;
  total: number;
  phase: "training" | "actual";
  method: string;
  /** Present on training trials only; the service never sends these for actual trials. */
  truth_char?: string;
  truth_pattern?: string;
}

export interface SessionCreated {
  session_id: string;
  trial_count: number;
  training_count: number;
  actual_count: number;
  methods: string[];
  first_trial: TrialView;
}

export interface NextTrialResponse {
  done: boolean;
  trial: TrialView | null;
}

export interface SubmitReply {
  phase: "training" | "actual";
  accepted?: boolean;
  correct?: boolean;
  truth_char?: string;
  truth_pattern?: string;
}

export interface AlphabetEntry {
  char: string;
  cells: string;
}

export interface Questionnaire {
  mental_demand: Record<string, number>;
  comfort: Record<string, number>;
  sus_items: number[];
}

export interface FinalizeResponse {
  session_id: string;
  summary: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

/** What the trial flow needs from the service; ApiClient is the real one. */
export interface ExperimentApi {
  alphabet(): Promise<AlphabetEntry[]>;
  createSession(request: SessionCreateRequest): Promise<SessionCreated>;
  nextTrial(sessionId: string): Promise<NextTrialResponse>;
  submitResponse(
    sessionId: string,
    trialId: string,
    answer: string,
    elapsedS: number,
  ): Promise<SubmitReply>;
  finalize(sessionId: string, questionnaire: Questionnaire): Promise<FinalizeResponse>;
}

type FetchLike = typeof fetch;

export class ApiClient implements ExperimentApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body.detail) detail = JSON.stringify(body.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/v1/health");
  }

  async alphabet(): Promise<AlphabetEntry[]> {
    const body = await this.request<{ characters: AlphabetEntry[] }>("/v1/alphabet");
    return body.characters;
  }

  createSession(request: SessionCreateRequest): Promise<SessionCreated> {
    return this.request("/v1/sessions", { method: "POST", body: JSON.stringify(request) });
  }

  nextTrial(sessionId: string): Promise<NextTrialResponse> {
    return this.request(`/v1/sessions/${sessionId}/next`);
  }

  submitResponse(
    sessionId: string,
    trialId: string,
    answer: string,
    elapsedS: number,
  ): Promise<SubmitReply> {
    return this.request(`/v1/sessions/${sessionId}/responses`, {
      method: "POST",
      body: JSON.stringify({ trial_id: trialId, answer, elapsed_s: elapsedS }),
    });
  }

  trialSchedule(sessionId: string, trialId: string): Promise<ScheduleDoc> {
    return this.request(`/v1/sessions/${sessionId}/trials/${trialId}/schedule`);
  }

  finalize(sessionId: string, questionnaire: Questionnaire): Promise<FinalizeResponse> {
    return this.request(`/v1/sessions/${sessionId}/finalize`, {
      method: "POST",
      body: JSON.stringify(questionnaire),
    });
  }

  results(sessionId: string): Promise<FinalizeResponse> {
    return this.request(`/v1/sessions/${sessionId}/results`);
  }
}
