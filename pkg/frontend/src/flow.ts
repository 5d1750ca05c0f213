/**
 * Headless trial flow: the session loop without any DOM.
 *
 * present() fetches the pending trial and starts the response timer;
 * answer() freezes the timer, submits, and returns training feedback
 * when the service discloses it.  A failed submit is retried once after
 * an idempotent re-fetch of the pending trial; if the service already
 * advanced past the trial, the original submit is taken as delivered.
 */

import {
  AlphabetEntry,
  ApiError,
  ExperimentApi,
  ParticipantInfo,
  Questionnaire,
  SessionCreateRequest,
  SubmitReply,
  TrialView,
} from "./api.js";
import { CANONICAL_DIGITS } from "./glyphs.js";
import { ResponseTimer } from "./timer.js";

export interface TrialPresentation {
  trial: TrialView;
  /** The ten digit choices in canonical order (never shuffled). */
  choices: AlphabetEntry[];
  progress: { answered: number; total: number };
}

export interface TrainingFeedback {
  correct: boolean;
  truthChar: string;
  truthPattern: string;
}

export interface SubmittedTrial {
  trialId: string;
  phase: "training" | "actual";
  method: string;
  answer: string;
  elapsedS: number;
  feedback: TrainingFeedback | null;
}

export type FlowState = "idle" | "running" | "questionnaire" | "finished";

export class TrialFlow {
  readonly submitted: SubmittedTrial[] = [];
  private sessionId: string | null = null;
  private trialCount = 0;
  private choices: AlphabetEntry[] = [];
  private timer: ResponseTimer;
  private current: TrialView | null = null;
  private stateValue: FlowState = "idle";
  private summaryValue: Record<string, unknown> | null = null;

  constructor(
    private client: ExperimentApi,
    now?: () => number,
  ) {
    this.timer = new ResponseTimer(now);
  }

  get state(): FlowState {
    return this.stateValue;
  }

  get summary(): Record<string, unknown> | null {
    return this.summaryValue;
  }

  get session(): string {
    if (this.sessionId === null) throw new Error("session not started");
    return this.sessionId;
  }

  async start(
    participant: ParticipantInfo,
    options: Omit<SessionCreateRequest, "participant"> = {},
  ): Promise<TrialPresentation> {
    const alphabet = await this.client.alphabet();
    const byChar = new Map(alphabet.map((entry) => [entry.char, entry]));
    this.choices = CANONICAL_DIGITS.map((char) => {
      const entry = byChar.get(char);
      if (!entry) throw new Error(`alphabet is missing digit ${char}`);
      return entry;
    });
    const created = await this.client.createSession({ participant, ...options });
    this.sessionId = created.session_id;
    this.trialCount = created.trial_count;
    this.stateValue = "running";
    const first = await this.present();
    if (first === null) throw new Error("new session has no trials");
    return first;
  }

  /** Fetch (or re-fetch) the pending trial and start its timer.
   *  Returns null once every trial is answered (questionnaire time). */
  async present(): Promise<TrialPresentation | null> {
    const next = await this.client.nextTrial(this.session);
    if (next.done || next.trial === null) {
      this.current = null;
      this.stateValue = "questionnaire";
      return null;
    }
    this.current = next.trial;
    this.timer.start();
    return {
      trial: next.trial,
      choices: this.choices,
      progress: { answered: this.submitted.length, total: this.trialCount },
    };
  }

  get hasPendingTrial(): boolean {
    return this.current !== null;
  }

  /** Submit the selection for the presented trial; null feedback on actual trials. */
  async answer(char: string): Promise<TrainingFeedback | null> {
    if (this.current === null) {
      throw new Error("no trial is being presented");
    }
    const trial = this.current;
    const elapsedS = this.timer.stop();
    const reply = await this.submitWithRetry(trial, char, elapsedS);
    const feedback: TrainingFeedback | null =
      reply !== null && reply.phase === "training"
        ? {
            correct: reply.correct === true,
            truthChar: reply.truth_char ?? "",
            truthPattern: reply.truth_pattern ?? "",
          }
        : null;
    this.submitted.push({
      trialId: trial.trial_id,
      phase: trial.phase,
      method: trial.method,
      answer: char,
      elapsedS,
      feedback,
    });
    this.current = null;
    if (this.submitted.length >= this.trialCount) {
      this.stateValue = "questionnaire";
    }
    return feedback;
  }

  private async submitWithRetry(
    trial: TrialView,
    char: string,
    elapsedS: number,
  ): Promise<SubmitReply | null> {
    try {
      return await this.client.submitResponse(this.session, trial.trial_id, char, elapsedS);
    } catch (error) {
      if (error instanceof ApiError) throw error; // service rejected: not a network fault
      const next = await this.client.nextTrial(this.session);
      if (next.done || next.trial === null || next.trial.trial_id !== trial.trial_id) {
        return null; // the lost reply was applied server-side
      }
      return await this.client.submitResponse(this.session, trial.trial_id, char, elapsedS);
    }
  }

  /** Advance through every remaining trial with a scripted responder. */
  async runAll(
    respond: (presentation: TrialPresentation) => string | Promise<string>,
  ): Promise<void> {
    while (this.stateValue === "running") {
      const presentation = this.current
        ? {
            trial: this.current,
            choices: this.choices,
            progress: { answered: this.submitted.length, total: this.trialCount },
          }
        : await this.present();
      if (presentation === null) return;
      await this.answer(await respond(presentation));
    }
  }

  async submitQuestionnaire(questionnaire: Questionnaire): Promise<Record<string, unknown>> {
    if (this.stateValue !== "questionnaire") {
      throw new Error(`cannot finalize in state ${this.stateValue}`);
    }
    const response = await this.client.finalize(this.session, questionnaire);
    this.summaryValue = response.summary;
    this.stateValue = "finished";
    return response.summary;
  }
}
