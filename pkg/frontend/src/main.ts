/** Entry point: wires the flow machine to the DOM screens. */

import { ApiClient } from "./api.js";
import { TrialFlow, TrialPresentation } from "./flow.js";
import { QuestionnaireScreen, TrialScreen, renderSummary } from "./ui.js";

function requireElement(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function runSession(root: HTMLElement, participantId: string, seed: number): Promise<void> {
  const base = (document.querySelector("meta[name=api-base]") as HTMLMetaElement)?.content ?? "";
  const client = new ApiClient(base);
  const flow = new TrialFlow(client);
  const trialScreen = new TrialScreen(root);
  const questionnaireScreen = new QuestionnaireScreen(root);

  let presentation: TrialPresentation | null = await flow.start({ id: participantId }, { seed });
  while (presentation !== null) {
    const current = presentation;
    const choice = await new Promise<string>((resolve) => {
      trialScreen.show(current, resolve);
    });
    const feedback = await flow.answer(choice);
    if (feedback !== null) {
      // Training only: replay how the pattern was presented (best effort).
      const preview = await client
        .trialSchedule(flow.session, current.trial.trial_id)
        .catch(() => undefined);
      await new Promise<void>((resolve) =>
        trialScreen.showFeedback(feedback, resolve, preview),
      );
    }
    presentation = flow.state === "running" ? await flow.present() : null;
  }

  trialScreen.clear();
  const methods = [...new Set(flow.submitted.map((s) => s.method))];
  questionnaireScreen.show(methods, async (questionnaire) => {
    const summary = await flow.submitQuestionnaire(questionnaire);
    renderSummary(root, summary);
  });
}

function boot(): void {
  const form = requireElement("participant-form") as HTMLFormElement;
  const root = requireElement("screen");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const participantId = String(data.get("participant") ?? "").trim();
    if (!participantId) return;
    const seed = Number(data.get("seed") ?? 0);
    form.hidden = true;
    runSession(root, participantId, seed).catch((error) => {
      root.replaceChildren();
      const message = document.createElement("p");
      message.className = "warning";
      message.textContent = `Session failed: ${error}`;
      root.appendChild(message);
      form.hidden = false;
    });
  });
}

boot();
