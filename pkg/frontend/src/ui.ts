/**
 * DOM rendering: participant form, trial screen with the 10-glyph choice
 * grid (keyboard shortcuts 0-9), training feedback, questionnaire forms
 * and the final summary.
 */

import { Questionnaire } from "./api.js";
import { TrainingFeedback, TrialPresentation } from "./flow.js";
import { dotGrid, rowsNeeded } from "./glyphs.js";
import { ScheduleDoc, activeCellsAt } from "./preview.js";

const METHOD_LABELS: Record<string, string> = {
  constant: "Constant",
  point_by_point: "Point-by-Point",
  row_by_row: "Row-by-Row",
  column_by_column: "Column-by-Column",
  pulsating: "Pulsating",
  rotating: "Rotating",
  expanding: "Expanding",
  varying_intensity: "Varying Intensity",
  morse_like: "Morse-Like",
};

export function methodLabel(method: string): string {
  return METHOD_LABELS[method] ?? method;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** 2x2 dot square for a digit pattern (digits never use the third row). */
export function renderGlyph(cells: string, rows = 2): HTMLElement {
  const glyph = el("div", "glyph");
  for (const line of dotGrid(cells, rows)) {
    const rowNode = el("div", "glyph-row");
    for (const raised of line) {
      rowNode.appendChild(el("span", raised ? "dot raised" : "dot"));
    }
    glyph.appendChild(rowNode);
  }
  return glyph;
}

export interface SelectionHandler {
  (char: string): void;
}

export class TrialScreen {
  private keyHandler: ((event: KeyboardEvent) => void) | null = null;

  constructor(private root: HTMLElement) {}

  show(presentation: TrialPresentation, onSelect: SelectionHandler): void {
    this.clear();
    const { trial, choices, progress } = presentation;
    const header = el("div", "trial-header");
    header.appendChild(
      el("h2", undefined, `Trial ${progress.answered + 1} of ${progress.total}`),
    );
    header.appendChild(
      el(
        "p",
        "trial-meta",
        `${trial.phase === "training" ? "Training" : "Trial"} - ${methodLabel(trial.method)}`,
      ),
    );
    header.appendChild(
      el("p", "trial-prompt", "Select the pattern you feel on your palm (keys 1-9, 0)."),
    );
    this.root.appendChild(header);

    const grid = el("div", "choice-grid");
    for (const entry of choices) {
      const button = el("button", "choice");
      button.appendChild(renderGlyph(entry.cells));
      button.appendChild(el("span", "choice-label", entry.char));
      button.addEventListener("click", () => onSelect(entry.char));
      grid.appendChild(button);
    }
    this.root.appendChild(grid);

    this.keyHandler = (event) => {
      if (choices.some((c) => c.char === event.key)) onSelect(event.key);
    };
    document.addEventListener("keydown", this.keyHandler);
  }

  showFeedback(feedback: TrainingFeedback, onContinue: () => void, preview?: ScheduleDoc): void {
    this.clear();
    const panel = el("div", feedback.correct ? "feedback correct" : "feedback incorrect");
    panel.appendChild(el("h2", undefined, feedback.correct ? "Correct" : "Incorrect"));
    if (!feedback.correct) {
      panel.appendChild(el("p", undefined, `The pattern was ${feedback.truthChar}:`));
      panel.appendChild(renderGlyph(feedback.truthPattern));
    }
    let stopPreview: (() => void) | null = null;
    if (preview) {
      panel.appendChild(el("p", undefined, "How it was played:"));
      const holder = el("div", "preview");
      panel.appendChild(holder);
      stopPreview = animatePreview(holder, preview);
    }
    const next = el("button", "primary", "Continue");
    next.addEventListener("click", () => {
      stopPreview?.();
      onContinue();
    });
    panel.appendChild(next);
    this.root.appendChild(panel);
  }

  clear(): void {
    if (this.keyHandler) {
      document.removeEventListener("keydown", this.keyHandler);
      this.keyHandler = null;
    }
    this.root.replaceChildren();
  }
}

function likertRow(name: string, low: string, high: string): HTMLElement {
  const row = el("div", "likert-row");
  row.appendChild(el("span", "likert-low", low));
  for (let value = 1; value <= 7; value++) {
    const label = el("label");
    const input = el("input") as HTMLInputElement;
    input.type = "radio";
    input.name = name;
    input.value = String(value);
    label.appendChild(input);
    label.appendChild(el("span", undefined, String(value)));
    row.appendChild(label);
  }
  row.appendChild(el("span", "likert-high", high));
  return row;
}

const SUS_ITEMS = [
  "I think that I would like to use this system frequently.",
  "I found the system unnecessarily complex.",
  "I thought the system was easy to use.",
  "I think that I would need the support of a technical person to be able to use this system.",
  "I found the various functions in this system were well integrated.",
  "I thought there was too much inconsistency in this system.",
  "I would imagine that most people would learn to use this system very quickly.",
  "I found the system very cumbersome to use.",
  "I felt very confident using the system.",
  "I needed to learn a lot of things before I could get going with this system.",
];

export class QuestionnaireScreen {
  constructor(private root: HTMLElement) {}

  show(methods: string[], onSubmit: (questionnaire: Questionnaire) => void): void {
    this.root.replaceChildren();
    const form = el("form", "questionnaire");
    form.appendChild(el("h2", undefined, "Questionnaire"));

    form.appendChild(el("h3", undefined, "How mentally demanding was each method? (1-7)"));
    for (const method of methods) {
      form.appendChild(el("p", "q-method", methodLabel(method)));
      form.appendChild(likertRow(`md-${method}`, "not at all", "extremely"));
    }
    form.appendChild(el("h3", undefined, "How comfortable was each method? (1-7)"));
    for (const method of methods) {
      form.appendChild(el("p", "q-method", methodLabel(method)));
      form.appendChild(likertRow(`cf-${method}`, "not at all", "extremely"));
    }
    form.appendChild(el("h3", undefined, "System usability (1 = strongly disagree, 5 = strongly agree)"));
    SUS_ITEMS.forEach((text, i) => {
      form.appendChild(el("p", "q-item", `${i + 1}. ${text}`));
      const row = el("div", "likert-row");
      for (let value = 1; value <= 5; value++) {
        const label = el("label");
        const input = el("input") as HTMLInputElement;
        input.type = "radio";
        input.name = `sus-${i}`;
        input.value = String(value);
        label.appendChild(input);
        label.appendChild(el("span", undefined, String(value)));
        row.appendChild(label);
      }
      form.appendChild(row);
    });

    const submit = el("button", "primary", "Finish session");
    submit.type = "submit";
    form.appendChild(submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const data = new FormData(form);
      const read = (name: string): number | null => {
        const value = data.get(name);
        return value === null ? null : Number(value);
      };
      const questionnaire: Questionnaire = { mental_demand: {}, comfort: {}, sus_items: [] };
      for (const method of methods) {
        const md = read(`md-${method}`);
        const cf = read(`cf-${method}`);
        if (md === null || cf === null) return this.flagIncomplete(form);
        questionnaire.mental_demand[method] = md;
        questionnaire.comfort[method] = cf;
      }
      for (let i = 0; i < SUS_ITEMS.length; i++) {
        const value = read(`sus-${i}`);
        if (value === null) return this.flagIncomplete(form);
        questionnaire.sus_items.push(value);
      }
      onSubmit(questionnaire);
    });
    this.root.appendChild(form);
  }

  private flagIncomplete(form: HTMLElement): void {
    let warning = form.querySelector(".warning");
    if (!warning) {
      warning = el("p", "warning", "Please answer every item before finishing.");
      form.appendChild(warning);
    }
  }
}

/** Replay a schedule document as a blinking glyph; returns a stop function. */
export function animatePreview(holder: HTMLElement, doc: ScheduleDoc): () => void {
  const rows = rowsNeeded(doc.pattern);
  const started = performance.now();
  const draw = () => {
    const t = (performance.now() - started) / 1000;
    const cells = [...activeCellsAt(doc, t)].sort().join("");
    holder.replaceChildren(renderGlyph(cells, rows));
  };
  draw();
  const handle = setInterval(draw, 50);
  return () => clearInterval(handle);
}

export function renderSummary(root: HTMLElement, summary: Record<string, unknown>): void {
  root.replaceChildren();
  root.appendChild(el("h2", undefined, "Session complete"));
  const pre = el("pre", "summary");
  pre.textContent = JSON.stringify(summary, null, 2);
  root.appendChild(pre);
}
