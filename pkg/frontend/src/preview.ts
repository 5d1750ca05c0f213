/**
 * Visual replay of a schedule document: which cells are lit at time t.
 *
 * Used for demo/training previews; trajectories and fine amplitude
 * envelopes are ignored, a dot is simply on while its event is active.
 */

export interface ScheduleEventDoc {
  cell: number;
  start_s: number;
  duration_s: number | "open";
  freq_hz: number;
  amplitude: number;
}

export interface ScheduleDoc {
  format: string;
  method: string;
  pattern: string;
  total_duration_s: number | "open";
  loop: boolean;
  events: ScheduleEventDoc[];
}

export function activeCellsAt(doc: ScheduleDoc, t: number): Set<number> {
  if (t < 0) return new Set();
  let time = t;
  if (doc.total_duration_s !== "open") {
    const total = doc.total_duration_s;
    if (time >= total) {
      if (!doc.loop || total <= 0) return new Set();
      time = time % total;
    }
  }
  const active = new Set<number>();
  for (const event of doc.events) {
    if (time < event.start_s) continue;
    if (event.duration_s === "open" || time < event.start_s + event.duration_s) {
      active.add(event.cell);
    }
  }
  return active;
}

/** Duration of one replay cycle for the animation clock. */
export function previewCycleS(doc: ScheduleDoc): number {
  return doc.total_duration_s === "open" ? 1.0 : doc.total_duration_s;
}
