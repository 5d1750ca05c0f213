/**
 * Response timer: starts when the pattern presentation begins and
 * freezes at the first selection, mirroring the study timer.
 */

type NowFn = () => number;

export class ResponseTimer {
  private startedAt: number | null = null;
  private frozenS: number | null = null;

  constructor(private now: NowFn = () => performance.now()) {}

  start(): void {
    this.startedAt = this.now();
    this.frozenS = null;
  }

  get running(): boolean {
    return this.startedAt !== null && this.frozenS === null;
  }

  /** Freeze and return the elapsed seconds; later calls return the frozen value. */
  stop(): number {
    if (this.startedAt === null) {
      throw new Error("timer was never started");
    }
    if (this.frozenS === null) {
      this.frozenS = Math.max((this.now() - this.startedAt) / 1000, 1e-6);
    }
    return this.frozenS;
  }

  get elapsedS(): number {
    if (this.frozenS !== null) return this.frozenS;
    if (this.startedAt === null) return 0;
    return (this.now() - this.startedAt) / 1000;
  }
}
