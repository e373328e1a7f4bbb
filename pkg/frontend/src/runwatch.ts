// Run watcher: start an exploration run, poll its status on an interval,
// and hand the (append-only) coverage curve to the chart. The saturation
// marker appears exactly when the count reaches the ground-truth total the
// service reported at start.

import { Api } from "./api.js";
import type { RunStatus } from "./types.js";

export interface RunWatchView {
  update(status: RunStatus, saturationIteration: number | null): void;
  finished(status: RunStatus): void;
  failed(message: string): void;
}

export const POLL_INTERVAL_MS = 250;

export function saturationIteration(
  curve: [number, number][],
  total: number,
): number | null {
  for (const [iteration, count] of curve) {
    if (count >= total) return iteration;
  }
  return null;
}

export class RunWatchController {
  private timer: ReturnType<typeof setTimeout> | null = null;
  runId: string | null = null;
  total = 0;

  constructor(
    private api: Api,
    private view: RunWatchView,
    private intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  async start(params: Record<string, unknown>): Promise<void> {
    const started = await this.api.startRun(params);
    this.runId = started.run_id;
    this.total = started.ground_truth_total;
    await this.poll();
  }

  async poll(): Promise<void> {
    if (this.runId === null) return;
    let status: RunStatus;
    try {
      status = await this.api.runStatus(this.runId);
    } catch (err) {
      this.view.failed(err instanceof Error ? err.message : String(err));
      return;
    }
    const saturation = saturationIteration(status.curve, this.total);
    this.view.update(status, saturation);
    if (status.status === "running") {
      this.timer = setTimeout(() => void this.poll(), this.intervalMs);
    } else if (status.status === "finished") {
      this.view.finished(status);
    } else {
      this.view.failed(status.error ?? "run failed");
    }
  }

  stop(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.runId = null;
  }
}
