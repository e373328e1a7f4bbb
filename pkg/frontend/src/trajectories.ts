// Saved-trajectory manager. Replay never simulates anything locally: it
// opens a fresh session with the stored (template, seed) and feeds the
// stored actions through the service one at a time, so the animation shows
// exactly what the engine says.

import { Api } from "./api.js";
import type { GridRender, TrajectoryFile, TrajectoryInfo } from "./types.js";

export interface TrajectoryView {
  showList(items: TrajectoryInfo[]): void;
  showFrame(grid: GridRender, step: number, totalSteps: number): void;
  replayDone(finalRender: GridRender): void;
  offerDownload(name: string, content: string): void;
  showError(message: string): void;
}

export class TrajectoryManager {
  constructor(
    private api: Api,
    private view: TrajectoryView,
    private frameDelayMs: number = 120,
  ) {}

  async refresh(): Promise<void> {
    const listing = await this.api.listTrajectories();
    this.view.showList(listing.trajectories);
  }

  async download(name: string): Promise<void> {
    const file = await this.api.getTrajectory(name);
    this.view.offerDownload(name, JSON.stringify(file, null, 2));
  }

  async remove(name: string): Promise<void> {
    await this.api.deleteTrajectory(name);
    await this.refresh();
  }

  async replay(name: string): Promise<GridRender | null> {
    let file: TrajectoryFile;
    try {
      file = await this.api.getTrajectory(name);
    } catch (err) {
      this.view.showError(err instanceof Error ? err.message : String(err));
      return null;
    }
    const session = await this.api.createSession(file.template, file.seed);
    let frame = session.render;
    this.view.showFrame(frame, 0, file.actions.length);
    for (let i = 0; i < file.actions.length; i++) {
      const result = await this.api.submitAction(session.session_id, file.actions[i]);
      frame = result.render;
      this.view.showFrame(frame, i + 1, file.actions.length);
      if (this.frameDelayMs > 0) {
        await new Promise((resolve) => setTimeout(resolve, this.frameDelayMs));
      }
    }
    this.view.replayDone(frame);
    return frame;
  }
}
