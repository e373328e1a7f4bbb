import { describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { PlayController, PlayView } from "../src/play.js";
import { TrajectoryManager, TrajectoryView } from "../src/trajectories.js";
import type { GridRender, TrajectoryInfo } from "../src/types.js";
import { MockService } from "./mockservice.js";

class SilentPlayView implements PlayView {
  lastRender: GridRender | null = null;
  render(grid: GridRender): void {
    this.lastRender = grid;
  }
  showOutcome(): void {}
  showError(): void {}
  sessionSaved(): void {}
}

class RecordingTrajView implements TrajectoryView {
  lists: TrajectoryInfo[][] = [];
  frames: GridRender[] = [];
  final: GridRender | null = null;
  downloads: { name: string; content: string }[] = [];
  errors: string[] = [];

  showList(items: TrajectoryInfo[]): void {
    this.lists.push(items);
  }
  showFrame(grid: GridRender): void {
    this.frames.push(grid);
  }
  replayDone(finalRender: GridRender): void {
    this.final = finalRender;
  }
  offerDownload(name: string, content: string): void {
    this.downloads.push({ name, content });
  }
  showError(message: string): void {
    this.errors.push(message);
  }
}

async function recordSession(service: MockService): Promise<GridRender> {
  const playView = new SilentPlayView();
  const play = new PlayController(new Api("", service.fetch), playView);
  await play.start("DualHallway", 99);
  for (const key of ["ArrowUp", "ArrowUp", "ArrowLeft", "ArrowUp"]) play.handleKey(key);
  await play.save("recorded");
  return playView.lastRender!;
}

describe("trajectory manager", () => {
  it("replays through the service and ends on the same grid as live play", async () => {
    const service = new MockService();
    const liveFinal = await recordSession(service);
    const view = new RecordingTrajView();
    const manager = new TrajectoryManager(new Api("", service.fetch), view, 0);
    const replayFinal = await manager.replay("recorded");
    expect(replayFinal).toEqual(liveFinal);
    expect(view.final).toEqual(liveFinal);
    // one frame per stored action plus the initial state
    expect(view.frames.length).toBe(4 + 1);
  });

  it("downloads the stored file verbatim", async () => {
    const service = new MockService();
    await recordSession(service);
    const view = new RecordingTrajView();
    const manager = new TrajectoryManager(new Api("", service.fetch), view, 0);
    await manager.download("recorded");
    const payload = JSON.parse(view.downloads[0].content);
    expect(payload.actions).toEqual([2, 2, 0, 2]);
    expect(payload.template).toBe("DualHallway");
  });

  it("delete removes the trajectory from subsequent listings", async () => {
    const service = new MockService();
    await recordSession(service);
    const view = new RecordingTrajView();
    const manager = new TrajectoryManager(new Api("", service.fetch), view, 0);
    await manager.refresh();
    expect(view.lists[0].map((t) => t.name)).toEqual(["recorded"]);
    await manager.remove("recorded");
    expect(view.lists[1]).toEqual([]);
  });
});
