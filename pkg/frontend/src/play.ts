// Play-screen controller. Holds no game logic: every screen update is the
// verbatim render the service returned. Keystrokes map to single action
// submissions; while one request is in flight further keys queue client-side
// so the service sees them in press order.

import { Api } from "./api.js";
import { actionForKey } from "./keymap.js";
import type { ActionResult, GridRender, SessionInfo } from "./types.js";

export interface PlayView {
  render(grid: GridRender, visited: [number, number][], cellsVisited: number): void;
  showOutcome(outcome: string): void;
  showError(message: string): void;
  sessionSaved(name: string): void;
}

export class PlayController {
  session: SessionInfo | null = null;
  private queue: number[] = [];
  private busy = false;
  requestsSent = 0;

  constructor(private api: Api, private view: PlayView) {}

  async start(template: string, seed?: number): Promise<void> {
    this.session = await this.api.createSession(template, seed);
    this.queue = [];
    this.view.render(this.session.render, this.session.visited_cells ?? [], this.session.cells_visited);
  }

  /** Map one keystroke to at most one queued action submission. */
  handleKey(key: string): boolean {
    const action = actionForKey(key);
    if (action === null || this.session === null) return false;
    this.queue.push(action);
    void this.pump();
    return true;
  }

  private async pump(): Promise<void> {
    if (this.busy || this.session === null) return;
    this.busy = true;
    try {
      while (this.queue.length > 0) {
        const action = this.queue.shift()!;
        this.requestsSent += 1;
        let result: ActionResult;
        try {
          result = await this.api.submitAction(this.session.session_id, action);
        } catch (err) {
          this.queue = [];
          this.view.showError(err instanceof Error ? err.message : String(err));
          return;
        }
        this.view.render(result.render, result.visited_cells, result.cells_visited);
        this.view.showOutcome(result.outcome);
      }
    } finally {
      this.busy = false;
    }
  }

  /** Wait for the queue to drain (used by tests and the save button). */
  async idle(): Promise<void> {
    while (this.busy || this.queue.length > 0) {
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
  }

  async save(name: string): Promise<void> {
    if (this.session === null) return;
    await this.idle();
    try {
      const saved = await this.api.saveTrajectory(this.session.session_id, name);
      this.view.sessionSaved(saved.name);
    } catch (err) {
      this.view.showError(err instanceof Error ? err.message : String(err));
    }
  }
}
