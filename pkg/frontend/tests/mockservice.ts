// In-memory stand-in for the demo service, exposed through the same fetch
// surface the real client uses. It runs a tiny scripted transition table —
// NOT the real engine — so tests can verify the UI renders exactly what the
// service said rather than anything it computed itself.

import type { FetchLike } from "../src/api.js";
import type { GridRender } from "../src/types.js";

export function makeRender(step: number, x: number, y: number): GridRender {
  return {
    schema_version: 1,
    width: 5,
    height: 5,
    agent: { x, y, dir: 0, carrying: null },
    step_count: step,
    done: false,
    cells: [{ x: 0, y: 0, kind: "wall" }],
  };
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export class MockService {
  requests: RecordedRequest[] = [];
  actionLog: number[] = [];
  saved: Record<string, { template: string; seed: number; actions: number[] }> = {};
  private step = 0;
  private x = 2;
  private runCurves: [number, number][][] = [];
  private runPoll = 0;
  runTotal = 9;

  /** Queue of curve prefixes the next run-status polls will return. */
  setRunCurves(curves: [number, number][][]): void {
    this.runCurves = curves;
    this.runPoll = 0;
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.requests.push({ method, path: url, body });
    return this.route(method, url, body);
  };

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private route(method: string, url: string, body: any): Response {
    if (url === "/templates") {
      return this.json({
        schema_version: 1,
        templates: [{ name: "DualHallway", width: 21, height: 13 }],
      });
    }
    if (url === "/sessions" && method === "POST") {
      this.step = 0;
      this.x = 2;
      return this.json({
        schema_version: 1,
        session_id: "s1",
        template: body.template,
        seed: body.seed ?? 99,
        render: makeRender(0, this.x, 2),
        cells_visited: 1,
        visited_cells: [[2, 2]],
      });
    }
    if (url === "/sessions/s1/actions" && method === "POST") {
      this.actionLog.push(body.action);
      this.step += 1;
      if (body.action === 2) this.x = Math.min(this.x + 1, 4);
      return this.json({
        schema_version: 1,
        render: makeRender(this.step, this.x, 2),
        outcome: body.action === 2 ? "moved" : "no_op",
        cells_visited: this.x - 1,
        visited_cells: [[2, 2]],
      });
    }
    if (url === "/sessions/s1/save" && method === "POST") {
      this.saved[body.name] = {
        template: "DualHallway",
        seed: 99,
        actions: [...this.actionLog],
      };
      return this.json({ schema_version: 1, name: body.name, steps: this.actionLog.length });
    }
    if (url === "/trajectories" && method === "GET") {
      return this.json({
        schema_version: 1,
        trajectories: Object.entries(this.saved).map(([name, t]) => ({
          name,
          template: t.template,
          seed: t.seed,
          steps: t.actions.length,
          author: "human",
        })),
      });
    }
    const trajMatch = url.match(/^\/trajectories\/(.+)$/);
    if (trajMatch) {
      const name = trajMatch[1];
      if (method === "DELETE") {
        delete this.saved[name];
        return this.json({ schema_version: 1, deleted: name });
      }
      const stored = this.saved[name];
      if (!stored) return this.json({ detail: "unknown trajectory" }, 404);
      return this.json({
        schema_version: 1,
        template: stored.template,
        seed: stored.seed,
        actions: stored.actions,
        digests: stored.actions.map(() => "0".repeat(16)),
        author: "human",
      });
    }
    if (url === "/runs" && method === "POST") {
      return this.json({
        schema_version: 1,
        run_id: "r1",
        template: body.template,
        instance_seed: 1,
        budget: body.budget,
        ground_truth_total: this.runTotal,
      });
    }
    if (url === "/runs/r1") {
      const index = Math.min(this.runPoll, this.runCurves.length - 1);
      const finished = this.runPoll >= this.runCurves.length - 1;
      this.runPoll += 1;
      return this.json({
        schema_version: 1,
        run_id: "r1",
        template: "DualHallway",
        status: finished ? "finished" : "running",
        error: null,
        ground_truth_total: this.runTotal,
        curve: this.runCurves[index],
        tree_offset: this.runPoll * 10,
      });
    }
    return this.json({ detail: `unhandled ${method} ${url}` }, 404);
  }
}
