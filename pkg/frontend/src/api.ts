// Thin typed client over the demo service. The fetch function is injected
// so tests can substitute a mock transport.

import type {
  ActionResult,
  RunStarted,
  RunStatus,
  SessionInfo,
  TemplateInfo,
  TrajectoryFile,
  TrajectoryInfo,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && body.detail) detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listTemplates(): Promise<{ templates: TemplateInfo[] }> {
    return this.request("/templates");
  }

  createSession(template: string, seed?: number): Promise<SessionInfo> {
    return this.post("/sessions", seed === undefined ? { template } : { template, seed });
  }

  submitAction(sessionId: string, action: number): Promise<ActionResult> {
    return this.post(`/sessions/${sessionId}/actions`, { action });
  }

  saveTrajectory(sessionId: string, name: string): Promise<{ name: string; steps: number }> {
    return this.post(`/sessions/${sessionId}/save`, { name });
  }

  listTrajectories(): Promise<{ trajectories: TrajectoryInfo[] }> {
    return this.request("/trajectories");
  }

  getTrajectory(name: string): Promise<TrajectoryFile> {
    return this.request(`/trajectories/${name}`);
  }

  deleteTrajectory(name: string): Promise<{ deleted: string }> {
    return this.request(`/trajectories/${name}`, { method: "DELETE" });
  }

  startRun(params: Record<string, unknown>): Promise<RunStarted> {
    return this.post("/runs", params);
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request(`/runs/${runId}`);
  }
}
