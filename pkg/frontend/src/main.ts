// DOM bootstrap: wires the three screens (play, trajectories, run watch)
// to their controllers. All state comes from the service; this file only
// moves JSON into widgets.

import { Api } from "./api.js";
import { drawCurve } from "./chart.js";
import { ACTION_NAMES, actionForKey } from "./keymap.js";
import { PlayController, PlayView } from "./play.js";
import { drawGrid } from "./renderer.js";
import { RunWatchController, RunWatchView } from "./runwatch.js";
import { TrajectoryManager, TrajectoryView } from "./trajectories.js";
import type { GridRender, RunStatus, TrajectoryInfo } from "./types.js";

const api = new Api("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

// ---------------------------------------------------------------------------
// Tabs

for (const tab of ["play", "trajectories", "runs"]) {
  el<HTMLButtonElement>(`tab-${tab}`).addEventListener("click", () => {
    for (const other of ["play", "trajectories", "runs"]) {
      el(`screen-${other}`).style.display = other === tab ? "block" : "none";
      el(`tab-${other}`).classList.toggle("active", other === tab);
    }
    if (tab === "trajectories") void trajectories.refresh();
  });
}

// ---------------------------------------------------------------------------
// Play screen

const playCanvas = el<HTMLCanvasElement>("play-canvas");
const playCtx = playCanvas.getContext("2d")!;

const playView: PlayView = {
  render(grid: GridRender, visited: [number, number][], cellsVisited: number) {
    drawGrid(playCtx, grid, visited);
    el("cell-counter").textContent = String(cellsVisited);
    el("step-counter").textContent = String(grid.step_count);
    el("done-flag").textContent = grid.done ? "done" : "";
  },
  showOutcome(outcome: string) {
    const banner = el("outcome");
    banner.textContent = outcome.replace("_", " ");
    banner.className = outcome === "blocked" || outcome === "no_op" ? "outcome bad" : "outcome";
  },
  showError(message: string) {
    el("play-error").textContent = message;
  },
  sessionSaved(name: string) {
    el("play-error").textContent = `saved as ${name}`;
  },
};

const play = new PlayController(api, playView);

async function populateTemplates(): Promise<void> {
  const { templates } = await api.listTemplates();
  for (const selectId of ["template-select", "run-template"]) {
    const select = el<HTMLSelectElement>(selectId);
    select.innerHTML = "";
    for (const template of templates) {
      const option = document.createElement("option");
      option.value = template.name;
      option.textContent = template.name;
      select.appendChild(option);
    }
  }
}

el<HTMLButtonElement>("start-session").addEventListener("click", () => {
  const template = el<HTMLSelectElement>("template-select").value;
  const seedText = el<HTMLInputElement>("seed-input").value.trim();
  const seed = seedText === "" ? undefined : Number(seedText);
  void play.start(template, seed).catch((err) => playView.showError(String(err)));
});

el<HTMLButtonElement>("save-session").addEventListener("click", () => {
  const name = el<HTMLInputElement>("save-name").value.trim();
  if (name) void play.save(name);
});

document.addEventListener("keydown", (event) => {
  if (document.activeElement instanceof HTMLInputElement) return;
  if (actionForKey(event.key) !== null) {
    event.preventDefault();
    play.handleKey(event.key);
  }
});

el("keymap-help").textContent =
  "← → turn, ↑ forward, P pickup, D drop, T toggle, Enter done — actions: " +
  ACTION_NAMES.join(", ");

// ---------------------------------------------------------------------------
// Trajectory manager

const replayCanvas = el<HTMLCanvasElement>("replay-canvas");
const replayCtx = replayCanvas.getContext("2d")!;

const trajectoryView: TrajectoryView = {
  showList(items: TrajectoryInfo[]) {
    const list = el("trajectory-list");
    list.innerHTML = "";
    for (const item of items) {
      const row = document.createElement("div");
      row.className = "traj-row";
      const label = document.createElement("span");
      label.textContent = `${item.name} — ${item.template} seed ${item.seed}, ${item.steps} steps (${item.author})`;
      row.appendChild(label);
      for (const [text, handler] of [
        ["replay", () => void trajectories.replay(item.name)],
        ["download", () => void trajectories.download(item.name)],
        ["delete", () => void trajectories.remove(item.name)],
      ] as const) {
        const button = document.createElement("button");
        button.textContent = text;
        button.addEventListener("click", handler);
        row.appendChild(button);
      }
      list.appendChild(row);
    }
  },
  showFrame(grid: GridRender, step: number, totalSteps: number) {
    drawGrid(replayCtx, grid, []);
    el("replay-progress").textContent = `${step}/${totalSteps}`;
  },
  replayDone() {
    el("replay-progress").textContent += " ✓";
  },
  offerDownload(name: string, content: string) {
    const blob = new Blob([content], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${name}.json`;
    link.click();
    URL.revokeObjectURL(link.href);
  },
  showError(message: string) {
    el("replay-progress").textContent = message;
  },
};

const trajectories = new TrajectoryManager(api, trajectoryView);

// ---------------------------------------------------------------------------
// Run watch

const chartCanvas = el<HTMLCanvasElement>("run-canvas");
const chartCtx = chartCanvas.getContext("2d")!;
let runBudget = 2000;

const runView: RunWatchView = {
  update(status: RunStatus, saturation: number | null) {
    el("run-status").textContent =
      `${status.status} — ${status.curve.length > 0 ? status.curve[status.curve.length - 1][1] : 0}` +
      `/${status.ground_truth_total} cells, tree ${status.tree_offset} nodes`;
    drawCurve(chartCtx, status.curve, status.ground_truth_total, runBudget, saturation);
  },
  finished(status: RunStatus) {
    el("run-status").textContent += " · finished";
  },
  failed(message: string) {
    el("run-status").textContent = `failed: ${message}`;
  },
};

const runWatch = new RunWatchController(api, runView);

el<HTMLButtonElement>("start-run").addEventListener("click", () => {
  runWatch.stop();
  runBudget = Number(el<HTMLInputElement>("run-budget").value) || 2000;
  const params: Record<string, unknown> = {
    template: el<HTMLSelectElement>("run-template").value,
    method: el<HTMLSelectElement>("run-method").value,
    budget: runBudget,
  };
  const seedText = el<HTMLInputElement>("run-seed").value.trim();
  if (seedText !== "") params.instance_seed = Number(seedText);
  const trajectory = el<HTMLInputElement>("run-trajectory").value.trim();
  if (trajectory) params.trajectory = trajectory;
  const model = el<HTMLInputElement>("run-model").value.trim();
  if (model) params.model = model;
  void runWatch.start(params).catch((err) => runView.failed(String(err)));
});

void populateTemplates().catch((err) => playView.showError(String(err)));
