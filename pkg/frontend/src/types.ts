// Wire types mirroring the demo service's JSON schema (schema_version 1).

export interface CarriedItem {
  kind: "key" | "ball";
  color: string;
  key_id?: string;
}

export interface AgentView {
  x: number;
  y: number;
  dir: number;
  carrying: CarriedItem | null;
}

export interface CellView {
  x: number;
  y: number;
  kind: string;
  color?: string;
  open?: boolean;
  locked?: boolean;
  required_keys?: string[];
  applied_keys?: string[];
  key_id?: string;
}

export interface GridRender {
  schema_version: number;
  width: number;
  height: number;
  agent: AgentView;
  step_count: number;
  done: boolean;
  cells: CellView[];
}

export interface SessionInfo {
  session_id: string;
  template: string;
  seed: number;
  render: GridRender;
  cells_visited: number;
  visited_cells?: [number, number][];
}

export interface ActionResult {
  render: GridRender;
  outcome: string;
  cells_visited: number;
  visited_cells: [number, number][];
}

export interface TemplateInfo {
  name: string;
  width: number;
  height: number;
}

export interface TrajectoryInfo {
  name: string;
  template: string;
  seed: number;
  steps: number;
  author: string;
}

export interface TrajectoryFile {
  schema_version: number;
  template: string;
  seed: number;
  actions: number[];
  digests: string[];
  author: string;
}

export interface RunStarted {
  run_id: string;
  template: string;
  instance_seed: number;
  budget: number;
  ground_truth_total: number;
}

export interface RunStatus {
  run_id: string;
  template: string;
  status: "running" | "finished" | "failed";
  error: string | null;
  ground_truth_total: number;
  curve: [number, number][];
  tree_offset: number;
}
