// Canvas tile renderer. Pure drawing from a GridRender payload — the cell
// palette mirrors the engine's color names so doors and keys look familiar.

import type { CellView, GridRender } from "./types.js";

const COLOR_HEX: Record<string, string> = {
  red: "#e74c3c",
  green: "#2ecc71",
  blue: "#3498db",
  purple: "#9b59b6",
  yellow: "#f1c40f",
  grey: "#95a5a6",
};

const FLOOR = "#1b1b24";
const WALL = "#4a4a5a";
const GOAL = "#27ae60";
const AGENT = "#e74c3c";

export function drawGrid(
  ctx: CanvasRenderingContext2D,
  grid: GridRender,
  visited: [number, number][],
  tile = 28,
): void {
  ctx.canvas.width = grid.width * tile;
  ctx.canvas.height = grid.height * tile;
  ctx.fillStyle = FLOOR;
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  ctx.fillStyle = "rgba(46, 204, 113, 0.15)";
  for (const [x, y] of visited) {
    ctx.fillRect(x * tile, y * tile, tile, tile);
  }

  for (const cell of grid.cells) {
    drawCell(ctx, cell, tile);
  }

  // agent: triangle pointing along its facing direction
  const ax = grid.agent.x * tile + tile / 2;
  const ay = grid.agent.y * tile + tile / 2;
  const r = tile * 0.36;
  const angle = (grid.agent.dir * Math.PI) / 2; // 0=east
  ctx.fillStyle = AGENT;
  ctx.beginPath();
  ctx.moveTo(ax + r * Math.cos(angle), ay + r * Math.sin(angle));
  ctx.lineTo(ax + r * Math.cos(angle + 2.5), ay + r * Math.sin(angle + 2.5));
  ctx.lineTo(ax + r * Math.cos(angle - 2.5), ay + r * Math.sin(angle - 2.5));
  ctx.closePath();
  ctx.fill();
  if (grid.agent.carrying) {
    ctx.fillStyle = COLOR_HEX[grid.agent.carrying.color] ?? "#fff";
    ctx.fillRect(ax - 3, ay - 3, 6, 6);
  }
}

function drawCell(ctx: CanvasRenderingContext2D, cell: CellView, tile: number): void {
  const px = cell.x * tile;
  const py = cell.y * tile;
  const color = COLOR_HEX[cell.color ?? ""] ?? WALL;
  switch (cell.kind) {
    case "wall":
      ctx.fillStyle = WALL;
      ctx.fillRect(px, py, tile, tile);
      break;
    case "goal":
      ctx.fillStyle = GOAL;
      ctx.fillRect(px, py, tile, tile);
      break;
    case "door":
    case "multilock_door": {
      ctx.strokeStyle = color;
      ctx.lineWidth = 3;
      if (cell.open) {
        ctx.strokeRect(px + 2, py + 2, 5, tile - 4);
      } else {
        ctx.strokeRect(px + 2, py + 2, tile - 4, tile - 4);
        ctx.fillStyle = color;
        ctx.beginPath();
        ctx.arc(px + tile * 0.7, py + tile / 2, 2.5, 0, Math.PI * 2);
        ctx.fill();
      }
      if (cell.kind === "multilock_door" && !cell.open) {
        // lock progress: one pip per applied key of the required set
        const required = cell.required_keys ?? [];
        const applied = new Set(cell.applied_keys ?? []);
        required.forEach((key, i) => {
          ctx.fillStyle = applied.has(key) ? "#2ecc71" : "#555";
          ctx.fillRect(px + 5 + i * 7, py + tile - 8, 5, 4);
        });
      }
      break;
    }
    case "key": {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(px + tile / 2, py + tile * 0.38, tile * 0.16, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillRect(px + tile / 2 - 2, py + tile * 0.45, 4, tile * 0.35);
      break;
    }
    case "ball": {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(px + tile / 2, py + tile / 2, tile * 0.3, 0, Math.PI * 2);
      ctx.fill();
      break;
    }
    case "heavy_ball": {
      ctx.fillStyle = "#666";
      ctx.beginPath();
      ctx.arc(px + tile / 2, py + tile / 2, tile * 0.38, 0, Math.PI * 2);
      ctx.fill();
      ctx.strokeStyle = "#999";
      ctx.stroke();
      break;
    }
  }
}
