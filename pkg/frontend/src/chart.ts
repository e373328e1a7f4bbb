// Coverage-vs-iteration chart drawn on a canvas: step curve, ground-truth
// ceiling, and a vertical marker at the saturation iteration.

export function drawCurve(
  ctx: CanvasRenderingContext2D,
  curve: [number, number][],
  total: number,
  budget: number,
  saturation: number | null,
): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  const ml = 42;
  const mb = 24;
  ctx.fillStyle = "#11111a";
  ctx.fillRect(0, 0, w, h);

  const maxIter = Math.max(budget, curve.length > 0 ? curve[curve.length - 1][0] : 1, 1);
  const sx = (it: number) => ml + ((w - ml - 8) * it) / maxIter;
  const sy = (count: number) => h - mb - ((h - mb - 8) * count) / Math.max(total, 1);

  ctx.strokeStyle = "#444";
  ctx.beginPath();
  ctx.moveTo(ml, 8);
  ctx.lineTo(ml, h - mb);
  ctx.lineTo(w - 8, h - mb);
  ctx.stroke();

  // ground-truth ceiling
  ctx.strokeStyle = "#2ecc71";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(ml, sy(total));
  ctx.lineTo(w - 8, sy(total));
  ctx.stroke();
  ctx.setLineDash([]);

  if (curve.length > 0) {
    ctx.strokeStyle = "#3498db";
    ctx.lineWidth = 2;
    ctx.beginPath();
    let prevCount = 0;
    ctx.moveTo(sx(0), sy(0));
    for (const [iteration, count] of curve) {
      ctx.lineTo(sx(iteration), sy(prevCount));
      ctx.lineTo(sx(iteration), sy(count));
      prevCount = count;
    }
    ctx.lineTo(sx(maxIter), sy(prevCount));
    ctx.stroke();
    ctx.lineWidth = 1;
  }

  if (saturation !== null) {
    ctx.strokeStyle = "#f1c40f";
    ctx.beginPath();
    ctx.moveTo(sx(saturation), 8);
    ctx.lineTo(sx(saturation), h - mb);
    ctx.stroke();
    ctx.fillStyle = "#f1c40f";
    ctx.font = "11px sans-serif";
    ctx.fillText(`saturated @ ${saturation}`, Math.min(sx(saturation) + 4, w - 90), 18);
  }

  ctx.fillStyle = "#aaa";
  ctx.font = "11px sans-serif";
  ctx.fillText("iterations", w / 2 - 20, h - 6);
  ctx.save();
  ctx.translate(12, h / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText("novel states", 0, 0);
  ctx.restore();
  ctx.fillText(String(total), 4, sy(total) + 4);
}
