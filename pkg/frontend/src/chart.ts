// Canvas renderer: series overlay (previous dimmed), anchors with
// confidence error bars, trend preview, shaded segments.

import { ConstraintSet } from "./schema.js";
import { PlotArea, dataToPixel, errorBarHalfHeight } from "./transform.js";

export interface ChartInputs {
  latest: number[][] | null;
  previous: number[][] | null;
  constraints: ConstraintSet;
  channel: number;
  seqLen: number;
  residuals: Map<string, number>; // "t:c" -> residual from the last response
}

export function plotArea(canvas: { width: number; height: number }, seqLen: number): PlotArea {
  return {
    left: 46,
    top: 12,
    width: canvas.width - 46 - 14,
    height: canvas.height - 12 - 30,
    tMax: seqLen - 1,
    yMin: -0.15,
    yMax: 1.15,
  };
}

function drawAxes(ctx: CanvasRenderingContext2D, area: PlotArea): void {
  ctx.strokeStyle = "#ccd3dc";
  ctx.lineWidth = 1;
  ctx.font = "11px sans-serif";
  ctx.fillStyle = "#667";
  for (const v of [0, 0.25, 0.5, 0.75, 1]) {
    const { y } = dataToPixel(area, 0, v);
    ctx.beginPath();
    ctx.moveTo(area.left, y);
    ctx.lineTo(area.left + area.width, y);
    ctx.stroke();
    ctx.fillText(v.toFixed(2), 8, y + 4);
  }
  const step = Math.max(1, Math.round(area.tMax / 8));
  for (let t = 0; t <= area.tMax; t += step) {
    const { x } = dataToPixel(area, t, 0);
    ctx.fillText(String(t), x - 4, area.top + area.height + 18);
  }
}

function drawSeries(
  ctx: CanvasRenderingContext2D,
  area: PlotArea,
  series: number[][],
  channel: number,
  color: string,
  width: number,
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  series.forEach((row, t) => {
    const { x, y } = dataToPixel(area, t, row[channel]);
    if (t === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

export function drawChart(ctx: CanvasRenderingContext2D, area: PlotArea, inputs: ChartInputs): void {
  ctx.clearRect(0, 0, area.left + area.width + 14, area.top + area.height + 30);
  drawAxes(ctx, area);

  // shaded segment spans on the edited channel
  for (const seg of inputs.constraints.segments) {
    if (seg.c !== inputs.channel) continue;
    const a = dataToPixel(area, seg.s, 0).x;
    const b = dataToPixel(area, seg.e, 0).x;
    ctx.fillStyle = "rgba(250, 200, 80, 0.18)";
    ctx.fillRect(a, area.top, b - a, area.height);
  }

  // trend preview
  for (const trend of inputs.constraints.trends) {
    if (trend.c !== inputs.channel) continue;
    ctx.strokeStyle = "#2a9d8f";
    ctx.setLineDash([6, 4]);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    trend.knots.forEach(([t, v], i) => {
      const { x, y } = dataToPixel(area, t, v);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (inputs.previous) drawSeries(ctx, area, inputs.previous, inputs.channel, "#b9c4d4", 1.2);
  if (inputs.latest) drawSeries(ctx, area, inputs.latest, inputs.channel, "#27662d", 2);

  // anchors: dot plus an error bar of half-height (1 - confidence)
  for (const p of inputs.constraints.points) {
    if (p.c !== inputs.channel) continue;
    const { x, y } = dataToPixel(area, p.t, p.v);
    const half = errorBarHalfHeight(area, p.w);
    ctx.strokeStyle = "#c43d3d";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(x, y - half);
    ctx.lineTo(x, y + half);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(x - 4, y - half);
    ctx.lineTo(x + 4, y - half);
    ctx.moveTo(x - 4, y + half);
    ctx.lineTo(x + 4, y + half);
    ctx.stroke();
    ctx.fillStyle = "#c43d3d";
    ctx.beginPath();
    ctx.arc(x, y, 3.5, 0, 2 * Math.PI);
    ctx.fill();
    const residual = inputs.residuals.get(`${p.t}:${p.c}`);
    if (residual !== undefined) {
      ctx.fillStyle = "#555";
      ctx.font = "10px sans-serif";
      ctx.fillText(residual.toFixed(4), x + 6, y - 6);
    }
  }
}
