import type { NodeView, SeriesPoint } from "./viewmodel.js";

const HOT_COLORS = ["#d1495b", "#e07a5f", "#b5446e", "#c9472f"];
const COOL_COLORS = ["#1f6f8b", "#2a9d8f", "#4059ad", "#52796f"];

export interface ChartLine {
  node: number;
  hot: boolean;
  grayed: boolean;
  points: SeriesPoint[];
}

export function buildLines(
  views: NodeView[],
  series: Map<number, SeriesPoint[]>,
): ChartLine[] {
  return views
    .filter((v) => series.has(v.id) && (series.get(v.id) as SeriesPoint[]).length > 0)
    .map((v) => ({
      node: v.id,
      hot: v.hot,
      grayed: v.grayed,
      points: series.get(v.id) as SeriesPoint[],
    }));
}

export function lineColor(line: ChartLine, index: number): string {
  if (line.grayed) return "#9a9a9a";
  const palette = line.hot ? HOT_COLORS : COOL_COLORS;
  return palette[index % palette.length];
}

export function renderChart(
  canvas: HTMLCanvasElement,
  lines: ChartLine[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);

  if (lines.length === 0) {
    ctx.fillStyle = "#777";
    ctx.font = "14px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("no data", w / 2, h / 2);
    return;
  }

  const pad = { left: 44, right: 96, top: 12, bottom: 24 };
  let t0 = Infinity,
    t1 = -Infinity,
    y0 = Infinity,
    y1 = -Infinity;
  for (const line of lines) {
    for (const p of line.points) {
      t0 = Math.min(t0, p.bucket);
      t1 = Math.max(t1, p.bucket);
      y0 = Math.min(y0, p.mean);
      y1 = Math.max(y1, p.mean);
    }
  }
  if (t1 === t0) t1 = t0 + 1;
  y0 = Math.floor(y0 - 0.5);
  y1 = Math.ceil(y1 + 0.5);

  const px = (t: number) =>
    pad.left + ((t - t0) / (t1 - t0)) * (w - pad.left - pad.right);
  const py = (y: number) =>
    h - pad.bottom - ((y - y0) / (y1 - y0)) * (h - pad.top - pad.bottom);

  ctx.strokeStyle = "#ddd";
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "right";
  for (let y = y0; y <= y1; y += Math.max(1, Math.round((y1 - y0) / 6))) {
    ctx.beginPath();
    ctx.moveTo(pad.left, py(y));
    ctx.lineTo(w - pad.right, py(y));
    ctx.stroke();
    ctx.fillText(`${y}°`, pad.left - 6, py(y) + 4);
  }
  ctx.textAlign = "center";
  const dayMinutes = 1440;
  for (let t = Math.ceil(t0 / dayMinutes) * dayMinutes; t <= t1; t += dayMinutes) {
    ctx.fillText(`day ${t / dayMinutes}`, px(t), h - 6);
  }

  lines.forEach((line, i) => {
    ctx.strokeStyle = lineColor(line, i);
    ctx.lineWidth = line.grayed ? 1 : 1.6;
    ctx.beginPath();
    line.points.forEach((p, j) => {
      if (j === 0) ctx.moveTo(px(p.bucket), py(p.mean));
      else ctx.lineTo(px(p.bucket), py(p.mean));
    });
    ctx.stroke();
    const last = line.points[line.points.length - 1];
    ctx.fillStyle = lineColor(line, i);
    ctx.textAlign = "left";
    ctx.fillText(
      `N${line.node}${line.grayed ? " (dead)" : ""}`,
      px(last.bucket) + 6,
      py(last.mean) + 4,
    );
  });
}
