// Top-down scene: vehicle footprint oriented by the heading, motion trail,
// reference path (reconstructed from position + error fields), obstacle
// markers and a mode badge.

import type { TelemetryFrame } from "./protocol";

export interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export interface Obstacle {
  x: number;
  y: number;
}

export const MODE_COLORS: Record<0 | 1, string> = {
  0: "#9e9e9e", // energy-saving: gray
  1: "#ff8c1a", // dexterous: orange
};

export function referencePoint(frame: TelemetryFrame): { x: number; y: number } {
  return { x: frame.x + frame.e1x, y: frame.y + frame.e1y };
}

/** Square bounds containing trail, reference trail and obstacles, padded. */
export function sceneBounds(frames: readonly TelemetryFrame[], obstacles: readonly Obstacle[]): Bounds {
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  const take = (x: number, y: number) => {
    xMin = Math.min(xMin, x); xMax = Math.max(xMax, x);
    yMin = Math.min(yMin, y); yMax = Math.max(yMax, y);
  };
  for (const f of frames) {
    take(f.x, f.y);
    const r = referencePoint(f);
    take(r.x, r.y);
  }
  for (const o of obstacles) {
    take(o.x, o.y);
  }
  if (!Number.isFinite(xMin)) {
    return { xMin: -10, xMax: 10, yMin: -10, yMax: 10 };
  }
  const cx = (xMin + xMax) / 2;
  const cy = (yMin + yMax) / 2;
  const half = Math.max((xMax - xMin) / 2, (yMax - yMin) / 2, 1.0) * 1.15;
  return { xMin: cx - half, xMax: cx + half, yMin: cy - half, yMax: cy + half };
}

/** World -> canvas transform (y axis flipped so +y points up on screen). */
export function worldToCanvas(b: Bounds, width: number, height: number) {
  const sx = width / (b.xMax - b.xMin);
  const sy = height / (b.yMax - b.yMin);
  return (x: number, y: number): [number, number] => [
    (x - b.xMin) * sx,
    height - (y - b.yMin) * sy,
  ];
}

/** Obstacles from a "x1,y1;x2,y2" query-parameter string (decorative markers). */
export function parseObstacles(spec: string | null): Obstacle[] {
  if (!spec) {
    return [];
  }
  const out: Obstacle[] = [];
  for (const pair of spec.split(";")) {
    const [xs, ys] = pair.split(",");
    const x = Number(xs);
    const y = Number(ys);
    if (Number.isFinite(x) && Number.isFinite(y)) {
      out.push({ x, y });
    }
  }
  return out;
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  frames: readonly TelemetryFrame[],
  obstacles: readonly Obstacle[],
  connectionLost: boolean,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#14171c";
  ctx.fillRect(0, 0, width, height);
  if (frames.length === 0) {
    ctx.fillStyle = "#aab";
    ctx.font = "14px system-ui, sans-serif";
    ctx.fillText("waiting for telemetry...", 16, 28);
    return;
  }
  const bounds = sceneBounds(frames, obstacles);
  const toPx = worldToCanvas(bounds, width, height);
  const latest = frames[frames.length - 1];

  // reference path
  ctx.strokeStyle = "#5a6472";
  ctx.setLineDash([6, 5]);
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  frames.forEach((f, i) => {
    const r = referencePoint(f);
    const [px, py] = toPx(r.x, r.y);
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.setLineDash([]);

  // motion trail colored by mode
  ctx.lineWidth = 2;
  for (let i = 1; i < frames.length; i++) {
    ctx.strokeStyle = MODE_COLORS[frames[i].sigma];
    ctx.beginPath();
    const [ax, ay] = toPx(frames[i - 1].x, frames[i - 1].y);
    const [bx, by] = toPx(frames[i].x, frames[i].y);
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }

  // obstacles
  for (const o of obstacles) {
    const [px, py] = toPx(o.x, o.y);
    ctx.fillStyle = "#d64545";
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fill();
  }

  // vehicle footprint
  const [vx, vy] = toPx(latest.x, latest.y);
  const scale = width / (bounds.xMax - bounds.xMin);
  const bodyL = Math.max(0.9 * scale, 14);
  const bodyW = Math.max(0.6 * scale, 9);
  ctx.save();
  ctx.translate(vx, vy);
  ctx.rotate(-latest.theta); // canvas y is flipped
  ctx.fillStyle = latest.singular_flag ? "#d64545" : "#3da5ff";
  ctx.fillRect(-bodyL / 2, -bodyW / 2, bodyL, bodyW);
  ctx.fillStyle = "#ffffff";
  ctx.beginPath();
  ctx.moveTo(bodyL / 2, 0);
  ctx.lineTo(bodyL / 5, -bodyW / 3);
  ctx.lineTo(bodyL / 5, bodyW / 3);
  ctx.closePath();
  ctx.fill();
  ctx.restore();

  // mode badge
  ctx.fillStyle = MODE_COLORS[latest.sigma];
  ctx.fillRect(12, 12, 14, 14);
  ctx.fillStyle = "#e8e8e8";
  ctx.font = "13px system-ui, sans-serif";
  ctx.fillText(latest.sigma === 1 ? "dexterous" : "energy-saving", 32, 24);
  ctx.fillText(`t = ${latest.t.toFixed(2)} s`, 32, 42);

  if (connectionLost) {
    ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#ff6b6b";
    ctx.font = "bold 18px system-ui, sans-serif";
    ctx.fillText("disconnected", width / 2 - 55, height / 2);
  }
}
