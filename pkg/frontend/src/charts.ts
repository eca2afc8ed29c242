// Strip charts over the buffered history with mode-colored background bands
// (gray: energy-saving, orange: dexterous). X positions come from frame
// timestamps only.

import type { TelemetryFrame } from "./protocol";
import { modeBands } from "./state";

export interface Series {
  label: string;
  color: string;
  value: (f: TelemetryFrame) => number;
}

const BAND_FILL: Record<0 | 1, string> = {
  0: "rgba(160, 160, 160, 0.18)",
  1: "rgba(255, 140, 26, 0.20)",
};

export function valueRange(
  frames: readonly TelemetryFrame[],
  series: readonly Series[],
): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const f of frames) {
    for (const s of series) {
      const v = s.value(f);
      if (Number.isFinite(v)) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (!Number.isFinite(lo)) {
    return [-1, 1];
  }
  if (hi - lo < 1e-9) {
    const pad = Math.max(Math.abs(hi), 1e-3) * 0.1 + 1e-6;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * 0.08;
  return [lo - pad, hi + pad];
}

export function drawStripChart(
  ctx: CanvasRenderingContext2D,
  frames: readonly TelemetryFrame[],
  series: readonly Series[],
  title: string,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#14171c";
  ctx.fillRect(0, 0, width, height);
  ctx.fillStyle = "#cfd5dd";
  ctx.font = "12px system-ui, sans-serif";
  ctx.fillText(title, 8, 14);
  if (frames.length < 2) {
    return;
  }
  const t0 = frames[0].t;
  const t1 = frames[frames.length - 1].t;
  const span = Math.max(t1 - t0, 1e-9);
  const [lo, hi] = valueRange(frames, series);
  const toX = (t: number) => ((t - t0) / span) * width;
  const toY = (v: number) => height - ((v - lo) / (hi - lo)) * (height - 22) - 4;

  for (const band of modeBands(frames)) {
    ctx.fillStyle = BAND_FILL[band.sigma];
    ctx.fillRect(toX(band.t0), 0, Math.max(toX(band.t1) - toX(band.t0), 1), height);
  }

  if (lo < 0 && hi > 0) {
    ctx.strokeStyle = "#3a4148";
    ctx.beginPath();
    ctx.moveTo(0, toY(0));
    ctx.lineTo(width, toY(0));
    ctx.stroke();
  }

  series.forEach((s, idx) => {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    frames.forEach((f, i) => {
      const px = toX(f.t);
      const py = toY(s.value(f));
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, 8 + 72 * idx, 26);
  });

  ctx.fillStyle = "#8a93a0";
  const last = series.map((s) => `${s.label}=${s.value(frames[frames.length - 1]).toFixed(3)}`);
  ctx.fillText(last.join("  "), 8, height - 6);
}
