// Client-side session state: the latest frame plus a time-ordered ring
// buffer of recent history. Telemetry values are never mutated; everything
// shown in the charts is a projection of buffered frames, keyed by frame
// timestamps (replayed logs render identically).

import type { TelemetryFrame } from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ModeBand {
  t0: number;
  t1: number;
  sigma: 0 | 1;
}

export class UiSessionState {
  readonly horizon: number;
  frames: TelemetryFrame[] = [];
  connection: ConnectionStatus = "connecting";

  constructor(horizonSeconds = 60) {
    this.horizon = horizonSeconds;
  }

  get latest(): TelemetryFrame | null {
    return this.frames.length ? this.frames[this.frames.length - 1] : null;
  }

  pushFrame(frame: TelemetryFrame): void {
    const last = this.latest;
    if (last !== null && frame.t < last.t) {
      // session was reset: history before the rewind is no longer comparable
      this.frames = [];
    }
    this.frames.push(frame);
    const cutoff = frame.t - this.horizon;
    let drop = 0;
    while (drop < this.frames.length && this.frames[drop].t < cutoff) {
      drop += 1;
    }
    if (drop > 0) {
      this.frames = this.frames.slice(drop);
    }
  }
}

/** Constant-mode intervals covering the buffered history (for band shading). */
export function modeBands(frames: readonly TelemetryFrame[]): ModeBand[] {
  if (frames.length === 0) {
    return [];
  }
  const bands: ModeBand[] = [];
  let start = frames[0].t;
  let sigma = frames[0].sigma;
  for (const frame of frames) {
    if (frame.sigma !== sigma) {
      bands.push({ t0: start, t1: frame.t, sigma });
      start = frame.t;
      sigma = frame.sigma;
    }
  }
  bands.push({ t0: start, t1: frames[frames.length - 1].t, sigma });
  return bands;
}

/** Wrap an angle to (-pi, pi]. */
export function wrapAngle(a: number): number {
  const m = (((Math.PI - a) % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI);
  return Math.PI - m;
}

/** Heading target reconstructed from frame fields (theta + e2, wrapped). */
export function headingTarget(frame: TelemetryFrame): number {
  return wrapAngle(frame.theta + frame.e2);
}
