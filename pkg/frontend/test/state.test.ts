import { describe, expect, it } from "vitest";

import type { TelemetryFrame } from "../src/protocol";
import { headingTarget, modeBands, UiSessionState, wrapAngle } from "../src/state";

export function makeFrame(t: number, over: Partial<TelemetryFrame> = {}): TelemetryFrame {
  return {
    t, x: 0, y: 0, theta: 0, v1: 1, v2: 0,
    u1: 0, u2: 0, u3: 0, sigma: 0,
    e1x: 0, e1y: 0, e2: 0, e3: 0,
    power: 1, energy: t, det: -1, singular_flag: false,
    ...over,
  };
}

describe("UiSessionState", () => {
  it("keeps frames time-ordered and trims to the horizon", () => {
    const s = new UiSessionState(10);
    for (let t = 0; t <= 25; t += 0.5) {
      s.pushFrame(makeFrame(t));
    }
    expect(s.latest?.t).toBe(25);
    expect(s.frames[0].t).toBeGreaterThanOrEqual(15);
    const ts = s.frames.map((f) => f.t);
    expect([...ts].sort((a, b) => a - b)).toEqual(ts);
  });

  it("clears history when the session time rewinds (reset)", () => {
    const s = new UiSessionState(60);
    s.pushFrame(makeFrame(5));
    s.pushFrame(makeFrame(6));
    s.pushFrame(makeFrame(0.1)); // reset happened on the bridge
    expect(s.frames.length).toBe(1);
    expect(s.latest?.t).toBe(0.1);
  });

  it("never mutates stored telemetry values", () => {
    const s = new UiSessionState(60);
    const frame = makeFrame(1, { v2: 0.25 });
    s.pushFrame(frame);
    expect(s.frames[0]).toBe(frame);
    expect(s.frames[0].v2).toBe(0.25);
  });
});

describe("modeBands", () => {
  it("segments constant-mode intervals in order", () => {
    const frames = [
      makeFrame(0, { sigma: 1 }),
      makeFrame(1, { sigma: 1 }),
      makeFrame(2, { sigma: 0 }),
      makeFrame(3, { sigma: 0 }),
      makeFrame(4, { sigma: 1 }),
    ];
    expect(modeBands(frames)).toEqual([
      { t0: 0, t1: 2, sigma: 1 },
      { t0: 2, t1: 4, sigma: 0 },
      { t0: 4, t1: 4, sigma: 1 },
    ]);
  });

  it("reflects a mode toggle in the band of the very next frame", () => {
    // one broadcast interval at 30 Hz
    const dt = 1 / 30;
    const frames = [makeFrame(0, { sigma: 1 }), makeFrame(dt, { sigma: 1 })];
    frames.push(makeFrame(2 * dt, { sigma: 0 })); // first frame after the command
    const bands = modeBands(frames);
    expect(bands[bands.length - 1]).toEqual({ t0: 2 * dt, t1: 2 * dt, sigma: 0 });
    expect(bands[bands.length - 1].t0 - frames[1].t).toBeLessThanOrEqual(dt + 1e-12);
  });

  it("handles empty history", () => {
    expect(modeBands([])).toEqual([]);
  });
});

describe("angles", () => {
  it("wraps to (-pi, pi]", () => {
    expect(wrapAngle(Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(wrapAngle(-Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(wrapAngle(3 * Math.PI / 2)).toBeCloseTo(-Math.PI / 2, 12);
    expect(wrapAngle(0.3)).toBeCloseTo(0.3, 12);
  });

  it("reconstructs the heading target from frame fields only", () => {
    // theta wrapped at 3.0 rad, error 0.5 rad: target wraps past pi
    const f = makeFrame(1, { theta: 3.0, e2: 0.5 });
    expect(headingTarget(f)).toBeCloseTo(3.5 - 2 * Math.PI, 12);
  });
});
