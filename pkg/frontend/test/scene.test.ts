import { describe, expect, it } from "vitest";

import { parseObstacles, referencePoint, sceneBounds, worldToCanvas } from "../src/scene";
import { makeFrame } from "./state.test";

describe("referencePoint", () => {
  it("reconstructs the target from position plus error", () => {
    const f = makeFrame(0, { x: 1.0, y: -7.0, e1x: -1.0, e1y: -1.0 });
    expect(referencePoint(f)).toEqual({ x: 0.0, y: -8.0 });
  });
});

describe("sceneBounds", () => {
  it("contains trail, reference and obstacles, square with padding", () => {
    const frames = [
      makeFrame(0, { x: -2, y: 0 }),
      makeFrame(1, { x: 4, y: 3, e1x: 2, e1y: 2 }),
    ];
    const b = sceneBounds(frames, [{ x: 0, y: -6 }]);
    expect(b.xMin).toBeLessThanOrEqual(-2);
    expect(b.xMax).toBeGreaterThanOrEqual(6); // reference point at x=6
    expect(b.yMin).toBeLessThanOrEqual(-6);
    expect(b.yMax).toBeGreaterThanOrEqual(5);
    expect(b.xMax - b.xMin).toBeCloseTo(b.yMax - b.yMin, 9); // square aspect
  });

  it("falls back to a default window with no data", () => {
    const b = sceneBounds([], []);
    expect(b.xMax - b.xMin).toBeGreaterThan(0);
  });
});

describe("worldToCanvas", () => {
  it("maps corners and flips the vertical axis", () => {
    const toPx = worldToCanvas({ xMin: -10, xMax: 10, yMin: -10, yMax: 10 }, 200, 200);
    expect(toPx(-10, -10)).toEqual([0, 200]);
    expect(toPx(10, 10)).toEqual([200, 0]);
    expect(toPx(0, 0)).toEqual([100, 100]);
  });
});

describe("parseObstacles", () => {
  it("parses semicolon-separated pairs and skips junk", () => {
    expect(parseObstacles("1,2;-3,4.5")).toEqual([{ x: 1, y: 2 }, { x: -3, y: 4.5 }]);
    expect(parseObstacles("1,2;nope;3")).toEqual([{ x: 1, y: 2 }]);
    expect(parseObstacles(null)).toEqual([]);
    expect(parseObstacles("")).toEqual([]);
  });
});
