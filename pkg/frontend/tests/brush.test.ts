import { describe, expect, it } from "vitest";

import { StrokeRecorder, coalesceStroke, strokeToEditOps } from "../src/brush.js";
import type { BrushSettings } from "../src/session.js";

const brush: BrushSettings = { radius: 10, hardness: 0.5, value: 1.5, mode: "set" };

describe("StrokeRecorder", () => {
  it("records samples only while the pointer is down", () => {
    const r = new StrokeRecorder();
    r.pointerMove({ x: 1, y: 1 });
    expect(r.pointerUp()).toEqual([]);
    r.pointerDown({ x: 2, y: 2 });
    r.pointerMove({ x: 3, y: 3 });
    expect(r.pointerUp()).toEqual([
      { x: 2, y: 2 },
      { x: 3, y: 3 },
    ]);
    // a finished stroke does not leak into the next one
    r.pointerDown({ x: 9, y: 9 });
    expect(r.pointerUp()).toEqual([{ x: 9, y: 9 }]);
  });

  it("drops samples outside the image (mapped to null)", () => {
    const r = new StrokeRecorder();
    r.pointerDown({ x: 0, y: 0 });
    r.pointerMove(null);
    r.pointerMove({ x: 5, y: 0 });
    expect(r.pointerUp()).toHaveLength(2);
  });
});

describe("coalesceStroke", () => {
  it("keeps one op for a click", () => {
    expect(coalesceStroke([{ x: 4, y: 7 }], 5)).toEqual([{ x: 4, y: 7 }]);
  });

  it("drops samples closer than the spacing", () => {
    const samples = [0, 1, 2, 3, 10, 11, 20].map((x) => ({ x, y: 0 }));
    const centers = coalesceStroke(samples, 5);
    expect(centers.map((c) => c.x)).toEqual([0, 10, 20]);
  });

  it("caps the number of ops", () => {
    const samples = Array.from({ length: 500 }, (_, i) => ({ x: i * 10, y: 0 }));
    expect(coalesceStroke(samples, 5, 64)).toHaveLength(64);
  });

  it("returns empty for an empty stroke", () => {
    expect(coalesceStroke([], 5)).toEqual([]);
  });
});

describe("strokeToEditOps", () => {
  it("a single click becomes one brush op at the click position", () => {
    const ops = strokeToEditOps([{ x: 33, y: 44 }], "contrast", brush);
    expect(ops).toHaveLength(1);
    expect(ops[0]).toEqual({
      op: "brush",
      mask: "contrast",
      x: 33,
      y: 44,
      radius: 10,
      hardness: 0.5,
      value: 1.5,
      mode: "set",
    });
  });

  it("a drag of N samples yields between 1 and N ops", () => {
    const samples = Array.from({ length: 40 }, (_, i) => ({ x: i * 2, y: 0 }));
    const ops = strokeToEditOps(samples, "contrast", brush);
    expect(ops.length).toBeGreaterThanOrEqual(1);
    expect(ops.length).toBeLessThanOrEqual(samples.length);
  });

  it("an all-outside stroke yields no ops", () => {
    expect(strokeToEditOps([], "contrast", brush)).toEqual([]);
  });
});
