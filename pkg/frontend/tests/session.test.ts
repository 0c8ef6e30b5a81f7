import { describe, expect, it } from "vitest";

import {
  canvasToImage,
  createSession,
  selectMask,
  setBrushValue,
  toggleSelection,
} from "../src/session.js";

const ranges: Record<string, [number, number]> = {
  bump_scale: [0, 5],
  contrast: [0, 2],
};

function session() {
  return createSession("p1", 200, 100, 40, ranges);
}

describe("createSession", () => {
  it("starts on the first mask with the brush at mid-range", () => {
    const s = session();
    expect(s.selectedMask).toBe("bump_scale");
    expect(s.brush.value).toBe(2.5);
  });

  it("rejects a project with no masks", () => {
    expect(() => createSession("p", 1, 1, 1, {})).toThrow();
  });
});

describe("mask selection and brush range invariant", () => {
  it("re-clamps the brush value when switching masks", () => {
    const s = session();
    setBrushValue(s, 4.5);
    selectMask(s, "contrast");
    expect(s.brush.value).toBe(2); // clamped into [0, 2]
  });

  it("clamps out-of-range brush values", () => {
    const s = session();
    setBrushValue(s, 99);
    expect(s.brush.value).toBe(5);
    setBrushValue(s, -1);
    expect(s.brush.value).toBe(0);
  });

  it("rejects unknown masks", () => {
    expect(() => selectMask(session(), "nope")).toThrow();
  });
});

describe("segment selection invariant", () => {
  it("toggles labels within range", () => {
    const s = session();
    toggleSelection(s, 7);
    expect(s.selection.has(7)).toBe(true);
    toggleSelection(s, 7);
    expect(s.selection.has(7)).toBe(false);
  });

  it("rejects labels outside the server's label count", () => {
    const s = session();
    expect(() => toggleSelection(s, 40)).toThrow();
    expect(() => toggleSelection(s, -1)).toThrow();
    expect(() => toggleSelection(s, 1.5)).toThrow();
  });
});

describe("canvasToImage", () => {
  it("maps through zoom and pan, in native image pixels", () => {
    const s = session();
    s.view.zoom = 2;
    s.view.panX = 10;
    s.view.panY = 20;
    expect(canvasToImage(s, 10 + 2 * 50, 20 + 2 * 30)).toEqual({ x: 50, y: 30 });
  });

  it("returns null outside the image", () => {
    const s = session();
    expect(canvasToImage(s, -1, 0)).toBeNull();
    expect(canvasToImage(s, 0, 100)).toBeNull();
    expect(canvasToImage(s, 200, 0)).toBeNull();
  });
});
