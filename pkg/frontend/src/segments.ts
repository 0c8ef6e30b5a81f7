/** Build segment-tool edit payloads from the current selection. Each tool
 * maps to exactly one service edit op; validation happens here so the UI
 * can disable buttons instead of round-tripping a 422. */

import type { EditOp } from "./api.js";

export type SegmentTool =
  | { tool: "match"; reference: number[] }
  | { tool: "color-blend"; color: [number, number, number]; t: number }
  | { tool: "content-blend"; t: number }
  | { tool: "copy"; dx: number; dy: number }
  | { tool: "lod"; sLocal: number };

export function segmentToolToEditOp(
  selection: Set<number>,
  tool: SegmentTool
): EditOp {
  const labels = [...selection].sort((a, b) => a - b);
  if (labels.length === 0) throw new Error("selection is empty");
  switch (tool.tool) {
    case "match":
      if (tool.reference.length === 0) {
        throw new Error("reference selection is empty");
      }
      return { op: "match", source: labels, reference: tool.reference };
    case "color-blend":
      assertUnit(tool.t);
      return { op: "color_blend", labels, color: tool.color, t: tool.t };
    case "content-blend":
      assertUnit(tool.t);
      return { op: "content_blend", labels, t: tool.t };
    case "copy":
      return { op: "copy", labels, dx: Math.round(tool.dx), dy: Math.round(tool.dy) };
    case "lod":
      if (!Number.isInteger(tool.sLocal) || tool.sLocal < 1) {
        throw new Error("lod segment count must be a positive integer");
      }
      return { op: "lod", labels, s_local: tool.sLocal };
  }
}

function assertUnit(t: number): void {
  if (!(t >= 0 && t <= 1)) throw new Error(`blend amount ${t} outside [0,1]`);
}
