/** Pointer-stream batching for brush painting.
 *
 * While the pointer is down, samples accumulate (in image coordinates;
 * outside-canvas samples are dropped by the caller mapping to null). On
 * pointer-up the stroke is coalesced into at most `maxOps` brush ops —
 * nearby samples collapse into one op so a slow drag of N samples never
 * floods the server with N PATCHes. The ops are sent as one sequential
 * batch; the optimistic client-side overlay is reconciled when the
 * authoritative render arrives. */

import type { EditOp } from "./api.js";
import type { BrushSettings } from "./session.js";

export interface StrokeSample {
  x: number;
  y: number;
}

export class StrokeRecorder {
  private samples: StrokeSample[] = [];
  private down = false;

  pointerDown(sample: StrokeSample): void {
    this.down = true;
    this.samples = [sample];
  }

  pointerMove(sample: StrokeSample | null): void {
    // null = pointer currently outside the image; contributes nothing
    if (this.down && sample !== null) this.samples.push(sample);
  }

  /** Ends the stroke and returns its samples (empty if it never entered
   * the image). */
  pointerUp(): StrokeSample[] {
    this.down = false;
    const out = this.samples;
    this.samples = [];
    return out;
  }

  get active(): boolean {
    return this.down;
  }
}

/** Coalesce stroke samples: a new op starts only when the pointer has
 * moved at least `spacing` pixels from the previous op's center. Always
 * emits >= 1 op for a non-empty stroke and never more than maxOps. */
export function coalesceStroke(
  samples: StrokeSample[],
  spacing: number,
  maxOps = 64
): StrokeSample[] {
  if (samples.length === 0) return [];
  const centers: StrokeSample[] = [samples[0]];
  for (const s of samples.slice(1)) {
    if (centers.length >= maxOps) break;
    const last = centers[centers.length - 1];
    const d = Math.hypot(s.x - last.x, s.y - last.y);
    if (d >= spacing) centers.push(s);
  }
  return centers;
}

export function strokeToEditOps(
  samples: StrokeSample[],
  mask: string,
  brush: BrushSettings,
  maxOps = 64
): EditOp[] {
  // half-radius spacing gives continuous coverage for circular stamps
  const centers = coalesceStroke(samples, brush.radius / 2, maxOps);
  return centers.map((c) => ({
    op: "brush" as const,
    mask,
    x: c.x,
    y: c.y,
    radius: brush.radius,
    hardness: brush.hardness,
    value: brush.value,
    mode: brush.mode,
  }));
}

/** Draw the optimistic overlay for a stroke onto a 2D canvas context. The
 * overlay only hints where paint landed; the server render replaces it. */
export function drawOptimisticOverlay(
  ctx: CanvasRenderingContext2D,
  samples: StrokeSample[],
  radius: number,
  zoom: number,
  panX: number,
  panY: number
): void {
  ctx.save();
  ctx.fillStyle = "rgba(255, 200, 0, 0.25)";
  for (const s of samples) {
    ctx.beginPath();
    ctx.arc(s.x * zoom + panX, s.y * zoom + panY, radius * zoom, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.restore();
}
