/** Debounced global-slider edits with no-op suppression.
 *
 * Dragging a slider fires many change events; only the settled value should
 * become a PATCH, and a value that equals the identity (factor 1, offset 0)
 * must not produce a request at all. */

import type { EditOp } from "./api.js";

export interface SliderEdit {
  mask: string;
  factor: number;
  offset?: number;
}

export function isIdentityEdit(edit: SliderEdit, epsilon = 1e-9): boolean {
  return (
    Math.abs(edit.factor - 1) <= epsilon &&
    Math.abs(edit.offset ?? 0) <= epsilon
  );
}

export function toEditOp(edit: SliderEdit): EditOp {
  return {
    op: "global",
    mask: edit.mask,
    factor: edit.factor,
    offset: edit.offset ?? 0,
  };
}

export type Scheduler = (fn: () => void, ms: number) => unknown;
export type Canceller = (handle: unknown) => void;

/** Collapses a burst of slider values into one emit after `delayMs` of
 * silence. Identity edits are swallowed, including when a drag ends back
 * at the starting value. */
export class SliderDebouncer {
  private handle: unknown = null;
  private pending: SliderEdit | null = null;

  constructor(
    private emit: (edit: SliderEdit) => void,
    private delayMs = 250,
    private schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private cancel: Canceller = (h) => clearTimeout(h as number)
  ) {}

  update(edit: SliderEdit): void {
    this.pending = edit;
    if (this.handle !== null) this.cancel(this.handle);
    this.handle = this.schedule(() => this.fire(), this.delayMs);
  }

  /** Emit the pending edit immediately (e.g. on pointer-up). */
  flush(): void {
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
    this.fire();
  }

  private fire(): void {
    this.handle = null;
    const edit = this.pending;
    this.pending = null;
    if (edit && !isIdentityEdit(edit)) this.emit(edit);
  }
}
