/** Editor session state and its invariants. The session mirrors server
 * state (mask ranges, label count) but owns only view/tool settings; all
 * image math happens on the server. */

export interface BrushSettings {
  radius: number;
  hardness: number;
  value: number;
  mode: "set" | "add";
}

export interface ViewState {
  zoom: number;
  panX: number;
  panY: number;
  showBefore: boolean;
}

export interface EditorSession {
  projectId: string;
  width: number;
  height: number;
  segmentCount: number;
  maskRanges: Record<string, [number, number]>;
  selectedMask: string;
  brush: BrushSettings;
  selection: Set<number>;
  view: ViewState;
}

export function createSession(
  projectId: string,
  width: number,
  height: number,
  segmentCount: number,
  maskRanges: Record<string, [number, number]>
): EditorSession {
  const firstMask = Object.keys(maskRanges)[0];
  if (!firstMask) throw new Error("project advertises no masks");
  const [lo, hi] = maskRanges[firstMask];
  return {
    projectId,
    width,
    height,
    segmentCount,
    maskRanges,
    selectedMask: firstMask,
    brush: { radius: 20, hardness: 0.5, value: (lo + hi) / 2, mode: "set" },
    selection: new Set(),
    view: { zoom: 1, panX: 0, panY: 0, showBefore: false },
  };
}

/** Switching masks re-clamps the brush value into the new mask's range. */
export function selectMask(session: EditorSession, mask: string): void {
  const range = session.maskRanges[mask];
  if (!range) throw new Error(`unknown mask ${mask}`);
  session.selectedMask = mask;
  session.brush.value = clampToRange(session.brush.value, range);
}

export function clampToRange(value: number, [lo, hi]: [number, number]): number {
  return Math.min(hi, Math.max(lo, value));
}

export function setBrushValue(session: EditorSession, value: number): void {
  session.brush.value = clampToRange(
    value,
    session.maskRanges[session.selectedMask]
  );
}

/** Selections may only reference labels that exist on the server. */
export function toggleSelection(session: EditorSession, label: number): void {
  if (!Number.isInteger(label) || label < 0 || label >= session.segmentCount) {
    throw new Error(`label ${label} out of range`);
  }
  if (session.selection.has(label)) session.selection.delete(label);
  else session.selection.add(label);
}

/** Canvas pixel -> image pixel under the current zoom/pan; null when the
 * point falls outside the image. */
export function canvasToImage(
  session: EditorSession,
  canvasX: number,
  canvasY: number
): { x: number; y: number } | null {
  const { zoom, panX, panY } = session.view;
  const x = (canvasX - panX) / zoom;
  const y = (canvasY - panY) / zoom;
  if (x < 0 || y < 0 || x >= session.width || y >= session.height) return null;
  return { x, y };
}
