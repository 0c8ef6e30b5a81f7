/** DOM wiring for the editor: upload form, decomposition progress, preview
 * canvas with optimistic brush overlay, mask sliders, segment tools, undo.
 * All state that matters lives on the server; reloading the page and
 * refetching reproduces the same render. */

import { ApiError, TexweaveClient, type JobStatus } from "./api.js";
import {
  StrokeRecorder,
  drawOptimisticOverlay,
  strokeToEditOps,
} from "./brush.js";
import { segmentToolToEditOp, type SegmentTool } from "./segments.js";
import {
  canvasToImage,
  createSession,
  selectMask,
  setBrushValue,
  toggleSelection,
  type EditorSession,
} from "./session.js";
import { SliderDebouncer } from "./sliders.js";

const client = new TexweaveClient("");

let session: EditorSession | null = null;
let currentEtag = "";
let editIds: number[] = [];
let pollAbort: AbortController | null = null;
// snapshot of the first (pre-edit) render for the before/after toggle
let beforeUrl = "";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const statusLine = () => $<HTMLElement>("status");

function showError(err: unknown): void {
  // surface HTTP errors verbatim with their status text
  statusLine().textContent =
    err instanceof ApiError ? err.message : String(err);
}

async function refreshPreview(): Promise<void> {
  if (!session) return;
  const img = $<HTMLImageElement>("preview");
  img.src = client.renderUrl(session.projectId, currentEtag);
  const metrics = await client.metrics(session.projectId);
  $<HTMLElement>("metrics").textContent =
    `l1 ${metrics.l1.toFixed(4)}  tv ${metrics.tv.toFixed(4)}  ` +
    `noise ${metrics.noise_sigma.toExponential(2)}`;
}

async function openProject(projectId: string): Promise<void> {
  const info = await client.projectInfo(projectId);
  if (!info.decomposed || !info.masks) {
    throw new Error("project is not decomposed yet");
  }
  session = createSession(
    projectId,
    info.width!,
    info.height!,
    info.segment_count!,
    info.masks
  );
  currentEtag = info.etag ?? "";
  editIds = (info.edit_log ?? []).map((e) => e.edit_id);
  const res = await fetch(client.renderUrl(projectId, currentEtag));
  if (res.ok) beforeUrl = URL.createObjectURL(await res.blob());
  buildMaskControls();
  await refreshPreview();
}

// ---- upload & decompose ---------------------------------------------------

async function uploadAndDecompose(): Promise<void> {
  const input = $<HTMLInputElement>("file");
  const file = input.files?.[0];
  if (!file) return;
  try {
    const projectId = await client.uploadProject(file, file.name);
    statusLine().textContent = `uploaded ${projectId}, optimizing...`;
    const jobId = await client.startDecompose(projectId, {
      segments: numberInput("segments", 1000),
      iters: numberInput("iters", 100),
      lr: numberInput("lr", 0.01),
      tv: numberInput("tv", 0.2),
    });
    pollAbort = new AbortController();
    const status = await client.pollJob(jobId, {
      signal: pollAbort.signal,
      onProgress: (s: JobStatus) => {
        statusLine().textContent =
          `iteration ${s.iteration}/${s.total_iters}` +
          (s.losses.l1 !== undefined ? `  l1 ${s.losses.l1.toFixed(4)}` : "");
      },
    });
    if (status.state === "failed") throw new Error(status.error ?? "job failed");
    statusLine().textContent = "decomposition done";
    await openProject(projectId);
  } catch (err) {
    if (!(err instanceof DOMException && err.name === "AbortError")) {
      showError(err);
    }
  }
}

function numberInput(id: string, fallback: number): number {
  const v = Number($<HTMLInputElement>(id).value);
  return Number.isFinite(v) && v > 0 ? v : fallback;
}

// ---- sliders ----------------------------------------------------------------

const sliderDebouncer = new SliderDebouncer(async (edit) => {
  if (!session) return;
  try {
    const result = await client.applyEdit(session.projectId, {
      op: "global",
      mask: edit.mask,
      factor: edit.factor,
      offset: edit.offset ?? 0,
    });
    editIds.push(result.edit_id);
    currentEtag = result.preview_etag;
    await refreshPreview();
  } catch (err) {
    showError(err);
  }
});

function buildMaskControls(): void {
  if (!session) return;
  const container = $<HTMLElement>("masks");
  container.innerHTML = "";
  for (const name of Object.keys(session.maskRanges)) {
    const row = document.createElement("div");
    const label = document.createElement("label");
    label.textContent = name;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0.25";
    slider.max = "4";
    slider.step = "0.05";
    slider.value = "1";
    slider.addEventListener("input", () => {
      sliderDebouncer.update({ mask: name, factor: Number(slider.value) });
    });
    slider.addEventListener("change", () => {
      sliderDebouncer.flush();
      slider.value = "1"; // factors accumulate server-side; reset to identity
    });
    const pick = document.createElement("button");
    pick.textContent = "brush";
    pick.addEventListener("click", () => {
      if (session) selectMask(session, name);
    });
    row.append(label, slider, pick);
    container.append(row);
  }
}

// ---- brush painting ---------------------------------------------------------

const recorder = new StrokeRecorder();

function wireCanvas(): void {
  const canvas = $<HTMLCanvasElement>("overlay");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;

  canvas.addEventListener("pointerdown", (ev) => {
    if (!session) return;
    const p = canvasToImage(session, ev.offsetX, ev.offsetY);
    if (p) recorder.pointerDown(p);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!session || !recorder.active) return;
    recorder.pointerMove(canvasToImage(session, ev.offsetX, ev.offsetY));
  });
  canvas.addEventListener("pointerup", async () => {
    if (!session) return;
    const samples = recorder.pointerUp();
    if (samples.length === 0) return;
    drawOptimisticOverlay(
      ctx,
      samples,
      session.brush.radius,
      session.view.zoom,
      session.view.panX,
      session.view.panY
    );
    const ops = strokeToEditOps(samples, session.selectedMask, session.brush);
    try {
      for (const op of ops) {
        const result = await client.applyEdit(session.projectId, op);
        editIds.push(result.edit_id);
        currentEtag = result.preview_etag;
      }
      await refreshPreview();
    } catch (err) {
      showError(err);
    } finally {
      ctx.clearRect(0, 0, canvas.width, canvas.height);
    }
  });
}

// ---- segment tools & undo ---------------------------------------------------

async function applySegmentTool(tool: SegmentTool): Promise<void> {
  if (!session) return;
  try {
    const op = segmentToolToEditOp(session.selection, tool);
    const result = await client.applyEdit(session.projectId, op);
    editIds.push(result.edit_id);
    currentEtag = result.preview_etag;
    await refreshPreview();
  } catch (err) {
    showError(err);
  }
}

async function undoLast(): Promise<void> {
  if (!session || editIds.length === 0) return;
  try {
    const last = editIds.pop()!;
    currentEtag = await client.deleteEdit(session.projectId, last);
    await refreshPreview();
  } catch (err) {
    showError(err);
  }
}

// ---- boot -------------------------------------------------------------------

export function boot(): void {
  $<HTMLButtonElement>("go").addEventListener("click", uploadAndDecompose);
  $<HTMLButtonElement>("cancel").addEventListener("click", () =>
    pollAbort?.abort()
  );
  $<HTMLButtonElement>("undo").addEventListener("click", undoLast);
  $<HTMLInputElement>("brush-value").addEventListener("change", (ev) => {
    if (session) setBrushValue(session, Number((ev.target as HTMLInputElement).value));
  });
  $<HTMLInputElement>("segment-label").addEventListener("change", (ev) => {
    if (session) {
      toggleSelection(session, Number((ev.target as HTMLInputElement).value));
    }
  });
  $<HTMLButtonElement>("lod").addEventListener("click", () =>
    applySegmentTool({ tool: "lod", sLocal: numberInput("lod-s", 10) })
  );
  $<HTMLButtonElement>("before-after").addEventListener("click", () => {
    if (!session) return;
    session.view.showBefore = !session.view.showBefore;
    const img = $<HTMLImageElement>("preview");
    img.src = session.view.showBefore
      ? beforeUrl
      : client.renderUrl(session.projectId, currentEtag);
  });
  wireCanvas();
}

if (typeof document !== "undefined" && document.getElementById("go")) {
  boot();
}
