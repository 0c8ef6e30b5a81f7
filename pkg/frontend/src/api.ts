/** Typed client for the texweave edit service. Every editor action maps to
 * exactly one of these calls; the client holds no state beyond the base URL. */

export interface JobStatus {
  job_id: string;
  project_id: string;
  state: "queued" | "running" | "done" | "failed";
  iteration: number;
  total_iters: number;
  losses: { l1?: number; tv?: number; total?: number };
  error?: string;
}

export interface ProjectInfo {
  project_id: string;
  decomposed: boolean;
  height?: number;
  width?: number;
  segment_count?: number;
  masks?: Record<string, [number, number]>;
  edit_log?: { edit_id: number; op: string }[];
  etag?: string;
}

export interface Metrics {
  l1: number;
  tv: number;
  noise_sigma: number;
}

export interface EditResult {
  edit_id: number;
  preview_etag: string;
}

export interface DecomposeParams {
  segments?: number;
  iters?: number;
  lr?: number;
  tv?: number;
  disabled?: string[];
}

/** Edit payloads mirror the service's edit ops one-to-one. */
export type EditOp =
  | { op: "global"; mask: string; factor: number; offset?: number }
  | {
      op: "brush";
      mask: string;
      x: number;
      y: number;
      radius: number;
      hardness?: number;
      value: number;
      mode?: "set" | "add";
    }
  | { op: "match"; source: number[]; reference: number[] }
  | { op: "color_blend"; labels: number[]; color: [number, number, number]; t: number }
  | { op: "content_blend"; labels: number[]; t: number }
  | { op: "copy"; labels: number[]; dx: number; dy: number }
  | { op: "lod"; labels: number[]; s_local: number };

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(res.status, detail);
}

export class TexweaveClient {
  constructor(private baseUrl: string = "") {}

  async uploadProject(file: Blob, filename = "upload.png"): Promise<string> {
    const form = new FormData();
    form.append("file", file, filename);
    const res = await fetch(`${this.baseUrl}/projects`, {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return (await res.json()).project_id as string;
  }

  async startDecompose(projectId: string, params: DecomposeParams): Promise<string> {
    const res = await fetch(`${this.baseUrl}/projects/${projectId}/decompose`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(params),
    });
    await raiseForStatus(res);
    return (await res.json()).job_id as string;
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    const res = await fetch(`${this.baseUrl}/jobs/${jobId}`);
    await raiseForStatus(res);
    return (await res.json()) as JobStatus;
  }

  /** Poll until the job leaves queued/running. onProgress fires per poll;
   * an AbortSignal stops polling without cancelling the server job. */
  async pollJob(
    jobId: string,
    options?: {
      intervalMs?: number;
      signal?: AbortSignal;
      onProgress?: (status: JobStatus) => void;
    }
  ): Promise<JobStatus> {
    const intervalMs = options?.intervalMs ?? 1000;
    for (;;) {
      if (options?.signal?.aborted) {
        throw new DOMException("polling cancelled", "AbortError");
      }
      const status = await this.jobStatus(jobId);
      options?.onProgress?.(status);
      if (status.state === "done" || status.state === "failed") return status;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  async projectInfo(projectId: string): Promise<ProjectInfo> {
    const res = await fetch(`${this.baseUrl}/projects/${projectId}`);
    await raiseForStatus(res);
    return (await res.json()) as ProjectInfo;
  }

  renderUrl(projectId: string, etag?: string, width?: number): string {
    const params = new URLSearchParams();
    if (width !== undefined) params.set("width", String(width));
    // the etag is a cache-buster only; the server derives its own
    if (etag) params.set("v", etag);
    const qs = params.toString();
    return `${this.baseUrl}/projects/${projectId}/render${qs ? "?" + qs : ""}`;
  }

  maskPreviewUrl(projectId: string, mask: string, etag?: string): string {
    const suffix = etag ? `?v=${etag}` : "";
    return `${this.baseUrl}/projects/${projectId}/masks/${mask}.png${suffix}`;
  }

  async metrics(projectId: string): Promise<Metrics> {
    const res = await fetch(`${this.baseUrl}/projects/${projectId}/metrics`);
    await raiseForStatus(res);
    return (await res.json()) as Metrics;
  }

  async applyEdit(projectId: string, edit: EditOp): Promise<EditResult> {
    const res = await fetch(`${this.baseUrl}/projects/${projectId}/edits`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(edit),
    });
    await raiseForStatus(res);
    return (await res.json()) as EditResult;
  }

  async deleteEdit(projectId: string, editId: number): Promise<string> {
    const res = await fetch(
      `${this.baseUrl}/projects/${projectId}/edits/${editId}`,
      { method: "DELETE" }
    );
    await raiseForStatus(res);
    return (await res.json()).preview_etag as string;
  }
}
