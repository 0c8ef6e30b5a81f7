"""HTTP edit service: project lifecycle, decomposition jobs, render, edits.

State lives on disk in the same project-directory layout the CLI uses, so
service renders and CLI renders of the same project are byte-identical.
Within a project, mutations (decompose, edits) serialize behind a per-project
lock; reads work on replayed snapshots. Decompositions run as polled
background jobs.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from .optimize import LossConfig, decompose
from .pipeline import FILTER_NAMES, MASK_NAMES, PipelineConfig, ablation_config
from .project import Project, load_image, load_project, save_project
from .slic import slic_segment
from .tensor import InvalidArgument

DEFAULT_MAX_UPLOAD = 32 * 1024 * 1024


def _encode_png(img: np.ndarray) -> bytes:
    """8-bit PNG encode matching the CLI's save_image rounding exactly."""
    arr = np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class JobStatus:
    """Forward-only job state: queued -> running -> done | failed."""

    _ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}

    def __init__(self, job_id, project_id, total_iters):
        self.job_id = job_id
        self.project_id = project_id
        self.state = "queued"
        self.iteration = 0
        self.total_iters = total_iters
        self.losses = {}
        self.error = None

    def advance(self, state):
        if self._ORDER[state] < self._ORDER[self.state]:
            raise RuntimeError(f"job state cannot move {self.state} -> {state}")
        self.state = state

    def as_dict(self):
        d = {"job_id": self.job_id, "project_id": self.project_id,
             "state": self.state, "iteration": self.iteration,
             "total_iters": self.total_iters, "losses": self.losses}
        if self.error is not None:
            d["error"] = self.error
        return d


class ProjectStore:
    """Disk-backed project registry with per-project writer locks."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._locks: dict = {}
        self.jobs: dict = {}

    def lock_for(self, project_id) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(project_id, threading.Lock())

    def root_of(self, project_id) -> Path:
        return self.data_dir / project_id

    def exists(self, project_id) -> bool:
        return (self.root_of(project_id) / "input.png").exists()

    def decomposed(self, project_id) -> bool:
        return (self.root_of(project_id) / "manifest.json").exists()

    def load(self, project_id) -> Project:
        return load_project(self.root_of(project_id))

    def active_job(self, project_id):
        for job in self.jobs.values():
            if job.project_id == project_id and job.state in ("queued", "running"):
                return job
        return None


def _etag(project_id, edit_log) -> str:
    digest = hashlib.sha256()
    digest.update(project_id.encode())
    digest.update(json.dumps(edit_log, sort_keys=True).encode())
    return digest.hexdigest()[:32]


def _error(status, detail):
    return JSONResponse(status_code=status, content={"detail": detail})


def _run_decompose_job(store: ProjectStore, job: JobStatus, params: dict):
    lock = store.lock_for(job.project_id)
    with lock:
        job.advance("running")
        try:
            root = store.root_of(job.project_id)
            image = load_image(root / "input.png")
            cfg = PipelineConfig()
            for name in params["disabled"]:
                cfg = ablation_config(name, cfg)
            seg = slic_segment(image, params["segments"])

            def progress(t, row):
                job.iteration = t + 1
                job.losses = {"l1": row["l1"], "tv": row["tv"],
                              "total": row["total"]}

            masks, _trace = decompose(
                image, seg, cfg=cfg,
                loss_cfg=LossConfig(lambda_tv=params["tv"]),
                iters=params["iters"], base_lr=params["lr"],
                progress=progress)
            project = Project(image=image, config=cfg, base_seg=seg,
                              base_masks=masks, seg_params={
                                  "s": params["segments"],
                                  "iters": params["iters"],
                                  "lr": params["lr"], "tv": params["tv"]},
                              root=root)
            save_project(project, root)
            job.advance("done")
        except Exception as exc:   # job failure must surface via polling
            job.error = str(exc)
            job.advance("failed")


def _validate_edit(entry: dict, project: Project):
    op = entry.get("op")
    h, w = project.image.shape[:2]
    if op == "brush":
        for key in ("mask", "x", "y", "radius", "value"):
            if key not in entry:
                raise InvalidArgument(f"brush edit missing {key!r}")
        if not (0 <= entry["x"] < w and 0 <= entry["y"] < h):
            raise InvalidArgument("brush center outside the image")
    elif op == "blend":
        root = Path(project.root).resolve()
        for key in ("a", "b", "mask_file"):
            if key not in entry:
                raise InvalidArgument(f"blend edit missing {key!r}")
            if not (root / entry[key]).resolve().is_relative_to(root):
                raise InvalidArgument(f"blend path {entry[key]!r} escapes "
                                      "the project directory")
    elif op not in ("global", "match", "lod", "copy", "color_blend",
                    "content_blend"):
        raise InvalidArgument(f"unknown edit op {op!r}")


def create_app(data_dir, max_upload_bytes: int = DEFAULT_MAX_UPLOAD) -> FastAPI:
    store = ProjectStore(Path(data_dir))
    app = FastAPI(title="texweave edit service")
    app.state.store = store
    # the browser editor is served statically from any origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.post("/projects", status_code=201)
    async def create_project(file: UploadFile):
        raw = await file.read()
        if len(raw) > max_upload_bytes:
            return _error(413, "upload exceeds size cap")
        try:
            with Image.open(io.BytesIO(raw)) as im:
                if im.format not in ("PNG", "JPEG"):
                    return _error(415, f"unsupported format {im.format}")
                rgb = im.convert("RGB")
        except UnidentifiedImageError:
            return _error(415, "body is not a decodable image")
        project_id = str(uuid.uuid4())
        root = store.root_of(project_id)
        root.mkdir(parents=True)
        rgb.save(root / "input.png")
        return {"project_id": project_id}

    @app.post("/projects/{project_id}/decompose")
    def start_decompose(project_id: str, body: dict | None = None):
        if not store.exists(project_id):
            return _error(404, "unknown project")
        body = body or {}
        params = {"segments": body.get("segments", 1000),
                  "iters": body.get("iters", 100),
                  "lr": body.get("lr", 0.01),
                  "tv": body.get("tv", 0.2),
                  "disabled": body.get("disabled", [])}
        if (not isinstance(params["segments"], int) or params["segments"] < 1
                or not isinstance(params["iters"], int) or params["iters"] < 1
                or params["lr"] <= 0 or params["tv"] < 0
                or any(f not in FILTER_NAMES for f in params["disabled"])):
            return _error(422, "invalid decomposition parameters")
        with store._registry_lock:
            if store.active_job(project_id) is not None:
                return _error(409, "a decomposition is already running")
            job = JobStatus(str(uuid.uuid4()), project_id, params["iters"])
            store.jobs[job.job_id] = job
        threading.Thread(target=_run_decompose_job,
                         args=(store, job, params), daemon=True).start()
        return {"job_id": job.job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            return _error(404, "unknown job")
        return job.as_dict()

    def _ready(project_id):
        if not store.exists(project_id):
            return _error(404, "unknown project")
        if not store.decomposed(project_id):
            return _error(409, "project not decomposed yet")
        return None

    @app.get("/projects/{project_id}/render")
    def render(project_id: str, width: int | None = None):
        err = _ready(project_id)
        if err is not None:
            return err
        project = store.load(project_id)
        png = _encode_png(project.render())
        if width is not None:
            if width < 1:
                return _error(422, "width must be positive")
            with Image.open(io.BytesIO(png)) as im:
                if width != im.width:
                    height = max(1, round(im.height * width / im.width))
                    buf = io.BytesIO()
                    im.resize((width, height), Image.LANCZOS).save(
                        buf, format="PNG")
                    png = buf.getvalue()
        return Response(content=png, media_type="image/png",
                        headers={"ETag": _etag(project_id, project.edit_log)})

    @app.get("/projects/{project_id}/masks/{name}")
    def mask_preview(project_id: str, name: str):
        err = _ready(project_id)
        if err is not None:
            return err
        if not name.endswith(".png") or name[:-4] not in MASK_NAMES:
            return _error(404, f"unknown mask {name!r}")
        project = store.load(project_id)
        png = _encode_png(project.masks.normalized(name[:-4]))
        return Response(content=png, media_type="image/png",
                        headers={"ETag": _etag(project_id, project.edit_log)})

    @app.get("/projects/{project_id}/metrics")
    def metrics(project_id: str):
        err = _ready(project_id)
        if err is not None:
            return err
        return store.load(project_id).metrics()

    @app.get("/projects/{project_id}")
    def project_info(project_id: str):
        if not store.exists(project_id):
            return _error(404, "unknown project")
        info = {"project_id": project_id,
                "decomposed": store.decomposed(project_id)}
        if info["decomposed"]:
            project = store.load(project_id)
            info.update({
                "height": int(project.image.shape[0]),
                "width": int(project.image.shape[1]),
                "segment_count": int(project.seg.segment_count),
                "masks": {n: list(project.masks.ranges[n]) for n in MASK_NAMES},
                "edit_log": [{"edit_id": i, "op": e["op"]}
                             for i, e in enumerate(project.edit_log)],
                "etag": _etag(project_id, project.edit_log),
            })
        return info

    @app.patch("/projects/{project_id}/edits")
    async def apply_edit(project_id: str, request: Request):
        err = _ready(project_id)
        if err is not None:
            return err
        try:
            entry = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(422, "body is not valid JSON")
        if not isinstance(entry, dict):
            return _error(422, "edit must be a JSON object")
        with store.lock_for(project_id):
            project = store.load(project_id)
            try:
                _validate_edit(entry, project)
                project.apply_edit(entry)
            except InvalidArgument as exc:
                return _error(422, str(exc))
            save_project(project, store.root_of(project_id))
            return {"edit_id": len(project.edit_log) - 1,
                    "preview_etag": _etag(project_id, project.edit_log)}

    @app.delete("/projects/{project_id}/edits/{edit_id}")
    def delete_edit(project_id: str, edit_id: int):
        err = _ready(project_id)
        if err is not None:
            return err
        with store.lock_for(project_id):
            project = store.load(project_id)
            if not 0 <= edit_id < len(project.edit_log):
                return _error(404, f"no edit {edit_id}")
            project.edit_log = project.edit_log[:edit_id]
            project.replay()
            save_project(project, store.root_of(project_id))
            return {"edit_count": len(project.edit_log),
                    "preview_etag": _etag(project_id, project.edit_log)}

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="texweave-service")
    parser.add_argument("--addr", default="127.0.0.1:8000")
    parser.add_argument("--data-dir", required=True)
    args = parser.parse_args(argv)
    host, _, port = args.addr.rpartition(":")
    import uvicorn
    uvicorn.run(create_app(args.data_dir), host=host or "127.0.0.1",
                port=int(port))
    return 0


if __name__ == "__main__":
    main()
