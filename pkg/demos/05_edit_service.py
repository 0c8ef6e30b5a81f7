"""Walk the HTTP edit service through a full editing session.

Uses FastAPI's in-process test client, so nothing needs to be listening on
a port. The same flow works against a live server started with
``python3 -m texweave.service --addr 127.0.0.1:8000 --data-dir <dir>``.
"""

import io
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from texweave.service import create_app

HERE = Path(__file__).parent
client = TestClient(create_app(tempfile.mkdtemp()))

png = (HERE.parent / "tests" / "data" / "hubble.png").read_bytes()
r = client.post("/projects", files={"file": ("hubble.png", png, "image/png")})
project = r.json()["project_id"]
print(f"uploaded -> project {project}")

r = client.post(f"/projects/{project}/decompose",
                json={"segments": 500, "iters": 30})
job = r.json()["job_id"]
while True:
    status = client.get(f"/jobs/{job}").json()
    print(f"  job {status['state']:8s} iter {status['iteration']}/"
          f"{status['total_iters']}  {status['losses']}")
    if status["state"] in ("done", "failed"):
        break
    time.sleep(1.0)

metrics = client.get(f"/projects/{project}/metrics").json()
print(f"metrics: {metrics}")

out = HERE / "output"
out.mkdir(exist_ok=True)
(out / "service_render.png").write_bytes(
    client.get(f"/projects/{project}/render").content)

r = client.patch(f"/projects/{project}/edits",
                 json={"op": "global", "mask": "contrast", "factor": 1.5})
print(f"edit applied: id {r.json()['edit_id']}, "
      f"etag {r.json()['preview_etag'][:12]}...")
(out / "service_render_edited.png").write_bytes(
    client.get(f"/projects/{project}/render").content)

client.delete(f"/projects/{project}/edits/{r.json()['edit_id']}")
restored = client.get(f"/projects/{project}/render").content
same = restored == (out / "service_render.png").read_bytes()
print(f"undo restored the original render bytes: {same}")
