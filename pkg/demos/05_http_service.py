"""Exercise the HTTP service end to end with a scripted client.

The service wraps live sessions behind a REST API: upload a NIfTI volume,
post prompts as JSON, read masks back as run-length encoding, undo, and
export the result as NIfTI in the original geometry. This script runs the
app in-process (no sockets) via the ASGI test client.

Run:  python demos/05_http_service.py
"""

import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from promptseg import rle
from promptseg.promptsim import rasterize_prompt
from promptseg.server import create_app
from promptseg.synthgen import EASY, generate_phantom
from promptseg.volgrid import BinaryMask, save_volume


def stamp_predictor(volume, prompts, prev_seg):
    out = np.zeros(volume.data.shape, dtype=np.uint8)
    for p in prompts:
        if p.polarity == "positive":
            out |= rasterize_prompt(p, volume.geometry).data
    return out.astype(np.float64), BinaryMask(geometry=volume.geometry, data=out)


client = TestClient(create_app(stamp_predictor))
print("health:", client.get("/v1/health").json())

rng = np.random.default_rng(5)
volume, _ = generate_phantom(EASY, rng)
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "case.nii.gz"
    save_volume(volume, path)
    info = client.post("/v1/sessions", content=path.read_bytes()).json()
print("session:", info)

sid = info["session_id"]
center = [s // 2 for s in info["shape"]]
r = client.post(f"/v1/sessions/{sid}/prompts",
                json={"kind": "point", "polarity": "positive",
                      "center": center, "radius": 4}).json()
print("prompt:", r)

mask = rle.decode(client.get(f"/v1/sessions/{sid}/mask").json())
print(f"mask: {int(mask.sum())} voxels via RLE")

png = client.get(f"/v1/sessions/{sid}/slice/{center[0]}").content
print(f"slice PNG: {len(png)} bytes")

export = client.get(f"/v1/sessions/{sid}/export")
print(f"export: {len(export.content)} bytes "
      f"({export.headers['content-disposition']})")

print("undo:", client.post(f"/v1/sessions/{sid}/undo").json())
print("delete:", client.delete(f"/v1/sessions/{sid}").status_code)
