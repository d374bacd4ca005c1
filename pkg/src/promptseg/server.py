"""HTTP service exposing live interactive sessions.

Sessions live in memory behind an LRU cap; coordinates on the wire are
voxel indices in preprocessed (z, y, x) space. Masks travel as RLE JSON,
image slices as windowed 8-bit PNG.
"""

from __future__ import annotations

import io
import tempfile
import threading
import time
import uuid
from collections import OrderedDict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from . import rle, session as sess
from .promptsim import PromptError, prompt_from_json
from .volgrid import VolumeError, load_volume, preprocess, save_volume

DEFAULT_CAPACITY = 16


class _Handle:
    def __init__(self, state):
        self.state = state
        self.lock = threading.Lock()
        self.created = time.time()
        self.mask_version = 0


class SessionStore:
    """Thread-safe LRU map of session id -> handle."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._items: OrderedDict[str, _Handle] = OrderedDict()

    def create(self, state) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            while len(self._items) >= self.capacity:
                self._items.popitem(last=False)  # evict least recently used
            self._items[sid] = _Handle(state)
        return sid

    def get(self, sid: str) -> _Handle | None:
        with self._lock:
            handle = self._items.get(sid)
            if handle is not None:
                self._items.move_to_end(sid)
            return handle

    def delete(self, sid: str) -> bool:
        with self._lock:
            return self._items.pop(sid, None) is not None


def create_app(predictor, capacity: int = DEFAULT_CAPACITY,
               preprocess_args: dict | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the service around a session predictor (see segnet.SlidingWindowPredictor)."""
    app = FastAPI(title="promptseg")
    store = SessionStore(capacity)
    app.state.store = store
    preprocess_args = preprocess_args or {}

    def _err(code: int, message: str):
        return JSONResponse(status_code=code, content={"error": message})

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/sessions")
    async def create(request: Request):
        body = await request.body()
        try:
            with tempfile.NamedTemporaryFile(suffix=".nii.gz") as f:
                f.write(body)
                f.flush()
                volume = load_volume(f.name)
            vol_pp, record = preprocess(volume, **preprocess_args)
        except (VolumeError, OSError, EOFError) as e:
            return _err(400, f"malformed volume: {e}")
        state = sess.create_session(vol_pp, predictor, preprocess_record=record)
        sid = store.create(state)
        return {"session_id": sid,
                "shape": list(vol_pp.data.shape),
                "spacing": list(vol_pp.geometry.spacing),
                "rounds": 0}

    @app.post("/v1/sessions/{sid}/prompts")
    def add_prompt(sid: str, prompt: dict):
        handle = store.get(sid)
        if handle is None:
            return _err(404, "unknown session")
        try:
            parsed = prompt_from_json(prompt)
        except PromptError as e:
            return _err(422, str(e))
        with handle.lock:
            prev = handle.state.current_mask
            try:
                handle.state, mask = sess.add_prompt(handle.state, parsed)
            except (sess.SessionError, PromptError) as e:
                return _err(422, str(e))
            if prev is None:
                changed = int(mask.data.sum())
            else:
                changed = int((mask.data != prev.data).sum())
            handle.mask_version += 1
            return {"round": handle.state.round,
                    "changed_voxels": changed,
                    "mask_version": handle.mask_version}

    @app.get("/v1/sessions/{sid}/mask")
    def get_mask(sid: str, slice: int | None = Query(default=None)):
        handle = store.get(sid)
        if handle is None:
            return _err(404, "unknown session")
        with handle.lock:
            mask = handle.state.current_mask
            if mask is None:
                return _err(409, "no prediction yet")
            if slice is None:
                return rle.encode(mask.data)
            if not (0 <= slice < mask.data.shape[0]):
                return _err(404, "slice out of range")
            return rle.encode(mask.data[slice])

    @app.get("/v1/sessions/{sid}/slice/{z}")
    def get_slice(sid: str, z: int, window: str | None = Query(default=None)):
        handle = store.get(sid)
        if handle is None:
            return _err(404, "unknown session")
        with handle.lock:
            data = handle.state.volume.data
            if not (0 <= z < data.shape[0]):
                return _err(404, "slice out of range")
            plane = data[z].astype(np.float64)
        if window:
            try:
                lo, hi = (float(v) for v in window.split(","))
            except ValueError:
                return _err(422, "window must be 'lo,hi'")
        else:
            lo, hi = float(plane.min()), float(plane.max())
        if hi <= lo:
            gray = np.zeros(plane.shape, dtype=np.uint8)
        else:
            gray = np.round(255 * np.clip((plane - lo) / (hi - lo), 0, 1)).astype(np.uint8)
        from PIL import Image
        buf = io.BytesIO()
        Image.fromarray(gray).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/v1/sessions/{sid}/undo")
    def undo(sid: str):
        handle = store.get(sid)
        if handle is None:
            return _err(404, "unknown session")
        with handle.lock:
            try:
                handle.state = sess.undo(handle.state)
            except sess.SessionError as e:
                return _err(409, str(e))
            handle.mask_version += 1
            return {"round": handle.state.round}

    @app.get("/v1/sessions/{sid}/export")
    def export(sid: str):
        handle = store.get(sid)
        if handle is None:
            return _err(404, "unknown session")
        with handle.lock:
            try:
                mask = sess.export_result(handle.state)
            except sess.SessionError as e:
                return _err(409, str(e))
        with tempfile.NamedTemporaryFile(suffix=".nii.gz") as f:
            save_volume(mask, f.name)
            f.seek(0)
            data = Path(f.name).read_bytes()
        return Response(content=data, media_type="application/gzip",
                        headers={"Content-Disposition":
                                 "attachment; filename=mask.nii.gz"})

    @app.delete("/v1/sessions/{sid}", status_code=204)
    def delete(sid: str):
        if not store.delete(sid):
            return _err(404, "unknown session")
        return Response(status_code=204)

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
