"""Local HTTP API for the analyst workbench.

Sessions hold an uploaded photograph, an optional rectified image, and an
append-only history of extraction attempts. All state is in memory; the
service is a single-process desk tool, not a deployment target.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from dataclasses import dataclass, field, asdict

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .extraction import ExtractionParams, extract_watermark
from .images import load_image, png_bytes, sniff_format
from .models import ModelBundle, load_bundle

DEFAULT_MAX_UPLOAD = 20 * 1024 * 1024


@dataclass
class Session:
    id: str
    photo: np.ndarray
    rectified: np.ndarray | None = None
    rectify_corners: list | None = None
    artifacts: dict = field(default_factory=dict)   # name -> PNG bytes
    history: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _err(status, message):
    return JSONResponse({"error": message}, status_code=status)


def create_app(bundle: ModelBundle | None = None, model_path=None,
               max_upload=DEFAULT_MAX_UPLOAD, static_dir=None) -> FastAPI:
    if bundle is None:
        if model_path is None:
            raise ValueError("need a ModelBundle or a model_path")
        bundle = load_bundle(model_path)
    bundle.eval_mode()

    app = FastAPI(title="screenmark workbench service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, Session] = {}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > max_upload:
            return _err(413, f"upload exceeds {max_upload} bytes")
        if sniff_format(body) is None:
            return _err(415, "body must be a PNG or JPEG image")
        try:
            photo = load_image(bytes(body))
        except Exception:
            return _err(415, "could not decode image")
        sid = uuid.uuid4().hex
        sessions[sid] = Session(id=sid, photo=photo)
        h, w = photo.shape[:2]
        return {"session_id": sid, "width": w, "height": h}

    def _get(sid):
        return sessions.get(sid)

    @app.post("/sessions/{sid}/rectify")
    async def rectify(sid: str, request: Request):
        sess = _get(sid)
        if sess is None:
            return _err(404, "unknown session")
        spec = await request.json()
        corners = spec.get("corners")
        out_w = int(spec.get("out_w", sess.photo.shape[1]))
        out_h = int(spec.get("out_h", sess.photo.shape[0]))
        with sess.lock:
            from .extraction import warp_perspective
            try:
                rect = warp_perspective(sess.photo, corners, out_w, out_h)
            except ValueError as e:
                return _err(422, str(e))
            sess.rectified = rect
            sess.rectify_corners = corners
            png = png_bytes(rect)
            sess.artifacts["rectified.png"] = png
            thumb = rect[::max(1, out_h // 128), ::max(1, out_w // 128)]
            sess.artifacts["rectified_thumb.png"] = png_bytes(thumb)
            return {"artifact": f"/sessions/{sid}/artifacts/rectified.png",
                    "thumbnail": f"/sessions/{sid}/artifacts/rectified_thumb.png",
                    "sha256": hashlib.sha256(png).hexdigest(),
                    "width": out_w, "height": out_h}

    @app.post("/sessions/{sid}/extract")
    async def extract(sid: str, request: Request):
        sess = _get(sid)
        if sess is None:
            return _err(404, "unknown session")
        spec = await request.json() if (await request.body()) else {}
        pre_rectified = bool(spec.pop("pre_rectified", False))
        try:
            params = ExtractionParams(**{
                k: spec[k] for k in ("median_window", "threshold", "period_min",
                                     "period_max", "gauss_sigma") if k in spec})
        except (ValueError, TypeError) as e:
            return _err(422, f"invalid extraction parameters: {e}")
        with sess.lock:
            if sess.rectified is not None:
                image = sess.rectified
            elif pre_rectified:
                image = sess.photo
            else:
                return _err(409, "no rectified image; rectify first or pass "
                                 "pre_rectified=true")
            rep = extract_watermark(image, params, bundle)
            doc = rep.to_json_dict()
            urls = {}
            for name, img in rep.artifacts().items():
                fname = f"{name}.png"
                sess.artifacts[fname] = png_bytes(img)
                urls[name] = f"/sessions/{sid}/artifacts/{fname}"
            doc["artifacts"] = urls
            sess.history.append({
                "params": asdict(params),
                "report": {k: doc[k] for k in ("period", "shift", "bits",
                                               "bch", "warnings")},
            })
            return doc

    @app.get("/sessions/{sid}/artifacts/{name}")
    async def artifact(sid: str, name: str):
        sess = _get(sid)
        if sess is None or name not in sess.artifacts:
            return _err(404, "unknown artifact")
        return Response(sess.artifacts[name], media_type="image/png")

    @app.get("/sessions/{sid}/history")
    async def history(sid: str):
        sess = _get(sid)
        if sess is None:
            return _err(404, "unknown session")
        return {"history": sess.history}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="workbench")
    return app
