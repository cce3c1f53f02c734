"""Interactive refocus service.

Sessions pair an uploaded photo with an externally produced disparity map
(depth estimation itself is out of scope here). Renders resolve the focal
disparity from a clicked pixel or take it directly, compute the defocus
field, and run the scatter renderer — at a reduced preview scale for the
interactive loop, full resolution for export.

Endpoints (JSON fields snake_case, errors as {code, message}):
  POST /sessions                       multipart image + disparity -> {id}
  POST /sessions/{id}/render           RenderRequest JSON -> PNG
  GET  /sessions/{id}/export?k=&df=    full-resolution PNG
  GET  /healthz
"""

from __future__ import annotations

import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field as dc_field

import cv2
import numpy as np
from fastapi import FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .defocus import LensParams, compute_defocus
from .image import decode_u8, linear_to_srgb, resize, srgb_to_linear
from .render import RenderConfig, render_scatter, warmup

MAX_BLUR_INTENSITY = 64.0
DEFAULT_PREVIEW_LONG_EDGE = 1024


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    """One uploaded (image, disparity) pair plus the last lens used."""

    image: np.ndarray  # linear float32 (H, W, 3)
    disparity: np.ndarray  # float32 (H, W) in [0, 1]
    lens: LensParams | None = None
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


class RenderRequest(BaseModel):
    """Focus via pixel (x, y) or explicit d_f; k in [0, 64]."""

    x: int | None = None
    y: int | None = None
    d_f: float | None = None
    k: float = 16.0
    preview_scale: float | None = None


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._sessions[sid] = session
        return sid

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise ApiError(404, "session_not_found", f"no session with id {sid!r}")
        return session


def _decode_color_upload(data: bytes, what: str) -> np.ndarray:
    raw = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_COLOR)
    if raw is None:
        raise ApiError(422, "undecodable_payload", f"cannot decode {what} payload")
    return srgb_to_linear(decode_u8(cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)))


def _decode_disparity_upload(data: bytes) -> np.ndarray:
    raw = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ApiError(422, "undecodable_payload", "cannot decode disparity payload")
    if raw.ndim == 3:
        raw = raw[..., 0]
    if raw.dtype == np.uint16:
        return (raw.astype(np.float32) / 65535.0)
    if raw.dtype == np.uint8:
        return (raw.astype(np.float32) / 255.0)
    raise ApiError(422, "undecodable_payload",
                   f"disparity must be 8- or 16-bit grayscale PNG, got dtype {raw.dtype}")


def _encode_png(img_linear: np.ndarray) -> bytes:
    u8 = np.floor(np.clip(linear_to_srgb(img_linear), 0, 1).astype(np.float64) * 255.0
                  + 0.5).astype(np.uint8)
    ok, buf = cv2.imencode(".png", cv2.cvtColor(u8, cv2.COLOR_RGB2BGR))
    if not ok:
        raise RuntimeError("PNG encoding failed")
    return bytes(buf.tobytes())


def _render(session: Session, d_f: float, k: float, scale: float) -> bytes:
    """Stateless render path: (image, disparity, lens, scale) -> PNG bytes.

    The preview downscales both planes and the blur intensity together, so a
    preview approximates an area-downsampled full-resolution render.
    """
    h, w = session.image.shape[:2]
    if scale < 1.0:
        pw, ph = max(1, round(w * scale)), max(1, round(h * scale))
        img = resize(session.image, pw, ph, "area")
        disp = np.clip(resize(session.disparity, pw, ph, "area"), 0.0, 1.0)
        k_eff = k * scale
    else:
        img, disp, k_eff = session.image, session.disparity, k
    lens = LensParams(k=k_eff, d_f=d_f)
    radii = compute_defocus(disp, lens)
    cfg = RenderConfig(max_radius=max(MAX_BLUR_INTENSITY, k_eff))
    out = render_scatter(img, radii, cfg)
    return _encode_png(out)


def create_app() -> FastAPI:
    @asynccontextmanager
    async def _lifespan(_app: FastAPI):
        warmup()  # compile the render kernel before the first request
        yield

    app = FastAPI(title="bokehkit refocus service", lifespan=_lifespan)
    # The browser client may be served from a different origin; the service
    # is local and unauthenticated, so a permissive policy is fine.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"],
                       expose_headers=["x-resolved-df", "x-render-millis"])
    store = SessionStore()

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_request", "message": str(exc.errors())})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    async def create_session(image: UploadFile = File(...), disparity: UploadFile = File(...)):
        img = _decode_color_upload(await image.read(), "image")
        disp = _decode_disparity_upload(await disparity.read())
        if img.shape[:2] != disp.shape:
            raise ApiError(422, "dimension_mismatch",
                           f"image is {img.shape[1]}x{img.shape[0]} but disparity is "
                           f"{disp.shape[1]}x{disp.shape[0]}")
        sid = store.add(Session(image=img, disparity=disp))
        return {"id": sid}

    @app.post("/sessions/{sid}/render")
    async def render_preview(sid: str, req: RenderRequest):
        session = store.get(sid)
        if not 0.0 <= req.k <= MAX_BLUR_INTENSITY:
            raise ApiError(422, "invalid_request",
                           f"k must lie in [0, {MAX_BLUR_INTENSITY}], got {req.k}")
        h, w = session.image.shape[:2]
        if req.d_f is not None:
            if not 0.0 <= req.d_f <= 1.0:
                raise ApiError(422, "invalid_request", "d_f must lie in [0, 1]")
            d_f = float(req.d_f)
        elif req.x is not None and req.y is not None:
            if not (0 <= req.x < w and 0 <= req.y < h):
                raise ApiError(422, "out_of_bounds",
                               f"focal point ({req.x}, {req.y}) outside {w}x{h} image")
            d_f = float(session.disparity[req.y, req.x])
        else:
            raise ApiError(422, "invalid_request", "provide either (x, y) or d_f")
        scale = req.preview_scale if req.preview_scale is not None \
            else min(1.0, DEFAULT_PREVIEW_LONG_EDGE / max(w, h))
        if not 0.0 < scale <= 1.0:
            raise ApiError(422, "invalid_request", "preview_scale must lie in (0, 1]")
        with session.lock:
            session.lens = LensParams(k=req.k, d_f=d_f)
            t0 = time.perf_counter()
            png = _render(session, d_f=d_f, k=req.k, scale=scale)
            millis = (time.perf_counter() - t0) * 1000.0
        return Response(content=png, media_type="image/png",
                        headers={"x-resolved-df": f"{d_f:.6f}",
                                 "x-render-millis": f"{millis:.1f}"})

    @app.get("/sessions/{sid}/export")
    async def export(sid: str, k: float, df: float):
        session = store.get(sid)
        if not 0.0 <= k <= MAX_BLUR_INTENSITY:
            raise ApiError(422, "invalid_request",
                           f"k must lie in [0, {MAX_BLUR_INTENSITY}], got {k}")
        if not 0.0 <= df <= 1.0:
            raise ApiError(422, "invalid_request", "df must lie in [0, 1]")
        with session.lock:
            session.lens = LensParams(k=k, d_f=df)
            png = _render(session, d_f=df, k=k, scale=1.0)
        return Response(content=png, media_type="image/png")

    return app


def serve(host: str = "127.0.0.1", port: int = 8639) -> None:
    """Blocking uvicorn server for the CLI `serve` subcommand."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="info")
