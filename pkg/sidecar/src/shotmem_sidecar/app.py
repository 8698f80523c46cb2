"""FastAPI application serving the provider protocol.

Endpoints: POST /embed_image, /embed_video (multipart, ordered frames),
/embed_text, /score_aesthetic; GET /health. Requests are stateless and safe
to serve concurrently. Malformed payloads map to 400, model errors to 500.
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .models import InferenceFailure, MalformedRequest, ModelSet, build_models

PROTOCOL_VERSION = 1


class ImageBody(BaseModel):
    image_b64: str
    context: str | None = None
    protocol_version: int = PROTOCOL_VERSION


class TextBody(BaseModel):
    text: str
    context: str | None = None
    protocol_version: int = PROTOCOL_VERSION


def _decode_b64(payload: str) -> bytes:
    try:
        return base64.b64decode(payload, validate=True)
    except Exception as exc:
        raise MalformedRequest(f"invalid base64 payload: {exc}") from exc


def _vector_response(vector, model) -> dict:
    return {
        "vector": [float(x) for x in vector],
        "model_id": model.model_id,
        "dim": model.dim,
        "protocol_version": PROTOCOL_VERSION,
    }


def create_app(models: ModelSet | None = None, family: str = "tiny") -> FastAPI:
    models = models or build_models(family)
    app = FastAPI(title="shotmem embedding sidecar")

    @app.exception_handler(MalformedRequest)
    async def _malformed(request: Request, exc: MalformedRequest):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(InferenceFailure)
    async def _inference(request: Request, exc: InferenceFailure):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "protocol_version": PROTOCOL_VERSION,
            "models": models.declarations(),
        }

    @app.post("/embed_image")
    def embed_image(body: ImageBody) -> dict:
        vector = models.image.embed(_decode_b64(body.image_b64), context=body.context)
        return _vector_response(vector, models.image)

    @app.post("/embed_video")
    def embed_video(frames: list[UploadFile], context: str | None = Form(default=None)) -> dict:
        if not frames:
            raise MalformedRequest("embed_video needs at least one frame")
        payloads = [f.file.read() for f in frames]
        vector = models.video.embed(payloads, context=context)
        return _vector_response(vector, models.video)

    @app.post("/embed_text")
    def embed_text(body: TextBody) -> dict:
        vector = models.text.embed(body.text, context=body.context)
        return _vector_response(vector, models.text)

    @app.post("/score_aesthetic")
    def score_aesthetic(body: ImageBody) -> dict:
        score = models.aesthetic.score(_decode_b64(body.image_b64), context=body.context)
        return {
            "score": float(score),
            "model_id": models.aesthetic.model_id,
            "protocol_version": PROTOCOL_VERSION,
        }

    return app
