"""Embedding and scoring models served by the sidecar.

The ``tiny`` family is a set of deterministic feature extractors that run
anywhere and keep the protocol tests fast; the ``clip`` family wraps real
pretrained encoders and needs downloadable weights.
"""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image


class ModelLoadFailure(RuntimeError):
    """A model family could not be constructed."""


class MalformedRequest(ValueError):
    """The request payload cannot be interpreted."""


class InferenceFailure(RuntimeError):
    """The model failed on a well-formed request."""


_GRID = 8
_HIST_BINS = 6
TINY_DIM = _GRID * _GRID + 3 + 3 + _HIST_BINS


def _decode(image_bytes: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except Exception as exc:
        raise MalformedRequest(f"payload is not a decodable image: {exc}") from exc


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or not np.isfinite(norm):
        raise InferenceFailure("degenerate feature vector")
    return vec / norm


class TinyImageEmbedder:
    model_id = "tiny-image-v1"
    dim = TINY_DIM

    def embed(self, image_bytes: bytes, context: str | None = None) -> np.ndarray:
        rgb = _decode(image_bytes)
        gray = rgb.mean(axis=2)
        thumb = np.asarray(
            Image.fromarray((gray * 255.0 + 0.5).astype(np.uint8)).resize(
                (_GRID, _GRID), Image.BILINEAR
            ),
            dtype=np.float64,
        ) / 255.0
        hist = np.histogram(gray, bins=_HIST_BINS, range=(0.0, 1.0))[0] / gray.size
        features = np.concatenate(
            [
                (thumb - thumb.mean()).reshape(-1),
                rgb.reshape(-1, 3).mean(axis=0) - 0.5,
                rgb.reshape(-1, 3).std(axis=0) - 0.2,
                hist - 1.0 / _HIST_BINS,
            ]
        )
        return _unit(features)


class TinyVideoEmbedder:
    model_id = "tiny-video-v1"
    dim = TINY_DIM

    def __init__(self, image_embedder: TinyImageEmbedder):
        self._image = image_embedder

    def embed(self, frames: list[bytes], context: str | None = None) -> np.ndarray:
        if not frames:
            raise MalformedRequest("embed_video needs at least one frame")
        vectors = [self._image.embed(f) for f in frames]
        return _unit(np.mean(vectors, axis=0))


class TinyTextEmbedder:
    model_id = "tiny-text-v1"
    dim = TINY_DIM

    def embed(self, text: str, context: str | None = None) -> np.ndarray:
        if not text:
            raise MalformedRequest("embed_text needs nonempty text")
        padded = f"  {text.lower()} "
        counts = np.zeros(self.dim, dtype=np.float64)
        for size in (2, 3):
            for i in range(len(padded) - size + 1):
                digest = hashlib.sha256(padded[i : i + size].encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dim
                counts[bucket] += 1.0 if digest[4] & 1 else -1.0
        return _unit(counts)


class TinyAestheticScorer:
    model_id = "tiny-aesthetic-v1"
    dim = 1

    def score(self, image_bytes: bytes, context: str | None = None) -> float:
        rgb = _decode(image_bytes)
        gray = rgb.mean(axis=2)
        contrast = float(gray.std())
        sharp = 0.0
        if gray.shape[1] > 1:
            sharp += float(np.abs(np.diff(gray, axis=1)).mean())
        if gray.shape[0] > 1:
            sharp += float(np.abs(np.diff(gray, axis=0)).mean())
        return float(np.clip(30.0 * contrast + 40.0 * sharp, 0.0, 10.0))


class _ClipImageEmbedder:
    """Pretrained joint-space image encoder (needs downloadable weights)."""

    def __init__(self, model):
        self._model = model
        self.model_id = "clip-ViT-B-32"
        self.dim = 512

    def embed(self, image_bytes: bytes, context: str | None = None) -> np.ndarray:
        img = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        vec = np.asarray(self._model.encode(img), dtype=np.float64)
        return _unit(vec)


class _ClipTextEmbedder:
    def __init__(self, model):
        self._model = model
        self.model_id = "clip-ViT-B-32"
        self.dim = 512

    def embed(self, text: str, context: str | None = None) -> np.ndarray:
        if not text:
            raise MalformedRequest("embed_text needs nonempty text")
        return _unit(np.asarray(self._model.encode(text), dtype=np.float64))


class _ClipVideoEmbedder:
    def __init__(self, image_embedder: _ClipImageEmbedder):
        self._image = image_embedder
        self.model_id = "clip-ViT-B-32-meanpool"
        self.dim = image_embedder.dim

    def embed(self, frames: list[bytes], context: str | None = None) -> np.ndarray:
        if not frames:
            raise MalformedRequest("embed_video needs at least one frame")
        return _unit(np.mean([self._image.embed(f) for f in frames], axis=0))


class ModelSet:
    def __init__(self, image, video, text, aesthetic):
        self.image = image
        self.video = video
        self.text = text
        self.aesthetic = aesthetic

    def declarations(self) -> dict:
        return {
            "embed_image": {"model_id": self.image.model_id, "dim": self.image.dim},
            "embed_video": {"model_id": self.video.model_id, "dim": self.video.dim},
            "embed_text": {"model_id": self.text.model_id, "dim": self.text.dim},
            "score_aesthetic": {"model_id": self.aesthetic.model_id, "dim": self.aesthetic.dim},
        }


def build_tiny() -> ModelSet:
    image = TinyImageEmbedder()
    return ModelSet(
        image=image,
        video=TinyVideoEmbedder(image),
        text=TinyTextEmbedder(),
        aesthetic=TinyAestheticScorer(),
    )


def build_clip() -> ModelSet:
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelLoadFailure(
            "the 'clip' model family needs sentence-transformers installed"
        ) from exc
    try:
        model = SentenceTransformer("clip-ViT-B-32")
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load clip-ViT-B-32 weights: {exc}") from exc
    image = _ClipImageEmbedder(model)
    return ModelSet(
        image=image,
        video=_ClipVideoEmbedder(image),
        text=_ClipTextEmbedder(model),
        # no lightweight preference model ships with clip; reuse the tiny scorer
        aesthetic=TinyAestheticScorer(),
    )


MODEL_FAMILIES = {"tiny": build_tiny, "clip": build_clip}


def build_models(family: str) -> ModelSet:
    try:
        builder = MODEL_FAMILIES[family]
    except KeyError:
        raise ModelLoadFailure(
            f"unknown model family {family!r}; choose from {sorted(MODEL_FAMILIES)}"
        ) from None
    return builder()
