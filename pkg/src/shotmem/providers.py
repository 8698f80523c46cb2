"""Embedding and aesthetic-score providers.

Providers answer four request kinds: ``embed_image``, ``embed_video``,
``embed_text``, and ``score_aesthetic``. Embedding responses are unit-norm
vectors of a stable per-model dimension; scoring returns one real. The same
contract is served in-process by :class:`MockProviders` (deterministic pixel
and n-gram features, no model weights) and over HTTP by the sidecar service,
reachable through :class:`HTTPProviders`.
"""

from __future__ import annotations

import base64
import hashlib

import numpy as np

from . import imagery
from .embedding import NORM_TOLERANCE, norm_drift, normalize
from .errors import ProviderFailure

PROTOCOL_VERSION = 1
REQUEST_KINDS = ("embed_image", "embed_video", "embed_text", "score_aesthetic")

_GRAY_GRID = 6  # downsampled luminance block in the tiny image feature
IMAGE_DIM = _GRAY_GRID * _GRAY_GRID + 3 + 3 + 12
# Text shares the joint embedding dimension so video-vs-prompt cosine works.
TEXT_DIM = IMAGE_DIM


def tiny_image_features(image_bytes: bytes) -> np.ndarray:
    """Deterministic pixel-statistics embedding (54 dims, unit norm).

    Mean-centered so unrelated content decorrelates: luminance layout,
    channel means/spreads, and coarse per-channel histograms.
    """
    rgb = imagery.decode_rgb(image_bytes)
    gray = rgb.mean(axis=2)
    block = imagery.resize_rgb(np.repeat(gray[:, :, None], 3, axis=2), _GRAY_GRID, _GRAY_GRID)
    block = block.mean(axis=2)
    parts = [
        (block - block.mean()).reshape(-1),
        rgb.reshape(-1, 3).mean(axis=0) - 0.5,
        rgb.reshape(-1, 3).std(axis=0) - 0.2,
        np.concatenate(
            [
                np.histogram(rgb[:, :, ch], bins=4, range=(0.0, 1.0))[0] / rgb[:, :, ch].size
                - 0.25
                for ch in range(3)
            ]
        ),
    ]
    return normalize(np.concatenate(parts))


def tiny_text_features(text: str, dim: int = TEXT_DIM) -> np.ndarray:
    """Signed hashed character-trigram embedding (unit norm)."""
    if not text:
        raise ProviderFailure("cannot embed empty text")
    padded = f"  {text.lower()} "
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        digest = hashlib.sha256(padded[i : i + 3].encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] & 1 else -1.0
        counts[bucket] += sign
    if not np.any(counts):
        raise ProviderFailure("text produced no features")
    return normalize(counts)


def tiny_aesthetic_score(image_bytes: bytes) -> float:
    """Deterministic contrast/sharpness score on roughly a 0-10 scale."""
    rgb = imagery.decode_rgb(image_bytes)
    gray = rgb.mean(axis=2)
    contrast = float(gray.std())
    sharp_h = float(np.abs(np.diff(gray, axis=1)).mean()) if gray.shape[1] > 1 else 0.0
    sharp_v = float(np.abs(np.diff(gray, axis=0)).mean()) if gray.shape[0] > 1 else 0.0
    score = 30.0 * contrast + 40.0 * (sharp_h + sharp_v)
    return float(np.clip(score, 0.0, 10.0))


class MockProviders:
    """In-process deterministic providers; no model weights required."""

    provider_id = "mock"

    def __init__(self):
        self._image_dim = IMAGE_DIM
        self._text_dim = TEXT_DIM

    def info(self) -> dict:
        return {
            "protocol_version": PROTOCOL_VERSION,
            "models": {
                "embed_image": {"model_id": "mock-image-v1", "dim": self._image_dim},
                "embed_video": {"model_id": "mock-video-v1", "dim": self._image_dim},
                "embed_text": {"model_id": "mock-text-v1", "dim": self._text_dim},
                "score_aesthetic": {"model_id": "mock-aesthetic-v1", "dim": 1},
            },
        }

    def embed_image(self, image_bytes: bytes, context: str | None = None) -> np.ndarray:
        try:
            return tiny_image_features(image_bytes)
        except ProviderFailure:
            raise
        except Exception as exc:
            raise ProviderFailure(f"image embedding failed: {exc}") from exc

    def embed_video(self, frames, context: str | None = None) -> np.ndarray:
        frames = list(frames)
        if not frames:
            raise ProviderFailure("cannot embed an empty frame list")
        vectors = [self.embed_image(f, context=context) for f in frames]
        return normalize(np.mean(vectors, axis=0))

    def embed_text(self, text: str, context: str | None = None) -> np.ndarray:
        return tiny_text_features(text, self._text_dim)

    def score_aesthetic(self, image_bytes: bytes, context: str | None = None) -> float:
        try:
            return tiny_aesthetic_score(image_bytes)
        except Exception as exc:
            raise ProviderFailure(f"aesthetic scoring failed: {exc}") from exc


class HTTPProviders:
    """Provider client for a sidecar service speaking the HTTP protocol.

    ``session`` only needs ``get``/``post`` with the requests interface, so
    an in-process test client works as well as a live server.
    """

    def __init__(self, base_url: str, session=None, timeout: float = 30.0):
        if session is None:
            import requests

            session = requests.Session()
        self._base = base_url.rstrip("/")
        self._session = session
        self._timeout = timeout
        self.provider_id = f"http:{self._base}"

    def _post(self, path: str, **kwargs) -> dict:
        try:
            resp = self._session.post(self._base + path, **kwargs)
        except Exception as exc:
            raise ProviderFailure(f"provider endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderFailure(f"{path} returned HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def _vector(self, payload: dict) -> np.ndarray:
        try:
            return np.asarray(payload["vector"], dtype=np.float64)
        except Exception as exc:
            raise ProviderFailure(f"malformed provider response: {exc}") from exc

    def info(self) -> dict:
        try:
            resp = self._session.get(self._base + "/health")
        except Exception as exc:
            raise ProviderFailure(f"provider health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderFailure(f"/health returned HTTP {resp.status_code}")
        return resp.json()

    def embed_image(self, image_bytes: bytes, context: str | None = None) -> np.ndarray:
        body = {
            "protocol_version": PROTOCOL_VERSION,
            "image_b64": base64.b64encode(image_bytes).decode("ascii"),
            "context": context,
        }
        return self._vector(self._post("/embed_image", json=body))

    def embed_video(self, frames, context: str | None = None) -> np.ndarray:
        files = [
            ("frames", (f"frame_{i:04d}.png", data, "image/png"))
            for i, data in enumerate(frames)
        ]
        data = {"protocol_version": str(PROTOCOL_VERSION)}
        if context is not None:
            data["context"] = context
        return self._vector(self._post("/embed_video", files=files, data=data))

    def embed_text(self, text: str, context: str | None = None) -> np.ndarray:
        body = {"protocol_version": PROTOCOL_VERSION, "text": text, "context": context}
        return self._vector(self._post("/embed_text", json=body))

    def score_aesthetic(self, image_bytes: bytes, context: str | None = None) -> float:
        body = {
            "protocol_version": PROTOCOL_VERSION,
            "image_b64": base64.b64encode(image_bytes).decode("ascii"),
            "context": context,
        }
        payload = self._post("/score_aesthetic", json=body)
        try:
            return float(payload["score"])
        except Exception as exc:
            raise ProviderFailure(f"malformed provider response: {exc}") from exc


def check_provider_conformance(provider, images, texts) -> list[str]:
    """Black-box protocol conformance checks shared by mock and sidecar.

    Asserts unit-norm vectors, dims matching the health declaration,
    determinism on repeated requests, and rejection of empty text. Returns
    the list of passed check names.
    """
    assert len(images) >= 2 and len(texts) >= 1, "need sample images and texts"
    passed = []

    info = provider.info()
    assert info.get("protocol_version") == PROTOCOL_VERSION, "protocol_version mismatch"
    models = info.get("models", {})
    for kind in REQUEST_KINDS:
        assert kind in models, f"health misses model for {kind}"
        assert models[kind].get("model_id"), f"health misses model_id for {kind}"
        assert int(models[kind]["dim"]) >= 1
    passed.append("health_declares_models")

    for name, call, declared in (
        ("embed_image", lambda: provider.embed_image(images[0]), models["embed_image"]["dim"]),
        ("embed_video", lambda: provider.embed_video(images), models["embed_video"]["dim"]),
        ("embed_text", lambda: provider.embed_text(texts[0]), models["embed_text"]["dim"]),
    ):
        first = call()
        second = call()
        assert first.shape == (int(declared),), f"{name} dim differs from health declaration"
        assert norm_drift(first) <= NORM_TOLERANCE, f"{name} response not unit-norm"
        assert np.array_equal(first, second), f"{name} not deterministic"
        passed.append(f"{name}_unit_norm_stable")

    for img in images:
        vec = provider.embed_image(img)
        assert vec.shape == (int(models["embed_image"]["dim"]),), "embed_image dim drifted"
    passed.append("embed_image_dim_constant")

    s1 = provider.score_aesthetic(images[0])
    s2 = provider.score_aesthetic(images[0])
    assert np.isfinite(s1) and s1 == s2, "score_aesthetic not deterministic"
    passed.append("score_aesthetic_deterministic")

    try:
        provider.embed_text("")
    except ProviderFailure:
        passed.append("empty_text_rejected")
    else:
        raise AssertionError("embed_text('') must be rejected")

    return passed


def make_providers(spec: str):
    """Resolve a provider selector: ``mock`` or a sidecar base URL."""
    if spec == "mock":
        return MockProviders()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HTTPProviders(spec)
    raise ProviderFailure(f"unknown providers selector: {spec!r}")
