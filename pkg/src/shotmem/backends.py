"""Generation backends.

A backend turns a conditioning plan plus prompt and seed into the shot's raw
frames. The production backend is a remote diffusion service; for desk-scale
runs and tests :class:`MockBackend` synthesizes small deterministic frames
whose pixels respond to the conditioning, so downstream consistency metrics
react to memory the way a real generator would.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import imagery
from .conditioning import ConditioningPlan, LatentShape
from .errors import BackendFailure

BACKEND_WIRE_VERSION = 1


@dataclass(frozen=True)
class BackendRequest:
    """Transport-level generation request (memory images carried inline)."""

    prompt: str
    seed: int
    shape: LatentShape
    temporal_indices: tuple[int, ...]
    mask_profile: tuple[int, ...]
    memory_images: tuple[bytes, ...]
    first_frame: bytes | None = None

    def to_wire(self) -> dict:
        return {
            "wire_version": BACKEND_WIRE_VERSION,
            "prompt": self.prompt,
            "seed": self.seed,
            "latent_shape": self.shape.to_dict(),
            "temporal_indices": list(self.temporal_indices),
            "mask_profile": list(self.mask_profile),
            "memory_frames": [
                {"ref": imagery.content_ref(b), "b64": base64.b64encode(b).decode("ascii")}
                for b in self.memory_images
            ],
            "first_frame": (
                None
                if self.first_frame is None
                else {
                    "ref": imagery.content_ref(self.first_frame),
                    "b64": base64.b64encode(self.first_frame).decode("ascii"),
                }
            ),
        }

    def summary(self) -> dict:
        """Content hashes only; what request logs record."""
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "f_m": len(self.memory_images),
            "temporal_indices": list(self.temporal_indices),
            "memory_refs": [imagery.content_ref(b) for b in self.memory_images],
            "first_frame_ref": (
                None if self.first_frame is None else imagery.content_ref(self.first_frame)
            ),
        }


def build_backend_request(
    plan: ConditioningPlan, prompt: str, seed: int, resolve_ref
) -> BackendRequest:
    """Materialize a conditioning plan into a transportable request.

    ``resolve_ref`` maps a memory frame's content ref to its image bytes.
    """
    if plan.shape is None:
        raise BackendFailure("conditioning plan carries no latent shape")
    return BackendRequest(
        prompt=prompt,
        seed=seed,
        shape=plan.shape,
        temporal_indices=tuple(plan.temporal_indices),
        mask_profile=tuple(plan.mask_profile()),
        memory_images=tuple(resolve_ref(f.frame_ref) for f in plan.memory_order),
        first_frame=plan.first_frame,
    )


@dataclass
class MockBackendConfig:
    pixels_per_latent: int = 8  # rendered image is (h, w) * this
    max_segments: int = 2  # distinct content phases within one shot
    consistency_strength: float = 0.6  # 0 disables memory blending


class MockBackend:
    """Deterministic synthetic generator for desk-scale runs.

    Content (palette, gradient, a moving disc) is derived from a keyed hash
    of the prompt and seed; the consistency knob blends the average of the
    conditioning memory frames into every output pixel so that shots sharing
    memory measurably resemble each other. A conditioned first frame is
    reproduced bit-exactly and cross-faded into the shot's own content.
    """

    supports_memory = True
    supports_first_frame = True
    backend_id = "mock"

    def __init__(self, config: MockBackendConfig | None = None):
        self.config = config or MockBackendConfig()
        self.request_log: list[dict] = []

    def _rng(self, prompt: str, seed: int, salt: str) -> np.random.Generator:
        digest = hashlib.sha256(
            json.dumps({"prompt": prompt, "seed": seed, "salt": salt}).encode("utf-8")
        ).digest()
        return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest[:16], "big")))

    def _segment_canvas(self, rng: np.random.Generator, width: int, height: int):
        """Per-segment content parameters: color field plus one moving disc."""
        yy, xx = np.mgrid[0:height, 0:width]
        u = xx / max(width - 1, 1)
        v = yy / max(height - 1, 1)
        color_a = rng.uniform(0.05, 0.95, size=3)
        color_b = rng.uniform(0.05, 0.95, size=3)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        ramp = (np.cos(angle) * u + np.sin(angle) * v + 1.0) / 2.0
        freq = rng.uniform(1.0, 3.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = 0.5 + 0.5 * np.sin(2.0 * np.pi * freq * ramp + phase)
        base = ramp[:, :, None] * color_a + (1.0 - ramp)[:, :, None] * color_b
        base = 0.75 * base + 0.25 * wave[:, :, None]
        disc_color = rng.uniform(0.0, 1.0, size=3)
        disc_start = rng.uniform(0.15, 0.85, size=2)
        disc_vel = rng.uniform(-0.4, 0.4, size=2)
        disc_radius = rng.uniform(0.12, 0.22)
        return base, (u, v, disc_color, disc_start, disc_vel, disc_radius)

    def _render(self, canvas, disc, progress: float) -> np.ndarray:
        base, (u, v, color, start, vel, radius) = canvas, disc
        cx = (start[0] + vel[0] * progress) % 1.0
        cy = (start[1] + vel[1] * progress) % 1.0
        dist2 = (u - cx) ** 2 + (v - cy) ** 2
        disc_mask = np.exp(-dist2 / (2.0 * radius**2))
        return base * (1.0 - disc_mask[:, :, None]) + disc_mask[:, :, None] * color

    def generate(self, request: BackendRequest) -> list[bytes]:
        self.request_log.append(request.summary())
        shape = request.shape
        total = shape.raw_frames
        width = shape.w * self.config.pixels_per_latent
        height = shape.h * self.config.pixels_per_latent

        layout_rng = self._rng(request.prompt, request.seed, "layout")
        n_segments = int(layout_rng.integers(1, self.config.max_segments + 1))
        segments = [
            self._segment_canvas(self._rng(request.prompt, request.seed, f"seg{k}"), width, height)
            for k in range(n_segments)
        ]

        memory_avg = None
        alpha = self.config.consistency_strength
        if request.memory_images and alpha > 0.0:
            decoded = [
                imagery.resize_rgb(imagery.decode_rgb(b), width, height)
                for b in request.memory_images
            ]
            memory_avg = np.mean(decoded, axis=0)

        ff_pixels = None
        if request.first_frame is not None:
            ff_pixels = imagery.resize_rgb(
                imagery.decode_rgb(request.first_frame), width, height
            )

        frames: list[bytes] = []
        for j in range(total):
            if j == 0 and request.first_frame is not None:
                frames.append(request.first_frame)  # continuation is bit-exact
                continue
            seg_index = min(j * n_segments // total, n_segments - 1)
            canvas, disc = segments[seg_index]
            progress = j / max(total - 1, 1)
            pixels = self._render(canvas, disc, progress)
            if memory_avg is not None:
                pixels = (1.0 - alpha) * pixels + alpha * memory_avg
            if ff_pixels is not None:
                fade = j / max(total - 1, 1)
                pixels = (1.0 - fade) * ff_pixels + fade * pixels
            frames.append(imagery.encode_png(pixels))
        return frames


class RemoteBackend:
    """Client for a generation service speaking the backend wire protocol."""

    supports_memory = True
    supports_first_frame = True

    def __init__(self, base_url: str, session=None, timeout: float = 600.0):
        if session is None:
            import requests

            session = requests.Session()
        self._base = base_url.rstrip("/")
        self._session = session
        self._timeout = timeout
        self.backend_id = f"http:{self._base}"

    def generate(self, request: BackendRequest) -> list[bytes]:
        try:
            resp = self._session.post(
                self._base + "/generate", json=request.to_wire(), timeout=self._timeout
            )
        except Exception as exc:
            raise BackendFailure(f"generation backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendFailure(
                f"/generate returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            payload = resp.json()
            frames = []
            for entry in payload["frames"]:
                data = base64.b64decode(entry["b64"])
                ref = entry.get("ref")
                if ref and imagery.content_ref(data) != ref:
                    raise BackendFailure(f"frame payload does not match its ref {ref}")
                frames.append(data)
        except BackendFailure:
            raise
        except Exception as exc:
            raise BackendFailure(f"malformed backend response: {exc}") from exc
        if len(frames) != request.shape.raw_frames:
            raise BackendFailure(
                f"backend returned {len(frames)} frames, expected {request.shape.raw_frames}"
            )
        return frames


def make_backend(spec: str, mock_config: MockBackendConfig | None = None):
    """Resolve a backend selector: ``mock`` or a remote service base URL."""
    if spec == "mock":
        return MockBackend(mock_config)
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteBackend(spec)
    raise BackendFailure(f"unknown backend selector: {spec!r}")
