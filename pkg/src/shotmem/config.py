"""Run configuration: defaults, file loading, flag merging, fingerprinting."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import yaml

from .conditioning import DEFAULT_ROPE_OFFSET, LatentShape
from .errors import ConfigError
from .keyframes import SelectionConfig


def _default_latent() -> LatentShape:
    # Desk-scale default: 16 raw frames of 32x32 per shot.
    return LatentShape(c=4, f=4, h=4, w=4, s=4)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    latent: LatentShape = field(default_factory=_default_latent)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    sink_size: int = 3
    capacity: int = 10
    dup_threshold: float = 0.9
    rope_offset: int = DEFAULT_ROPE_OFFSET
    memory_enabled: bool = True
    consistency_strength: float = 0.6
    max_segments: int = 2
    backend: str = "mock"
    providers: str = "mock"
    reference_images: tuple[str, ...] = ()
    # Per-shot latent frame-count overrides; shots are otherwise uniform.
    shot_frame_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rope_offset < 1:
            raise ConfigError(f"rope_offset must be >= 1, got {self.rope_offset}")
        if not 0.0 <= self.consistency_strength <= 1.0:
            raise ConfigError(
                f"consistency_strength must be in [0, 1], got {self.consistency_strength}"
            )

    def shape_for_shot(self, shot_index: int) -> LatentShape:
        override = self.shot_frame_overrides.get(shot_index)
        if override is None:
            return self.latent
        return replace(self.latent, f=int(override))

    def to_dict(self) -> dict:
        sel = self.selection
        return {
            "seed": self.seed,
            "latent": self.latent.to_dict(),
            "selection": {
                "theta_init": sel.theta_init,
                "per_shot_limit": sel.per_shot_limit,
                "theta_step": sel.theta_step,
                "theta_min": sel.theta_min,
                "aesthetic_threshold": sel.aesthetic_threshold,
            },
            "sink_size": self.sink_size,
            "capacity": self.capacity,
            "dup_threshold": self.dup_threshold,
            "rope_offset": self.rope_offset,
            "memory_enabled": self.memory_enabled,
            "consistency_strength": self.consistency_strength,
            "max_segments": self.max_segments,
            "backend": self.backend,
            "providers": self.providers,
            "reference_images": list(self.reference_images),
            "shot_frame_overrides": {str(k): int(v) for k, v in self.shot_frame_overrides.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "latent" in d:
            kwargs["latent"] = LatentShape.from_dict(d.pop("latent"))
        if "selection" in d:
            kwargs["selection"] = SelectionConfig(**d.pop("selection"))
        if "reference_images" in d:
            kwargs["reference_images"] = tuple(d.pop("reference_images"))
        if "shot_frame_overrides" in d:
            kwargs["shot_frame_overrides"] = {
                int(k): int(v) for k, v in d.pop("shot_frame_overrides").items()
            }
        try:
            return cls(**kwargs, **d)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc


def load_config_file(path) -> RunConfig:
    """Load a YAML (or JSON; YAML is a superset) config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return RunConfig.from_dict(doc)


def config_fingerprint(config: RunConfig, script_text: str, backend_id: str, provider_id: str) -> str:
    """Hash of everything that determines a run's bytes."""
    payload = {
        "config": config.to_dict(),
        "script_sha256": hashlib.sha256(script_text.encode("utf-8")).hexdigest(),
        "backend_id": backend_id,
        "provider_id": provider_id,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
