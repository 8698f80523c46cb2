"""Conditioning assembly for memory-augmented shot generation.

Memory keyframes ride ahead of the shot's latent frames. Their temporal
rotary positions are negative multiples of a fixed offset so the shot itself
keeps positions 0..f-1, and a binary mask marks the memory slices as
preserved while everything else is generated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidOffset, InvalidShape, MissingPredecessor, OddDimension

DEFAULT_ROPE_OFFSET = 5
DEFAULT_ROPE_BASE = 10000.0


@dataclass(frozen=True)
class LatentShape:
    """Latent geometry of one shot: ``F = s * f`` raw frames."""

    c: int
    f: int
    h: int
    w: int
    s: int

    def __post_init__(self):
        for name in ("c", "f", "h", "w", "s"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise InvalidShape(f"latent dim {name} must be a positive integer, got {value}")

    @property
    def raw_frames(self) -> int:
        return self.s * self.f

    def to_dict(self) -> dict:
        return {"c": self.c, "f": self.f, "h": self.h, "w": self.w, "s": self.s}

    @classmethod
    def from_dict(cls, d: dict) -> "LatentShape":
        return cls(c=int(d["c"]), f=int(d["f"]), h=int(d["h"]), w=int(d["w"]), s=int(d["s"]))


@dataclass(frozen=True)
class RopeConfig:
    head_dim: int
    base: float = DEFAULT_ROPE_BASE

    def __post_init__(self):
        if self.head_dim < 2 or self.head_dim % 2 != 0:
            raise OddDimension(f"head_dim must be a positive even integer, got {self.head_dim}")
        if self.base <= 0:
            raise InvalidOffset(f"rope base must be positive, got {self.base}")


@dataclass(frozen=True)
class ConditioningPlan:
    f_m: int
    mask: np.ndarray  # (s, f_m + f, h, w) uint8
    temporal_indices: list[int]
    memory_order: list  # MemoryFrame handles, bank insertion order
    first_frame: bytes | None = None
    rope_offset: int = DEFAULT_ROPE_OFFSET
    shape: LatentShape | None = None

    def mask_profile(self) -> list[int]:
        # The mask is separable: one bit per temporal slice is enough on the wire.
        return [1] * self.f_m + [0] * (self.mask.shape[1] - self.f_m)


def temporal_indices(f_m: int, f: int, S: int) -> list[int]:
    """Temporal positions: memory at -f_m*S .. -S, then the shot at 0 .. f-1."""
    if f_m < 0:
        raise InvalidShape(f"memory frame count must be nonnegative, got {f_m}")
    if f < 1:
        raise InvalidShape(f"shot latent frame count must be positive, got {f}")
    if S < 1:
        raise InvalidOffset(f"temporal offset must be >= 1, got {S}")
    return list(range(-f_m * S, 0, S)) + list(range(f))


def build_mask(shape: LatentShape, f_m: int) -> np.ndarray:
    """Binary mask of shape (s, f_m + f, h, w): ones on memory slices only."""
    if f_m < 0:
        raise InvalidShape(f"memory frame count must be nonnegative, got {f_m}")
    mask = np.zeros((shape.s, f_m + shape.f, shape.h, shape.w), dtype=np.uint8)
    mask[:, :f_m, :, :] = 1
    return mask


def assemble_plan(
    bank_snapshot,
    shot,
    prev,
    shape: LatentShape,
    S: int = DEFAULT_ROPE_OFFSET,
) -> ConditioningPlan:
    """Combine the bank snapshot and shot spec into one conditioning plan.

    ``prev`` is the previous shot's result; it must be present for
    continuation shots (``is_cut`` False), whose first frame is reused.
    """
    snapshot = list(bank_snapshot)
    first_frame = None
    if not shot.is_cut:
        if prev is None:
            raise MissingPredecessor(
                f"shot {shot.global_index} continues from a predecessor but none was given"
            )
        first_frame = prev.last_frame_bytes()
    f_m = len(snapshot)
    return ConditioningPlan(
        f_m=f_m,
        mask=build_mask(shape, f_m),
        temporal_indices=temporal_indices(f_m, shape.f, S),
        memory_order=snapshot,
        first_frame=first_frame,
        rope_offset=S,
        shape=shape,
    )


def rope_rotate(vector, position: int, config: RopeConfig) -> np.ndarray:
    """Rotary transform: rotate coordinate pairs (2j, 2j+1) by
    ``position * base ** (-2j / head_dim)``. Norm-preserving for any integer
    position, negative included."""
    arr = np.asarray(vector, dtype=np.float64).reshape(-1)
    if arr.size != config.head_dim:
        raise InvalidShape(f"vector has dim {arr.size}, rope config expects {config.head_dim}")
    half = config.head_dim // 2
    freqs = config.base ** (-np.arange(half, dtype=np.float64) * 2.0 / config.head_dim)
    angles = float(position) * freqs
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = arr[0::2], arr[1::2]
    out = np.empty_like(arr)
    out[0::2] = even * cos - odd * sin
    out[1::2] = even * sin + odd * cos
    return out
