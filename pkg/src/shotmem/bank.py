"""Bounded visual memory with sink + sliding-window eviction.

The bank keeps an ordered set of keyframes. The first ``sink_size`` frames
ever admitted are pinned permanently as long-term anchors; the rest form a
short-term window whose oldest member is evicted on overflow. A candidate is
admitted only if it stays semantically distinct (cosine similarity below
``dup_threshold``) from every resident frame.

Banks are immutable values: every mutation returns a new bank, which keeps
replay and resume deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .embedding import normalize
from .errors import CapacityExceeded, ConfigError, EmptyInput, LengthMismatch

DEFAULT_SINK_SIZE = 3
DEFAULT_CAPACITY = 10
DEFAULT_DUP_THRESHOLD = 0.9


@dataclass(frozen=True)
class MemoryFrame:
    frame_ref: str
    embedding: np.ndarray
    aesthetic_score: float
    source_shot: int  # -1 for user-provided reference images
    source_frame: int
    is_sink: bool
    insertion_seq: int


@dataclass(frozen=True)
class MemoryBank:
    frames: tuple[MemoryFrame, ...] = ()
    sink_size: int = DEFAULT_SINK_SIZE
    capacity: int = DEFAULT_CAPACITY
    dup_threshold: float = DEFAULT_DUP_THRESHOLD
    next_seq: int = 0
    eviction_count: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError(f"capacity must be positive, got {self.capacity}")
        if self.sink_size < 0:
            raise ConfigError(f"sink_size must be nonnegative, got {self.sink_size}")
        if self.capacity < self.sink_size:
            raise ConfigError(
                f"capacity {self.capacity} smaller than sink_size {self.sink_size}"
            )
        if not 0.0 < self.dup_threshold <= 1.0:
            raise ConfigError(f"dup_threshold must be in (0, 1], got {self.dup_threshold}")

    def __len__(self) -> int:
        return len(self.frames)

    def is_duplicate(self, embedding) -> bool:
        vec = normalize(embedding)
        return any(float(np.dot(vec, f.embedding)) >= self.dup_threshold for f in self.frames)

    def _admit_one(self, frame_ref, embedding, score, source_shot, source_frame):
        """Admit a single candidate, evicting the oldest window frame on overflow.

        Returns the new bank, unchanged when the candidate is a duplicate or
        no window frame is available to evict.
        """
        vec = normalize(embedding)
        if self.is_duplicate(vec):
            return self
        frames = list(self.frames)
        evictions = self.eviction_count
        if len(frames) >= self.capacity:
            evict_at = next((i for i, f in enumerate(frames) if not f.is_sink), None)
            if evict_at is None:
                return self  # bank saturated with sinks; nothing evictable
            del frames[evict_at]
            evictions += 1
        frames.append(
            MemoryFrame(
                frame_ref=frame_ref,
                embedding=vec,
                aesthetic_score=float(score),
                source_shot=source_shot,
                source_frame=source_frame,
                is_sink=self.next_seq < self.sink_size,
                insertion_seq=self.next_seq,
            )
        )
        return replace(
            self, frames=tuple(frames), next_seq=self.next_seq + 1, eviction_count=evictions
        )

    def update(self, candidates, source_shot: int, frame_refs=None) -> "MemoryBank":
        """Fold one shot's keyframe candidates into a new bank.

        Candidates are tested oldest-frame-first; a later candidate can be
        rejected for duplicating one admitted earlier in the same call.
        """
        candidates = list(candidates)
        if not candidates:
            raise EmptyInput("no candidates to fold into the bank")
        if frame_refs is None:
            frame_refs = [f"shot:{source_shot}:frame:{c.frame_index}" for c in candidates]
        frame_refs = list(frame_refs)
        if len(frame_refs) != len(candidates):
            raise LengthMismatch(
                f"{len(frame_refs)} frame refs for {len(candidates)} candidates"
            )
        bank = self
        for ref, cand in zip(frame_refs, candidates):
            bank = bank._admit_one(
                ref, cand.embedding, cand.aesthetic_score, source_shot, cand.frame_index
            )
        return bank

    def snapshot_for_conditioning(self) -> list[MemoryFrame]:
        """Frames in insertion order: sinks first, then window oldest to newest."""
        return list(self.frames)

    def to_manifest(self) -> dict:
        return {
            "sink_size": self.sink_size,
            "capacity": self.capacity,
            "dup_threshold": self.dup_threshold,
            "next_seq": self.next_seq,
            "eviction_count": self.eviction_count,
            "frames": [
                {
                    "frame_ref": f.frame_ref,
                    "embedding": [float(x) for x in f.embedding],
                    "aesthetic_score": f.aesthetic_score,
                    "source_shot": f.source_shot,
                    "source_frame": f.source_frame,
                    "is_sink": f.is_sink,
                    "insertion_seq": f.insertion_seq,
                }
                for f in self.frames
            ],
        }

    @classmethod
    def from_manifest(cls, manifest: dict) -> "MemoryBank":
        frames = tuple(
            MemoryFrame(
                frame_ref=f["frame_ref"],
                embedding=np.asarray(f["embedding"], dtype=np.float64),
                aesthetic_score=float(f["aesthetic_score"]),
                source_shot=int(f["source_shot"]),
                source_frame=int(f["source_frame"]),
                is_sink=bool(f["is_sink"]),
                insertion_seq=int(f["insertion_seq"]),
            )
            for f in manifest["frames"]
        )
        return cls(
            frames=frames,
            sink_size=int(manifest["sink_size"]),
            capacity=int(manifest["capacity"]),
            dup_threshold=float(manifest["dup_threshold"]),
            next_seq=int(manifest["next_seq"]),
            eviction_count=int(manifest.get("eviction_count", 0)),
        )


def init_empty(
    sink_size: int = DEFAULT_SINK_SIZE,
    capacity: int = DEFAULT_CAPACITY,
    dup_threshold: float = DEFAULT_DUP_THRESHOLD,
) -> MemoryBank:
    return MemoryBank(sink_size=sink_size, capacity=capacity, dup_threshold=dup_threshold)


def init_from_references(
    images,
    embeddings,
    scores=None,
    sink_size: int = DEFAULT_SINK_SIZE,
    capacity: int = DEFAULT_CAPACITY,
    dup_threshold: float = DEFAULT_DUP_THRESHOLD,
) -> MemoryBank:
    """Seed a bank from user-supplied reference images.

    References go through the same dedup gate as generated keyframes; the
    first ``sink_size`` admitted become permanent sinks.
    """
    images = list(images)
    embeddings = list(embeddings)
    if not images or len(images) != len(embeddings):
        raise LengthMismatch(
            f"got {len(images)} images and {len(embeddings)} embeddings; "
            "need equal nonzero counts"
        )
    if scores is None:
        scores = [0.0] * len(images)
    scores = list(scores)
    if len(scores) != len(images):
        raise LengthMismatch(f"got {len(scores)} scores for {len(images)} images")
    if len(images) > capacity:
        raise CapacityExceeded(f"{len(images)} reference images exceed capacity {capacity}")
    bank = init_empty(sink_size=sink_size, capacity=capacity, dup_threshold=dup_threshold)
    for i, (ref, emb, score) in enumerate(zip(images, embeddings, scores)):
        bank = bank._admit_one(ref, emb, score, source_shot=-1, source_frame=i)
    return bank
