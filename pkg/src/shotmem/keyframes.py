"""Keyframe selection for shot memory.

Selection runs in two stages: a sequential semantic scan keeps frames whose
embedding drifts away from the last kept keyframe, and an aesthetic filter
drops low-scoring survivors. The scan threshold adapts downward whenever a
pass keeps more frames than the per-shot limit; if the threshold bottoms out
the selection is truncated by a greedy farthest-first sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import NORM_TOLERANCE, as_matrix, norm_drift, normalize
from .errors import ConfigError, DimensionMismatch, EmptyInput, ProviderFailure

_THETA_EPS = 1e-12


@dataclass(frozen=True)
class SelectionConfig:
    theta_init: float = 0.9
    per_shot_limit: int = 3
    theta_step: float = 0.05
    theta_min: float = 0.5
    aesthetic_threshold: float = 3.0

    def __post_init__(self):
        if not 0.0 < self.theta_init <= 1.0:
            raise ConfigError(f"theta_init must be in (0, 1], got {self.theta_init}")
        if self.per_shot_limit < 1:
            raise ConfigError(f"per_shot_limit must be positive, got {self.per_shot_limit}")
        if self.theta_step <= 0.0:
            raise ConfigError(f"theta_step must be > 0, got {self.theta_step}")
        if self.theta_min < 0.0:
            raise ConfigError(f"theta_min must be >= 0, got {self.theta_min}")
        if self.theta_min > self.theta_init:
            raise ConfigError(
                f"theta_min {self.theta_min} exceeds theta_init {self.theta_init}"
            )


@dataclass(frozen=True)
class KeyframeCandidate:
    frame_index: int
    embedding: np.ndarray
    aesthetic_score: float


def _scan_pass(matrix: np.ndarray, theta: float) -> list[int]:
    # Frame 0 is always a keyframe; later frames join when their similarity
    # to the most recently kept keyframe falls strictly below theta.
    selected = [0]
    for i in range(1, matrix.shape[0]):
        sim = float(np.dot(matrix[i], matrix[selected[-1]]))
        if sim < theta:
            selected.append(i)
    return selected


def _farthest_first_truncate(matrix: np.ndarray, indices: list[int], limit: int) -> list[int]:
    # Greedy max-min cosine-distance sweep seeded at frame 0; earliest index
    # wins ties. Returns indices sorted ascending.
    chosen = [indices[0]]
    remaining = list(indices[1:])
    while len(chosen) < limit and remaining:
        best_idx = None
        best_dist = -np.inf
        for idx in remaining:
            dist = min(1.0 - float(np.dot(matrix[idx], matrix[c])) for c in chosen)
            if dist > best_dist:
                best_dist = dist
                best_idx = idx
        chosen.append(best_idx)
        remaining.remove(best_idx)
    return sorted(chosen)


def select_semantic_keyframes(embeddings, config: SelectionConfig) -> list[int]:
    """Pick semantically distinct frame indices from an ordered embedding list.

    Returns strictly increasing indices, always starting with 0, never more
    than ``config.per_shot_limit`` entries.
    """
    matrix = as_matrix([normalize(e) for e in embeddings])
    theta = config.theta_init
    while True:
        selected = _scan_pass(matrix, theta)
        if len(selected) <= config.per_shot_limit:
            return selected
        if theta - config.theta_min <= _THETA_EPS:
            return _farthest_first_truncate(matrix, selected, config.per_shot_limit)
        theta = max(theta - config.theta_step, config.theta_min)


def aesthetic_filter(candidates, config: SelectionConfig) -> list[KeyframeCandidate]:
    """Keep candidates scoring at or above the aesthetic threshold.

    When every candidate falls short, the single best-scoring one (earliest
    frame on ties) is kept so a shot always contributes some memory.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyInput("no keyframe candidates to filter")
    kept = [c for c in candidates if c.aesthetic_score >= config.aesthetic_threshold]
    if kept:
        return kept
    best = max(candidates, key=lambda c: (c.aesthetic_score, -c.frame_index))
    return [best]


def extract_shot_memory(
    frames,
    providers,
    config: SelectionConfig,
    prompt: str | None = None,
    embeddings=None,
) -> list[KeyframeCandidate]:
    """Embed, select, score, and filter one shot's frames into memory candidates.

    ``frames`` is an ordered list of encoded images. Precomputed per-frame
    embeddings may be passed to avoid a second provider round trip.
    """
    frames = list(frames)
    if not frames:
        raise EmptyInput("shot produced no frames")
    try:
        if embeddings is None:
            embeddings = [providers.embed_image(f, context=prompt) for f in frames]
        embeddings = list(embeddings)
        if len(embeddings) != len(frames):
            raise ProviderFailure(
                f"provider returned {len(embeddings)} embeddings for {len(frames)} frames"
            )
        for e in embeddings:
            if norm_drift(e) > NORM_TOLERANCE:
                raise ProviderFailure("provider returned a non-unit-norm embedding")
        embeddings = [normalize(e) for e in embeddings]
        indices = select_semantic_keyframes(embeddings, config)
        candidates = [
            KeyframeCandidate(
                frame_index=i,
                embedding=embeddings[i],
                aesthetic_score=float(providers.score_aesthetic(frames[i], context=prompt)),
            )
            for i in indices
        ]
    except (ProviderFailure, EmptyInput, ConfigError, DimensionMismatch):
        raise
    except Exception as exc:
        raise ProviderFailure(f"provider call failed during memory extraction: {exc}") from exc
    return aesthetic_filter(candidates, config)
