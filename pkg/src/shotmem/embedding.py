"""Shared helpers for unit-norm embedding vectors."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptyInput

# Embeddings entering the engine must sit within this distance of the unit
# sphere; providers are held to it, internal ingest renormalizes.
NORM_TOLERANCE = 1e-4


def normalize(vector) -> np.ndarray:
    """Project a vector onto the unit sphere (float64)."""
    arr = np.asarray(vector, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise EmptyInput("cannot normalize an empty vector")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise EmptyInput("cannot normalize a zero or non-finite vector")
    return arr / norm


def norm_drift(vector) -> float:
    """Absolute distance of the vector's Euclidean norm from 1."""
    arr = np.asarray(vector, dtype=np.float64).reshape(-1)
    return abs(float(np.linalg.norm(arr)) - 1.0)


def as_matrix(embeddings) -> np.ndarray:
    """Stack embeddings into an (n, D) float64 matrix, checking dimensions."""
    embeddings = list(embeddings)
    if not embeddings:
        raise EmptyInput("no embeddings given")
    rows = [np.asarray(e, dtype=np.float64).reshape(-1) for e in embeddings]
    dim = rows[0].size
    for i, row in enumerate(rows):
        if row.size != dim:
            raise DimensionMismatch(f"embedding {i} has dimension {row.size}, expected {dim}")
    return np.stack(rows)


def cosine(a, b) -> float:
    """Cosine similarity; tolerant of non-normalized inputs."""
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.size != bv.size:
        raise DimensionMismatch(f"cosine of dim {av.size} against dim {bv.size}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise EmptyInput("cosine of a zero vector is undefined")
    return float(np.dot(av, bv) / (na * nb))
