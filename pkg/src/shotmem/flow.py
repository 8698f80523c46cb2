"""Rectified-flow numerics for backend contract checks.

The generation backend is a black box; these utilities pin down the
interpolation and sampling conventions it is expected to follow, and power a
toy velocity-field sampler in tests. Under ``z_t = (1 - t) * z0 + t * eps``
the velocity target is ``z0 - eps``, so Euler integration from t=1 down to
t=0 adds the predicted velocity each step and recovers z0 exactly for a
constant field.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteVelocity, ShapeMismatch, TOutOfRange


def _pair(z0, eps) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(z0, dtype=np.float64)
    b = np.asarray(eps, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"latent shape {a.shape} vs noise shape {b.shape}")
    return a, b


def interpolate(z0, eps, t: float) -> np.ndarray:
    """Linear noising path: ``(1 - t) * z0 + t * eps`` for t in [0, 1]."""
    a, b = _pair(z0, eps)
    if not 0.0 <= t <= 1.0:
        raise TOutOfRange(f"t must lie in [0, 1], got {t}")
    return (1.0 - t) * a + t * b


def velocity_target(z0, eps) -> np.ndarray:
    """Training target for the velocity field: ``z0 - eps``."""
    a, b = _pair(z0, eps)
    return a - b


def euler_sample(velocity_fn, z1, steps: int) -> np.ndarray:
    """Explicit Euler integration from t=1 to t=0 with uniform steps.

    ``velocity_fn(z, t)`` must follow the ``z0 - eps`` convention; each step
    applies ``z <- z + (1 / steps) * velocity_fn(z, t)``.
    """
    if steps < 1:
        raise TOutOfRange(f"steps must be >= 1, got {steps}")
    z = np.asarray(z1, dtype=np.float64).copy()
    dt = 1.0 / steps
    for k in range(steps):
        t = 1.0 - k * dt
        v = np.asarray(velocity_fn(z, t), dtype=np.float64)
        if v.shape != z.shape:
            raise ShapeMismatch(f"velocity shape {v.shape} vs state shape {z.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteVelocity(f"velocity field produced non-finite values at t={t}")
        z = z + dt * v
    return z
