"""HTTP sidecar serving embeddings and aesthetic scores to the engine."""

from .app import PROTOCOL_VERSION, create_app
from .models import MODEL_FAMILIES, ModelLoadFailure, ModelSet, build_models

__version__ = "0.1.0"

__all__ = [
    "MODEL_FAMILIES",
    "ModelLoadFailure",
    "ModelSet",
    "PROTOCOL_VERSION",
    "build_models",
    "create_app",
    "__version__",
]
