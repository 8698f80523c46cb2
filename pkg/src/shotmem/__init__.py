"""Memory-conditioned multi-shot story video engine.

Generates narrative videos shot by shot, conditioning each shot on a bounded
bank of keyframes selected from earlier shots, and scores the result with a
cross-shot consistency metric suite. Generation and embedding models are
pluggable backends; deterministic in-process mocks make the whole pipeline
runnable at desk scale.
"""

from .backends import BackendRequest, MockBackend, MockBackendConfig, RemoteBackend, make_backend
from .bank import MemoryBank, MemoryFrame, init_empty, init_from_references
from .conditioning import (
    ConditioningPlan,
    LatentShape,
    RopeConfig,
    assemble_plan,
    build_mask,
    rope_rotate,
    temporal_indices,
)
from .config import RunConfig, config_fingerprint, load_config_file
from .flow import euler_sample, interpolate, velocity_target
from .keyframes import (
    KeyframeCandidate,
    SelectionConfig,
    aesthetic_filter,
    extract_shot_memory,
    select_semantic_keyframes,
)
from .metrics import (
    MetricsReport,
    aesthetic_quality,
    consistency_overall,
    consistency_topk,
    evaluate_story,
    prompt_following,
)
from .pipeline import (
    ShotResult,
    StoryResult,
    load_story,
    resume,
    run_story,
    run_story_with_references,
)
from .providers import HTTPProviders, MockProviders, check_provider_conformance, make_providers
from .script import Scene, ShotSpec, StoryScript, flatten_shots, parse_script, serialize_script

__version__ = "0.1.0"

__all__ = [
    "BackendRequest",
    "ConditioningPlan",
    "HTTPProviders",
    "KeyframeCandidate",
    "LatentShape",
    "MemoryBank",
    "MemoryFrame",
    "MetricsReport",
    "MockBackend",
    "MockBackendConfig",
    "MockProviders",
    "RemoteBackend",
    "RopeConfig",
    "RunConfig",
    "Scene",
    "SelectionConfig",
    "ShotResult",
    "ShotSpec",
    "StoryResult",
    "StoryScript",
    "aesthetic_filter",
    "aesthetic_quality",
    "assemble_plan",
    "build_mask",
    "check_provider_conformance",
    "config_fingerprint",
    "consistency_overall",
    "consistency_topk",
    "euler_sample",
    "evaluate_story",
    "extract_shot_memory",
    "flatten_shots",
    "init_empty",
    "init_from_references",
    "interpolate",
    "load_config_file",
    "load_story",
    "make_backend",
    "make_providers",
    "parse_script",
    "prompt_following",
    "resume",
    "rope_rotate",
    "run_story",
    "run_story_with_references",
    "select_semantic_keyframes",
    "serialize_script",
    "temporal_indices",
    "velocity_target",
    "__version__",
]
