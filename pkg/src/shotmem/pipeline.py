"""Autoregressive shot-by-shot story generation.

Each shot is generated from its prompt plus the current memory bank; the
shot's keyframes then update the bank before the next shot runs. Every run
writes a resumable manifest directory:

    out/
      script.json            verbatim copy of the input script
      config.json            effective configuration + fingerprint
      story.json             run index (completed shots, completeness flag)
      refs/                  reference images used to seed the bank, if any
      shots/NNN/             per-shot frames (PNG) + result.json
      banks/                 bank manifest before the run and after each shot
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .backends import build_backend_request
from .bank import MemoryBank, init_empty, init_from_references
from .conditioning import assemble_plan
from .config import RunConfig, config_fingerprint
from .errors import (
    BackendFailure,
    CapacityExceeded,
    CorruptManifest,
    FingerprintMismatch,
    IncompleteManifest,
)
from .imagery import content_ref
from .keyframes import extract_shot_memory
from .script import StoryScript, flatten_shots, serialize_script

STORY_FORMAT_VERSION = 1


@dataclass
class ShotResult:
    shot_index: int
    frames: list[dict]  # {"file": relpath, "ref": content ref}
    frame_embeddings: list[np.ndarray]
    video_embedding: np.ndarray
    keyframes_selected: list[int]
    seed_used: int
    last_frame: bytes

    def last_frame_bytes(self) -> bytes:
        return self.last_frame

    def frame_refs(self) -> list[str]:
        return [f["ref"] for f in self.frames]


@dataclass
class StoryResult:
    shots: list[ShotResult]
    final_bank: MemoryBank
    bank_history: list[MemoryBank]  # entry i = bank after shot i
    config_fingerprint: str
    out_dir: Path
    complete: bool = True

    def digest(self) -> str:
        """Canonical content hash for bit-identity comparisons across runs."""
        payload = {
            "fingerprint": self.config_fingerprint,
            "shots": [
                {
                    "index": s.shot_index,
                    "seed": s.seed_used,
                    "frames": s.frame_refs(),
                    "keyframes": s.keyframes_selected,
                    "video_embedding": [repr(float(x)) for x in s.video_embedding],
                }
                for s in self.shots
            ],
            "banks": [b.to_manifest() for b in self.bank_history],
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunPaths:
    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.script = self.root / "script.json"
        self.config = self.root / "config.json"
        self.story = self.root / "story.json"
        self.shots = self.root / "shots"
        self.banks = self.root / "banks"
        self.refs = self.root / "refs"

    def shot_dir(self, index: int) -> Path:
        return self.shots / f"{index:03d}"

    def bank_after(self, index: int) -> Path:
        return self.banks / f"after_shot_{index:03d}.json"


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"cannot read {path}: {exc}") from exc


class _FrameStore:
    """Resolves content refs to frame bytes within one run directory."""

    def __init__(self, root: Path):
        self.root = root
        self._paths: dict[str, Path] = {}

    def register(self, ref: str, path: Path) -> None:
        self._paths[ref] = path

    def resolve(self, ref: str) -> bytes:
        path = self._paths.get(ref)
        if path is None:
            raise CorruptManifest(f"unknown frame ref {ref}")
        data = path.read_bytes()
        if content_ref(data) != ref:
            raise CorruptManifest(f"frame file {path} does not match ref {ref}")
        return data


def _check_capabilities(backend, plan, shot_index: int) -> None:
    if plan.f_m > 0 and not getattr(backend, "supports_memory", False):
        raise BackendFailure("backend does not support memory conditioning", shot_index)
    if plan.first_frame is not None and not getattr(backend, "supports_first_frame", False):
        raise BackendFailure("backend does not support first-frame conditioning", shot_index)


def _shot_result_to_json(result: ShotResult, prompt: str, is_cut: bool, request_summary: dict) -> dict:
    return {
        "shot_index": result.shot_index,
        "prompt": prompt,
        "is_cut": is_cut,
        "seed_used": result.seed_used,
        "frames": result.frames,
        "frame_embeddings": [[float(x) for x in e] for e in result.frame_embeddings],
        "video_embedding": [float(x) for x in result.video_embedding],
        "keyframes_selected": result.keyframes_selected,
        "request_summary": request_summary,
    }


def _shot_result_from_json(doc: dict, shot_dir: Path, store: _FrameStore) -> ShotResult:
    frames = doc["frames"]
    for entry in frames:
        store.register(entry["ref"], shot_dir / entry["file"])
    last = store.resolve(frames[-1]["ref"])
    return ShotResult(
        shot_index=int(doc["shot_index"]),
        frames=frames,
        frame_embeddings=[np.asarray(e, dtype=np.float64) for e in doc["frame_embeddings"]],
        video_embedding=np.asarray(doc["video_embedding"], dtype=np.float64),
        keyframes_selected=[int(i) for i in doc["keyframes_selected"]],
        seed_used=int(doc["seed_used"]),
        last_frame=last,
    )


def _init_bank(config: RunConfig, providers, paths: RunPaths, store: _FrameStore) -> MemoryBank:
    if not config.reference_images:
        return init_empty(
            sink_size=config.sink_size,
            capacity=config.capacity,
            dup_threshold=config.dup_threshold,
        )
    ref_paths = [Path(p) for p in config.reference_images]
    if len(ref_paths) > config.capacity:
        raise CapacityExceeded(
            f"{len(ref_paths)} reference images exceed bank capacity {config.capacity}"
        )
    paths.refs.mkdir(parents=True, exist_ok=True)
    refs, embeddings, scores = [], [], []
    for i, src in enumerate(ref_paths):
        data = src.read_bytes()
        dest = paths.refs / f"ref_{i:03d}{src.suffix or '.png'}"
        dest.write_bytes(data)
        ref = content_ref(data)
        store.register(ref, dest)
        refs.append(ref)
        embeddings.append(providers.embed_image(data))
        scores.append(providers.score_aesthetic(data))
    return init_from_references(
        refs,
        embeddings,
        scores=scores,
        sink_size=config.sink_size,
        capacity=config.capacity,
        dup_threshold=config.dup_threshold,
    )


def _write_story_index(paths: RunPaths, fingerprint: str, n_shots: int, completed: list[int], complete: bool) -> None:
    _write_json(
        paths.story,
        {
            "format_version": STORY_FORMAT_VERSION,
            "config_fingerprint": fingerprint,
            "n_shots": n_shots,
            "completed": completed,
            "complete": complete,
        },
    )


def run_story(
    script: StoryScript,
    backend,
    providers,
    config: RunConfig,
    out_dir,
    review_hook=None,
    _resume_from: int = 0,
) -> StoryResult:
    """Generate every shot of a story, maintaining the memory bank throughout.

    ``review_hook(shot_index, candidates)``, when given, may drop keyframe
    candidates before the bank update (external curation; off by default).
    On backend failure the completed prefix stays on disk for `resume`.
    """
    script_text = serialize_script(script)
    fingerprint = config_fingerprint(
        config,
        script_text,
        getattr(backend, "backend_id", backend.__class__.__name__),
        getattr(providers, "provider_id", providers.__class__.__name__),
    )
    shots = flatten_shots(script)
    paths = RunPaths(out_dir)
    store = _FrameStore(paths.root)

    results: list[ShotResult] = []
    bank_history: list[MemoryBank] = []
    completed: list[int] = []
    prev: ShotResult | None = None

    if _resume_from == 0:
        paths.root.mkdir(parents=True, exist_ok=True)
        paths.script.write_text(script_text, encoding="utf-8")
        _write_json(paths.config, {"fingerprint": fingerprint, "config": config.to_dict()})
        bank = _init_bank(config, providers, paths, store)
        _write_json(paths.banks / "initial.json", bank.to_manifest())
        _write_story_index(paths, fingerprint, len(shots), [], False)
    else:
        bank, results, bank_history, prev, completed = _load_completed(
            paths, store, _resume_from
        )

    for spec in shots[_resume_from:]:
        i = spec.global_index
        snapshot = bank.snapshot_for_conditioning() if config.memory_enabled else []
        shape = config.shape_for_shot(i)
        plan = assemble_plan(snapshot, spec, prev, shape, config.rope_offset)
        _check_capabilities(backend, plan, i)
        seed_used = config.seed + i
        request = build_backend_request(plan, spec.prompt, seed_used, store.resolve)
        try:
            frame_bytes = backend.generate(request)
        except BackendFailure as exc:
            _write_story_index(paths, fingerprint, len(shots), completed, False)
            if exc.shot_index is None:
                exc.shot_index = i
            raise
        if len(frame_bytes) != shape.raw_frames:
            _write_story_index(paths, fingerprint, len(shots), completed, False)
            raise BackendFailure(
                f"backend returned {len(frame_bytes)} frames, expected {shape.raw_frames}", i
            )

        shot_dir = paths.shot_dir(i)
        shot_dir.mkdir(parents=True, exist_ok=True)
        frame_records = []
        for j, data in enumerate(frame_bytes):
            name = f"frame_{j:04d}.png"
            (shot_dir / name).write_bytes(data)
            ref = content_ref(data)
            store.register(ref, shot_dir / name)
            frame_records.append({"file": name, "ref": ref})

        embeddings = [providers.embed_image(b, context=spec.prompt) for b in frame_bytes]
        video_embedding = providers.embed_video(frame_bytes, context=spec.prompt)
        candidates = extract_shot_memory(
            frame_bytes, providers, config.selection, prompt=spec.prompt, embeddings=embeddings
        )
        if review_hook is not None:
            candidates = list(review_hook(i, candidates))
        keyframes_selected = [c.frame_index for c in candidates]
        if candidates:
            bank = bank.update(
                candidates,
                source_shot=i,
                frame_refs=[frame_records[c.frame_index]["ref"] for c in candidates],
            )

        result = ShotResult(
            shot_index=i,
            frames=frame_records,
            frame_embeddings=embeddings,
            video_embedding=video_embedding,
            keyframes_selected=keyframes_selected,
            seed_used=seed_used,
            last_frame=frame_bytes[-1],
        )
        _write_json(
            shot_dir / "result.json",
            _shot_result_to_json(result, spec.prompt, spec.is_cut, request.summary()),
        )
        _write_json(paths.bank_after(i), bank.to_manifest())

        results.append(result)
        bank_history.append(bank)
        completed.append(i)
        _write_story_index(paths, fingerprint, len(shots), completed, False)
        prev = result

    _write_story_index(paths, fingerprint, len(shots), completed, True)
    return StoryResult(
        shots=results,
        final_bank=bank,
        bank_history=bank_history,
        config_fingerprint=fingerprint,
        out_dir=paths.root,
    )


def run_story_with_references(
    script: StoryScript, ref_images, backend, providers, config: RunConfig, out_dir, **kwargs
) -> StoryResult:
    """Like run_story but seeds the bank from reference images (paths)."""
    refs = tuple(str(p) for p in ref_images)
    if not refs:
        return run_story(script, backend, providers, config, out_dir, **kwargs)
    return run_story(
        script, backend, providers, replace(config, reference_images=refs), out_dir, **kwargs
    )


def _load_completed(paths: RunPaths, store: _FrameStore, upto: int):
    """Rebuild in-memory state for shots 0..upto-1 from the manifest."""
    if paths.refs.exists():
        # reference images are the only frames not owned by a shot directory
        for f in sorted(paths.refs.iterdir()):
            store.register(content_ref(f.read_bytes()), f)
    results: list[ShotResult] = []
    bank_history: list[MemoryBank] = []
    for i in range(upto):
        shot_dir = paths.shot_dir(i)
        try:
            doc = _read_json(shot_dir / "result.json")
        except FileNotFoundError as exc:
            raise CorruptManifest(f"missing result for completed shot {i}") from exc
        results.append(_shot_result_from_json(doc, shot_dir, store))
        try:
            bank_history.append(MemoryBank.from_manifest(_read_json(paths.bank_after(i))))
        except FileNotFoundError as exc:
            raise CorruptManifest(f"missing bank manifest after shot {i}") from exc
    if upto > 0:
        bank = bank_history[-1]
        prev = results[-1]
    else:
        bank = MemoryBank.from_manifest(_read_json(paths.banks / "initial.json"))
        prev = None
    return bank, results, bank_history, prev, list(range(upto))


def resume(out_dir, script: StoryScript, backend, providers, config: RunConfig, review_hook=None) -> StoryResult:
    """Continue an interrupted run from its first missing shot.

    The persisted fingerprint must match the current configuration; a
    complete run is returned as-is.
    """
    paths = RunPaths(out_dir)
    try:
        index = _read_json(paths.story)
    except FileNotFoundError as exc:
        raise CorruptManifest(f"no run manifest at {paths.story}") from exc
    script_text = serialize_script(script)
    fingerprint = config_fingerprint(
        config,
        script_text,
        getattr(backend, "backend_id", backend.__class__.__name__),
        getattr(providers, "provider_id", providers.__class__.__name__),
    )
    if index.get("config_fingerprint") != fingerprint:
        raise FingerprintMismatch(
            "manifest was produced under a different configuration; refusing to resume"
        )
    completed = index.get("completed", [])
    if completed != list(range(len(completed))):
        raise CorruptManifest(f"completed shots are not a prefix: {completed}")
    n_shots = int(index["n_shots"])
    if len(flatten_shots(script)) != n_shots:
        raise CorruptManifest("script shot count differs from the manifest")
    if index.get("complete") and len(completed) == n_shots:
        return load_story(out_dir)
    return run_story(
        script,
        backend,
        providers,
        config,
        out_dir,
        review_hook=review_hook,
        _resume_from=len(completed),
    )


def load_story(out_dir) -> StoryResult:
    """Load a completed run manifest into a StoryResult."""
    paths = RunPaths(out_dir)
    try:
        index = _read_json(paths.story)
    except FileNotFoundError as exc:
        raise CorruptManifest(f"no run manifest at {paths.story}") from exc
    n_shots = int(index["n_shots"])
    completed = index.get("completed", [])
    if not index.get("complete") or len(completed) != n_shots:
        raise IncompleteManifest(
            f"run has {len(completed)} of {n_shots} shots; generate or resume first"
        )
    store = _FrameStore(paths.root)
    bank, results, bank_history, _prev, _ = _load_completed(paths, store, n_shots)
    return StoryResult(
        shots=results,
        final_bank=bank,
        bank_history=bank_history,
        config_fingerprint=index["config_fingerprint"],
        out_dir=paths.root,
    )


def load_shot_frames(story: StoryResult, shot_index: int) -> list[bytes]:
    """Read one shot's frame bytes back from the run directory."""
    shot = story.shots[shot_index]
    shot_dir = RunPaths(story.out_dir).shot_dir(shot_index)
    return [(shot_dir / f["file"]).read_bytes() for f in shot.frames]
