"""Story script parsing, validation, and flattening.

A story script is a UTF-8 JSON document with a ``story_name``, a
``story_overview``, and an ordered list of scenes. Each scene carries
``scene_num``, a ``video_prompts`` array, and a same-length ``cut`` array of
booleans marking which shots start with a hard scene cut. Unknown fields
(e.g. ``first_frame_prompts``) are preserved verbatim but never interpreted.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

from .errors import CutFirstShotFalse, MalformedDocument, SchemaViolation

# Typical script size for the benchmark corpus; anything else is legal but
# worth flagging.
EXPECTED_SHOT_RANGE = (8, 12)

_SCENE_KNOWN_KEYS = {"scene_num", "video_prompts", "cut"}
_SCRIPT_KNOWN_KEYS = {"story_name", "story_overview", "scenes"}


class ScriptSizeWarning(UserWarning):
    """Total shot count falls outside the usual benchmark range."""


@dataclass(frozen=True)
class Scene:
    scene_num: int
    video_prompts: tuple[str, ...]
    cut: tuple[bool, ...]
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class StoryScript:
    story_name: str
    story_overview: str
    scenes: tuple[Scene, ...]
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def total_shots(self) -> int:
        return sum(len(s.video_prompts) for s in self.scenes)


@dataclass(frozen=True)
class ShotSpec:
    """One shot of the flattened plan.

    ``is_cut`` False means the shot continues from the previous shot's last
    frame instead of opening on a hard transition.
    """

    global_index: int
    prompt: str
    is_cut: bool
    scene_num: int


def _coerce_cut(value, where: str) -> bool:
    if isinstance(value, bool):
        return value
    # The source corpus sometimes spells cut flags as "True"/"False" strings.
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise SchemaViolation(f"{where}: cut entries must be booleans, got {value!r}")


def _require_str(obj: dict, key: str, where: str) -> str:
    if key not in obj:
        raise SchemaViolation(f"{where}: missing required field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaViolation(f"{where}: field {key!r} must be a string")
    return value


def _parse_scene(obj, index: int) -> Scene:
    where = f"scenes[{index}]"
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{where}: scene must be an object")
    for key in ("scene_num", "video_prompts", "cut"):
        if key not in obj:
            raise SchemaViolation(f"{where}: missing required field {key!r}")
    scene_num = obj["scene_num"]
    if isinstance(scene_num, bool) or not isinstance(scene_num, int) or scene_num < 1:
        raise SchemaViolation(f"{where}: scene_num must be a positive integer")
    prompts = obj["video_prompts"]
    if not isinstance(prompts, list) or not prompts:
        raise SchemaViolation(f"{where}: video_prompts must be a nonempty array")
    if not all(isinstance(p, str) for p in prompts):
        raise SchemaViolation(f"{where}: video_prompts entries must be strings")
    cut = obj["cut"]
    if not isinstance(cut, list):
        raise SchemaViolation(f"{where}: cut must be an array")
    if len(cut) != len(prompts):
        raise SchemaViolation(
            f"{where}: cut has {len(cut)} entries for {len(prompts)} prompts"
        )
    cut_flags = tuple(_coerce_cut(c, where) for c in cut)
    extra = {k: obj[k] for k in obj if k not in _SCENE_KNOWN_KEYS}
    return Scene(
        scene_num=scene_num,
        video_prompts=tuple(prompts),
        cut=cut_flags,
        extra=extra,
    )


def parse_script(raw: str) -> StoryScript:
    """Parse and validate a story script document.

    Raises MalformedDocument on syntax errors, SchemaViolation on structural
    problems, and CutFirstShotFalse when the story's first shot is not a cut.
    """
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"invalid script document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("top-level document must be an object")

    story_name = _require_str(doc, "story_name", "document")
    story_overview = _require_str(doc, "story_overview", "document")
    scenes_raw = doc.get("scenes")
    if not isinstance(scenes_raw, list) or not scenes_raw:
        raise SchemaViolation("document: scenes must be a nonempty array")

    scenes = tuple(_parse_scene(s, i) for i, s in enumerate(scenes_raw))
    nums = [s.scene_num for s in scenes]
    if any(b <= a for a, b in zip(nums, nums[1:])):
        raise SchemaViolation(f"scene_num values must be strictly increasing: {nums}")

    if not scenes[0].cut[0]:
        raise CutFirstShotFalse("the first shot of the story must have cut == true")

    extra = {k: doc[k] for k in doc if k not in _SCRIPT_KNOWN_KEYS}
    script = StoryScript(
        story_name=story_name,
        story_overview=story_overview,
        scenes=scenes,
        extra=extra,
    )

    lo, hi = EXPECTED_SHOT_RANGE
    if not lo <= script.total_shots <= hi:
        warnings.warn(
            f"script has {script.total_shots} shots (usual range {lo}-{hi})",
            ScriptSizeWarning,
            stacklevel=2,
        )
    return script


def script_to_dict(script: StoryScript) -> dict:
    """Rebuild the document structure, unknown fields included."""
    doc = {
        "story_name": script.story_name,
        "story_overview": script.story_overview,
        "scenes": [
            {
                "scene_num": s.scene_num,
                "video_prompts": list(s.video_prompts),
                "cut": list(s.cut),
                **s.extra,
            }
            for s in script.scenes
        ],
    }
    doc.update(script.extra)
    return doc


def serialize_script(script: StoryScript) -> str:
    return json.dumps(script_to_dict(script), indent=2, ensure_ascii=False)


def flatten_shots(script: StoryScript) -> list[ShotSpec]:
    """Concatenate all scenes' prompts into a 0-indexed shot plan."""
    shots: list[ShotSpec] = []
    for scene in script.scenes:
        for prompt, is_cut in zip(scene.video_prompts, scene.cut):
            shots.append(
                ShotSpec(
                    global_index=len(shots),
                    prompt=prompt,
                    is_cut=is_cut,
                    scene_num=scene.scene_num,
                )
            )
    return shots
