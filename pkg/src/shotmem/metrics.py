"""Story-level quality metrics.

Four families: aesthetic quality (mean of per-shot mean frame scores),
prompt following (global: whole video vs story overview; single-shot: each
shot vs its prompt), and cross-shot consistency (mean cosine similarity of
shot-level video embeddings over all unordered pairs, plus a top-k variant
restricted to the pairs whose prompts are most similar).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .embedding import cosine, normalize
from .errors import EmptyInput, LengthMismatch, TooFewShots
from .pipeline import StoryResult, load_shot_frames
from .script import StoryScript, flatten_shots

DEFAULT_TOPK = 10
DEFAULT_VIDEO_SAMPLE_BUDGET = 8
DEFAULT_AESTHETIC_SAMPLES_PER_SHOT = 4


@dataclass(frozen=True)
class PairRecord:
    shot_a: int
    shot_b: int
    video_similarity: float
    prompt_similarity: float
    in_topk: bool


@dataclass(frozen=True)
class MetricsReport:
    aesthetic_quality: float
    prompt_following_global: float
    prompt_following_single: float
    consistency_overall: float
    consistency_top10: float
    pair_table: tuple[PairRecord, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "aesthetic_quality": self.aesthetic_quality,
            "prompt_following": {
                "global": self.prompt_following_global,
                "single_shot": self.prompt_following_single,
            },
            "cross_shot_consistency": {
                "overall": self.consistency_overall,
                "top10": self.consistency_top10,
            },
            "pair_table": [
                {
                    "shot_a": p.shot_a,
                    "shot_b": p.shot_b,
                    "video_similarity": p.video_similarity,
                    "prompt_similarity": p.prompt_similarity,
                    "in_topk": p.in_topk,
                }
                for p in self.pair_table
            ],
        }


def _norm_list(embeddings) -> list[np.ndarray]:
    return [normalize(e) for e in embeddings]


def consistency_overall(video_embs) -> float:
    """Mean cosine similarity across all unordered shot pairs."""
    vecs = _norm_list(video_embs)
    if len(vecs) < 2:
        raise TooFewShots(f"consistency needs >= 2 shots, got {len(vecs)}")
    sims = [float(np.dot(vecs[i], vecs[j])) for i, j in combinations(range(len(vecs)), 2)]
    return float(np.mean(sims))


def rank_pairs_by_prompt(prompt_embs) -> list[tuple[int, int]]:
    """All unordered pairs, most prompt-similar first; ties break on pair index."""
    vecs = _norm_list(prompt_embs)
    pairs = list(combinations(range(len(vecs)), 2))
    sims = {p: float(np.dot(vecs[p[0]], vecs[p[1]])) for p in pairs}
    return sorted(pairs, key=lambda p: (-sims[p], p))


def consistency_topk(video_embs, prompt_embs, k: int = DEFAULT_TOPK) -> float:
    """Mean video similarity over the k pairs with the most similar prompts."""
    video = _norm_list(video_embs)
    prompts = _norm_list(prompt_embs)
    if len(video) != len(prompts):
        raise LengthMismatch(f"{len(video)} video embeddings vs {len(prompts)} prompt embeddings")
    if len(video) < 2:
        raise TooFewShots(f"consistency needs >= 2 shots, got {len(video)}")
    ranked = rank_pairs_by_prompt(prompts)
    top = ranked[: min(k, len(ranked))]
    return float(np.mean([float(np.dot(video[i], video[j])) for i, j in top]))


def prompt_following(video_embs, prompt_embs, story_overview_emb, full_video_emb) -> tuple[float, float]:
    """(global, single-shot) prompt-following scores."""
    video = list(video_embs)
    prompts = list(prompt_embs)
    if len(video) != len(prompts):
        raise LengthMismatch(f"{len(video)} video embeddings vs {len(prompts)} prompt embeddings")
    if not video:
        raise EmptyInput("no shots to score")
    global_score = cosine(full_video_emb, story_overview_emb)
    single = float(np.mean([cosine(v, p) for v, p in zip(video, prompts)]))
    return global_score, single


def aesthetic_quality(frame_scores_per_shot) -> float:
    """Mean over shots of the mean frame score within each shot."""
    shots = [list(scores) for scores in frame_scores_per_shot]
    if not shots or any(not s for s in shots):
        raise EmptyInput("every shot needs at least one frame score")
    return float(np.mean([float(np.mean(s)) for s in shots]))


def sample_uniform(n: int, budget: int) -> list[int]:
    """Deterministic evenly spread sample of ``budget`` indices out of ``n``."""
    if n <= 0:
        raise EmptyInput("cannot sample from an empty sequence")
    if n <= budget:
        return list(range(n))
    if budget == 1:
        return [n // 2]
    picks = sorted({round(i * (n - 1) / (budget - 1)) for i in range(budget)})
    return [int(p) for p in picks]


def evaluate_story(
    story: StoryResult,
    script: StoryScript,
    providers,
    topk: int = DEFAULT_TOPK,
    video_sample_budget: int = DEFAULT_VIDEO_SAMPLE_BUDGET,
    aesthetic_samples_per_shot: int = DEFAULT_AESTHETIC_SAMPLES_PER_SHOT,
) -> MetricsReport:
    """Score a completed run with the configured providers.

    Embeddings are recomputed from the persisted frames so a run can be
    re-scored under different providers than it was generated with.
    """
    shots = flatten_shots(script)
    if len(shots) != len(story.shots):
        raise LengthMismatch(
            f"script has {len(shots)} shots but the run has {len(story.shots)}"
        )

    shot_frames = [load_shot_frames(story, i) for i in range(len(story.shots))]
    video_embs = [
        providers.embed_video(frames, context=spec.prompt)
        for frames, spec in zip(shot_frames, shots)
    ]
    prompt_embs = [providers.embed_text(spec.prompt) for spec in shots]
    overview_emb = providers.embed_text(script.story_overview)

    # One fixed-budget sample spread across the concatenated timeline stands
    # in for the whole multi-shot video.
    lengths = [len(f) for f in shot_frames]
    offsets = np.cumsum([0] + lengths)
    flat_picks = sample_uniform(int(offsets[-1]), video_sample_budget)
    sampled = []
    for pick in flat_picks:
        shot_i = int(np.searchsorted(offsets, pick, side="right") - 1)
        sampled.append(shot_frames[shot_i][pick - int(offsets[shot_i])])
    full_video_emb = providers.embed_video(sampled, context=script.story_overview)

    frame_scores = [
        [
            float(providers.score_aesthetic(frames[idx], context=spec.prompt))
            for idx in sample_uniform(len(frames), aesthetic_samples_per_shot)
        ]
        for frames, spec in zip(shot_frames, shots)
    ]

    overall = consistency_overall(video_embs)
    top = consistency_topk(video_embs, prompt_embs, k=topk)
    global_score, single_score = prompt_following(
        video_embs, prompt_embs, overview_emb, full_video_emb
    )

    video_n = _norm_list(video_embs)
    prompt_n = _norm_list(prompt_embs)
    ranked = rank_pairs_by_prompt(prompt_n)
    top_set = set(ranked[: min(topk, len(ranked))])
    pair_table = tuple(
        PairRecord(
            shot_a=i,
            shot_b=j,
            video_similarity=float(np.dot(video_n[i], video_n[j])),
            prompt_similarity=float(np.dot(prompt_n[i], prompt_n[j])),
            in_topk=(i, j) in top_set,
        )
        for i, j in combinations(range(len(video_n)), 2)
    )
    return MetricsReport(
        aesthetic_quality=aesthetic_quality(frame_scores),
        prompt_following_global=global_score,
        prompt_following_single=single_score,
        consistency_overall=overall,
        consistency_top10=top,
        pair_table=pair_table,
    )
