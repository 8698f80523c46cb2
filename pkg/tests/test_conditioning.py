from __future__ import annotations

import numpy as np
import pytest

from shotmem.conditioning import (
    ConditioningPlan,
    LatentShape,
    RopeConfig,
    assemble_plan,
    build_mask,
    rope_rotate,
    temporal_indices,
)
from shotmem.errors import InvalidOffset, InvalidShape, MissingPredecessor, OddDimension
from shotmem.script import ShotSpec


class _PrevStub:
    def __init__(self, data: bytes):
        self._data = data

    def last_frame_bytes(self) -> bytes:
        return self._data


def shot(index=0, is_cut=True):
    return ShotSpec(global_index=index, prompt="p", is_cut=is_cut, scene_num=1)


def test_temporal_indices_examples():
    assert temporal_indices(3, 4, 5) == [-15, -10, -5, 0, 1, 2, 3]
    assert temporal_indices(0, 2, 5) == [0, 1]
    assert temporal_indices(1, 1, 1) == [-1, 0]


def test_temporal_indices_errors():
    with pytest.raises(InvalidShape):
        temporal_indices(3, 0, 5)
    with pytest.raises(InvalidShape):
        temporal_indices(-1, 4, 5)
    with pytest.raises(InvalidOffset):
        temporal_indices(3, 4, 0)


def test_temporal_indices_spacing_property():
    rng = np.random.default_rng(0)
    for _ in range(300):
        f_m = int(rng.integers(0, 11))
        f = int(rng.integers(1, 33))
        S = int(rng.integers(1, 9))
        idx = temporal_indices(f_m, f, S)
        assert len(idx) == f_m + f
        assert idx == sorted(idx)
        assert sum(1 for v in idx if v < 0) == f_m
        assert idx[f_m:] == list(range(f))
        memory = idx[:f_m]
        assert all(b - a == S for a, b in zip(memory, memory[1:]))
        if f_m:
            assert memory[0] == -f_m * S and memory[-1] == -S


def test_build_mask_example():
    shape = LatentShape(c=1, f=3, h=2, w=2, s=4)
    mask = build_mask(shape, 2)
    assert mask.shape == (4, 5, 2, 2)
    profile = mask.any(axis=(0, 2, 3)).astype(int).tolist()
    assert profile == [1, 1, 0, 0, 0]
    assert set(np.unique(mask)) <= {0, 1}


def test_build_mask_zero_memory():
    mask = build_mask(LatentShape(c=1, f=4, h=3, w=3, s=2), 0)
    assert mask.sum() == 0


def test_build_mask_popcount_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        shape = LatentShape(
            c=int(rng.integers(1, 5)),
            f=int(rng.integers(1, 9)),
            h=int(rng.integers(1, 7)),
            w=int(rng.integers(1, 7)),
            s=int(rng.integers(1, 5)),
        )
        f_m = int(rng.integers(0, 11))
        mask = build_mask(shape, f_m)
        assert int(mask.sum()) == shape.s * f_m * shape.h * shape.w
        profile = mask.reshape(mask.shape[0], mask.shape[1], -1)
        per_slice = profile.all(axis=(0, 2)).astype(int).tolist()
        assert per_slice == [1] * f_m + [0] * shape.f


def test_latent_shape_validation():
    with pytest.raises(InvalidShape):
        LatentShape(c=0, f=1, h=1, w=1, s=1)
    with pytest.raises(InvalidShape):
        LatentShape(c=1, f=1, h=1, w=1, s=-2)


def test_assemble_plan_cut_shot(small_shape):
    frames = [object(), object(), object()]
    plan = assemble_plan(frames, shot(index=4, is_cut=True), None, small_shape, S=5)
    assert plan.f_m == 3
    assert plan.first_frame is None
    assert plan.memory_order == frames
    assert plan.temporal_indices == [-15, -10, -5, 0, 1, 2, 3]
    assert plan.mask.shape == (4, 7, 4, 4)


def test_assemble_plan_continuation(small_shape):
    prev = _PrevStub(b"lastframe")
    plan = assemble_plan([], shot(index=1, is_cut=False), prev, small_shape, S=5)
    assert plan.first_frame == b"lastframe"


def test_assemble_plan_missing_predecessor(small_shape):
    with pytest.raises(MissingPredecessor):
        assemble_plan([], shot(index=1, is_cut=False), None, small_shape, S=5)


def test_assemble_plan_empty_bank_degenerates(small_shape):
    plan = assemble_plan([], shot(index=0, is_cut=True), None, small_shape, S=5)
    assert plan.f_m == 0
    assert plan.temporal_indices == [0, 1, 2, 3]
    assert plan.mask.sum() == 0
    assert plan.mask_profile() == [0, 0, 0, 0]


def test_mask_profile_matches_mask(small_shape):
    plan = assemble_plan([object()] * 2, shot(), None, small_shape, S=3)
    assert plan.mask_profile() == [1, 1, 0, 0, 0, 0]
    rebuilt = build_mask(small_shape, plan.f_m)
    assert np.array_equal(rebuilt, plan.mask)  # deterministic re-build


def test_rope_zero_position_identity():
    config = RopeConfig(head_dim=8)
    v = np.arange(8, dtype=np.float64)
    assert np.allclose(rope_rotate(v, 0, config), v, atol=0, rtol=0)


def test_rope_preserves_norm():
    rng = np.random.default_rng(9)
    config = RopeConfig(head_dim=16)
    for p in (-15, -1, 0, 7):
        v = rng.normal(size=16)
        out = rope_rotate(v, p, config)
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-9


def test_rope_relative_position_property():
    rng = np.random.default_rng(21)
    config = RopeConfig(head_dim=32)
    q = rng.normal(size=32)
    k = rng.normal(size=32)
    # <rope(q,-5), rope(k,-3)> == <rope(q,2), rope(k,4)>: only the gap matters
    lhs = float(np.dot(rope_rotate(q, -5, config), rope_rotate(k, -3, config)))
    rhs = float(np.dot(rope_rotate(q, 2, config), rope_rotate(k, 4, config)))
    assert abs(lhs - rhs) < 1e-6


def test_rope_shift_invariance_across_positions():
    rng = np.random.default_rng(33)
    config = RopeConfig(head_dim=24)
    for _ in range(20):
        q = rng.normal(size=24)
        k = rng.normal(size=24)
        d = int(rng.integers(-20, 21))
        baseline = float(np.dot(rope_rotate(q, 0, config), rope_rotate(k, d, config)))
        for p in range(-50, 51, 7):
            value = float(np.dot(rope_rotate(q, p, config), rope_rotate(k, p + d, config)))
            assert abs(value - baseline) < 1e-6


def test_rope_odd_dimension_rejected():
    with pytest.raises(OddDimension):
        RopeConfig(head_dim=7)
    with pytest.raises(InvalidShape):
        rope_rotate(np.zeros(6), 1, RopeConfig(head_dim=8))


def test_plan_serializes_per_slice_bits(small_shape):
    plan = ConditioningPlan(
        f_m=2,
        mask=build_mask(small_shape, 2),
        temporal_indices=temporal_indices(2, small_shape.f, 5),
        memory_order=[],
        shape=small_shape,
    )
    assert plan.mask_profile() == [1, 1, 0, 0, 0, 0]
