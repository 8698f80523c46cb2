from __future__ import annotations

import numpy as np
import pytest

from shotmem.embedding import NORM_TOLERANCE, norm_drift
from shotmem.errors import ProviderFailure
from shotmem.imagery import encode_png
from shotmem.providers import (
    MockProviders,
    check_provider_conformance,
    make_providers,
    tiny_text_features,
)


def solid(r, g, b, size=24):
    return encode_png(np.full((size, size, 3), [r, g, b], dtype=np.float64))


def gradient(seed, size=24):
    rng = np.random.default_rng(seed)
    ramp = np.linspace(0, 1, size)
    img = np.outer(ramp, rng.uniform(0.2, 1.0, size))
    return encode_png(np.stack([img, img * rng.uniform(0.3, 1.0), 1 - img], axis=2))


@pytest.fixture
def sample_images():
    return [solid(0.9, 0.1, 0.1), solid(0.1, 0.1, 0.9), gradient(0), gradient(1)]


def test_mock_passes_conformance(providers, sample_images):
    passed = check_provider_conformance(
        providers, sample_images, ["a sunny street corner", "night skyline"]
    )
    assert "health_declares_models" in passed
    assert "empty_text_rejected" in passed


def test_image_embedding_reflects_similarity(providers):
    red_a = providers.embed_image(solid(0.9, 0.1, 0.1))
    red_b = providers.embed_image(solid(0.85, 0.15, 0.1))
    blue = providers.embed_image(solid(0.1, 0.1, 0.9))
    assert float(np.dot(red_a, red_b)) > float(np.dot(red_a, blue))


def test_text_embedding_reflects_similarity(providers):
    a = providers.embed_text("a musician plays guitar on the street")
    b = providers.embed_text("the street musician plays his guitar")
    c = providers.embed_text("zebras graze on the open savanna")
    assert float(np.dot(a, b)) > float(np.dot(a, c))


def test_video_embedding_is_mean_like(providers, sample_images):
    single = providers.embed_video([sample_images[0]])
    direct = providers.embed_image(sample_images[0])
    assert np.allclose(single, direct)
    mixed = providers.embed_video(sample_images)
    assert norm_drift(mixed) <= NORM_TOLERANCE


def test_empty_video_rejected(providers):
    with pytest.raises(ProviderFailure):
        providers.embed_video([])


def test_garbage_image_rejected(providers):
    with pytest.raises(ProviderFailure):
        providers.embed_image(b"not an image")


def test_text_features_deterministic_dim():
    v = tiny_text_features("hello world")
    assert v.shape == tiny_text_features("another phrase").shape
    assert np.array_equal(v, tiny_text_features("hello world"))


def test_score_range(providers, sample_images):
    for img in sample_images:
        score = providers.score_aesthetic(img)
        assert 0.0 <= score <= 10.0


def test_make_providers_selector(providers):
    assert isinstance(make_providers("mock"), MockProviders)
    http = make_providers("http://localhost:9")
    assert http.provider_id == "http:http://localhost:9"
    with pytest.raises(ProviderFailure):
        make_providers("carrier-pigeon")


def test_http_provider_unreachable_raises():
    provider = make_providers("http://127.0.0.1:1")
    with pytest.raises(ProviderFailure):
        provider.embed_text("anything")
