"""Black-box protocol conformance: the in-process mock provider and the HTTP
sidecar must pass the identical check suite."""

from __future__ import annotations

import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from shotmem.providers import HTTPProviders, MockProviders, check_provider_conformance
from shotmem_sidecar.app import create_app
from shotmem_sidecar.models import TINY_DIM, ModelLoadFailure, build_models


def png(color, size=24) -> bytes:
    import io

    from PIL import Image

    arr = (np.full((size, size, 3), color) * 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def sample_images():
    rng = np.random.default_rng(0)
    solids = [png([0.9, 0.2, 0.1]), png([0.1, 0.2, 0.9])]
    noisy = []
    for _ in range(2):
        import io

        from PIL import Image

        arr = (rng.uniform(0, 1, size=(24, 24, 3)) * 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="PNG")
        noisy.append(buf.getvalue())
    return solids + noisy


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(family="tiny"))


@pytest.fixture(scope="module")
def sidecar_provider(client):
    return HTTPProviders("http://testserver", session=client)


TEXTS = ["a harbor at dawn", "lanterns over the water"]


def test_mock_provider_passes_protocol(sample_images):
    passed = check_provider_conformance(MockProviders(), sample_images, TEXTS)
    assert "empty_text_rejected" in passed


def test_sidecar_passes_same_protocol(sidecar_provider, sample_images):
    passed = check_provider_conformance(sidecar_provider, sample_images, TEXTS)
    assert "empty_text_rejected" in passed
    assert "embed_image_dim_constant" in passed


def test_health_declares_tiny_dims(client):
    health = client.get("/health").json()
    assert health["status"] == "ok"
    assert health["protocol_version"] == 1
    for kind in ("embed_image", "embed_video", "embed_text"):
        assert health["models"][kind]["dim"] == TINY_DIM


def test_repeated_requests_byte_identical(client, sample_images):
    body = {"image_b64": base64.b64encode(sample_images[0]).decode("ascii")}
    first = client.post("/embed_image", json=body)
    second = client.post("/embed_image", json=body)
    assert first.content == second.content


def test_single_frame_video_matches_image(sidecar_provider, sample_images):
    image_vec = sidecar_provider.embed_image(sample_images[0])
    video_vec = sidecar_provider.embed_video([sample_images[0]])
    assert np.allclose(image_vec, video_vec)


def test_video_accepts_ordered_multipart(client, sample_images):
    files = [("frames", (f"f{i}.png", data, "image/png")) for i, data in enumerate(sample_images)]
    resp = client.post("/embed_video", files=files, data={"context": "montage"})
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["dim"] == TINY_DIM
    assert abs(np.linalg.norm(payload["vector"]) - 1.0) < 1e-4


def test_empty_text_rejected_as_malformed(client):
    resp = client.post("/embed_text", json={"text": ""})
    assert resp.status_code == 400


def test_bad_base64_rejected(client):
    resp = client.post("/embed_image", json={"image_b64": "@@@not-base64@@@"})
    assert resp.status_code == 400


def test_undecodable_image_rejected(client):
    resp = client.post(
        "/embed_image", json={"image_b64": base64.b64encode(b"plain text").decode("ascii")}
    )
    assert resp.status_code == 400


def test_similar_images_embed_closer(sidecar_provider):
    near_a = sidecar_provider.embed_image(png([0.9, 0.2, 0.1]))
    near_b = sidecar_provider.embed_image(png([0.85, 0.25, 0.1]))
    far = sidecar_provider.embed_image(png([0.1, 0.2, 0.9]))
    assert float(np.dot(near_a, near_b)) > float(np.dot(near_a, far))


def test_unknown_model_family_rejected():
    with pytest.raises(ModelLoadFailure):
        build_models("imaginary")


def test_scores_are_stable_floats(sidecar_provider, sample_images):
    scores = [sidecar_provider.score_aesthetic(img) for img in sample_images]
    assert all(0.0 <= s <= 10.0 for s in scores)
    assert scores == [sidecar_provider.score_aesthetic(img) for img in sample_images]
