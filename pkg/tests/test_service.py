import json
import warnings

import pytest
from fastapi.testclient import TestClient

from skillrec.bundle import train_bundle
from skillrec.config import Config
from skillrec.embed import TfIdfProviderFactory
from skillrec.service import ServiceState, create_app


@pytest.fixture(scope="module")
def service_client(tmp_path_factory):
    from helpers import build_demo_corpus
    from skillrec.ingest import load_corpus

    root = build_demo_corpus(tmp_path_factory.mktemp("svc") / "corpus")
    corpus = load_corpus(root)
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="degenerate training data")
        bundle = train_bundle(
            corpus, TfIdfProviderFactory(max_terms=32), Config().hyper(), 2025, 3, seed=42
        )
    state = ServiceState(corpus=corpus, bundle=bundle)
    app = create_app(state)
    with TestClient(app) as client:
        yield client


def test_health(service_client):
    resp = service_client.get("/health")
    assert resp.status_code == 200
    assert resp.text == "ok"


def test_recommend_endpoint_shape(service_client):
    resp = service_client.post("/recommend", json={"student": "s-ana", "week": 4, "k": 2})
    assert resp.status_code == 200
    payload = resp.json()
    assert [r["rank"] for r in payload] == [1, 2]
    assert resp.content.endswith(b"\n")


def test_recommend_unknown_student_404(service_client):
    resp = service_client.post("/recommend", json={"student": "s-zoe", "week": 4})
    assert resp.status_code == 404


def test_recommend_empty_scope_409(service_client):
    resp = service_client.post("/recommend", json={"student": "s-ana", "week": 1})
    assert resp.status_code == 409


def test_malformed_body_400(service_client):
    resp = service_client.post(
        "/recommend", content=b"{not json", headers={"Content-Type": "application/json"}
    )
    assert resp.status_code == 400
    resp = service_client.post("/recommend", json={"week": 4})
    assert resp.status_code == 400
    resp = service_client.post("/recommend", json={"student": "s-ana", "week": 4, "k": 0})
    assert resp.status_code == 400
    resp = service_client.post(
        "/recommend", json={"student": "s-ana", "week": 4, "metric": "magic"}
    )
    assert resp.status_code == 400


def test_bundle_not_loaded_503():
    app = create_app(None)
    with TestClient(app) as client:
        assert client.get("/health").status_code == 200
        resp = client.post("/recommend", json={"student": "x", "week": 2})
        assert resp.status_code == 503


def test_deterministic_across_requests(service_client):
    body = {"student": "s-bob", "week": 3, "k": 3, "strategy": "avg-all"}
    first = service_client.post("/recommend", json=body).content
    second = service_client.post("/recommend", json=body).content
    assert first == second
    payload = json.loads(first)
    assert all(set(item) == {"problem", "score", "rank"} for item in payload)
