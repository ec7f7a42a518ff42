import pytest
from fastapi.testclient import TestClient

from datamin.errors import ConfigError
from datamin.service import create_app

from .test_session import two_cluster_document


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(two_cluster_document()))


def start_session(client):
    response = client.post("/sessions")
    assert response.status_code == 201
    return response.json()


class TestHealth:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}


class TestSessionEndpoints:
    def test_create_returns_offers(self, client):
        body = start_session(client)
        assert body["session_id"]
        age = next(o for o in body["offers"] if o["feature"] == "age")
        kinds = [opt["kind"] for opt in age["options"]]
        assert kinds == ["range", "range", "any"]

    def test_answer_then_finalize(self, client):
        body = start_session(client)
        sid = body["session_id"]
        age = next(o for o in body["offers"] if o["feature"] == "age")
        high = next(o for o in age["options"] if o["kind"] == "range" and o["start"] == 50.0)

        answered = client.post(f"/sessions/{sid}/answers",
                               json={"feature": "age", "option_id": high["id"]})
        assert answered.status_code == 200
        assert all(o["feature"] != "age" for o in answered.json()["offers"])

        final = client.post(f"/sessions/{sid}/finalize")
        assert final.status_code == 200
        payload = final.json()
        assert payload["label"] == "1"
        age_entry = next(e for e in payload["transcript"] if e["feature"] == "age")
        assert age_entry["disclosed"] == {"range": {"start": 50.0, "end": 100.0}}

    def test_unknown_session_is_404_with_code(self, client):
        response = client.post("/sessions/nope/finalize")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "session_not_found"

    def test_double_answer_is_409_with_code(self, client):
        body = start_session(client)
        sid = body["session_id"]
        client.post(f"/sessions/{sid}/answers", json={"feature": "color", "option_id": "any"})
        response = client.post(f"/sessions/{sid}/answers",
                               json={"feature": "color", "option_id": "any"})
        assert response.status_code == 409
        assert response.json()["error"]["code"] == "protocol_error"

    def test_stale_option_is_409(self, client):
        body = start_session(client)
        sid = body["session_id"]
        response = client.post(f"/sessions/{sid}/answers",
                               json={"feature": "age", "option_id": "o99"})
        assert response.status_code == 409

    def test_malformed_body_gets_the_error_envelope(self, client):
        body = start_session(client)
        response = client.post(f"/sessions/{body['session_id']}/answers",
                               json={"feature": "age"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "invalid_request"


class TestApplyEndpoint:
    def test_records_map_to_representatives(self, client):
        response = client.post("/apply", json={"records": [
            {"age": 22, "color": "green"},
            {"age": 77, "color": "red"},
        ]})
        assert response.status_code == 200
        records = response.json()["records"]
        assert records[0]["age"] <= 50.0
        assert records[1]["age"] > 50.0
        # two records in the same cluster share one representative
        again = client.post("/apply", json={"records": [{"age": 33, "color": "blue"}]})
        assert again.json()["records"][0] == records[0]

    def test_missing_feature_is_400(self, client):
        response = client.post("/apply", json={"records": [{"age": 22}]})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "config_error"

    def test_out_of_domain_value_is_400(self, client):
        response = client.post("/apply", json={"records": [{"age": 22, "color": "mauve"}]})
        assert response.status_code == 400


class TestDocumentEndpoint:
    def test_serves_the_frozen_document(self, client):
        response = client.get("/document")
        assert response.status_code == 200
        assert response.json()["format_version"] == 1


class TestMalformedDocument:
    def test_create_app_rejects_garbage(self):
        with pytest.raises(ConfigError):
            create_app({"format_version": 1})
        with pytest.raises(ConfigError):
            create_app({"format_version": 99})
