import pytest
from fastapi.testclient import TestClient

from airbraille.service import create_app

QUESTIONNAIRE = {
    "mental_demand": {"constant": 3, "point_by_point": 3, "row_by_row": 4},
    "comfort": {"constant": 5, "point_by_point": 5, "row_by_row": 4},
    "sus_items": [4, 2, 4, 2, 4, 2, 4, 2, 4, 2],
}


@pytest.fixture()
def client(tmp_path):
    app = create_app(storage_dir=tmp_path)
    with TestClient(app) as c:
        yield c


def create_session(client, **overrides):
    body = {"participant": {"id": "p1", "age": 33}, "seed": 5}
    body.update(overrides)
    response = client.post("/v1/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def run_all_trials(client, session_id, answer_fn=None):
    replies = []
    while True:
        nxt = client.get(f"/v1/sessions/{session_id}/next").json()
        if nxt["done"]:
            return replies
        trial = nxt["trial"]
        if answer_fn is not None:
            answer = answer_fn(trial)
        elif trial["phase"] == "training":
            answer = trial["truth_char"]
        else:
            answer = "5"
        reply = client.post(
            f"/v1/sessions/{session_id}/responses",
            json={"trial_id": trial["trial_id"], "answer": answer, "elapsed_s": 2.0},
        )
        assert reply.status_code == 200, reply.text
        replies.append((trial, reply.json()))


class TestBasics:
    def test_health(self, client):
        body = client.get("/v1/health").json()
        assert body["status"] == "ok"

    def test_alphabet_canonical_order(self, client):
        chars = client.get("/v1/alphabet").json()["characters"]
        assert [c["char"] for c in chars] == list("1234567890")
        assert chars[0]["cells"] == "1"
        assert chars[6]["cells"] == "1245"

    def test_methods_listing(self, client):
        body = client.get("/v1/methods").json()
        assert len(body["methods"]) == 9
        assert body["studied"] == ["constant", "point_by_point", "row_by_row"]


class TestSessionLifecycle:
    def test_create_default_counts(self, client):
        created = create_session(client)
        assert created["trial_count"] == 42
        assert created["training_count"] == 12
        assert created["actual_count"] == 30
        assert created["first_trial"]["phase"] == "training"
        assert "truth_pattern" in created["first_trial"]

    def test_next_is_idempotent(self, client):
        created = create_session(client)
        sid = created["session_id"]
        a = client.get(f"/v1/sessions/{sid}/next").json()
        b = client.get(f"/v1/sessions/{sid}/next").json()
        assert a == b

    def test_unknown_session_404(self, client):
        assert client.get("/v1/sessions/nope/next").status_code == 404

    def test_invalid_config_422(self, client):
        response = client.post(
            "/v1/sessions",
            json={"participant": {"id": "x"}, "trials_per_method": 0},
        )
        assert response.status_code == 422

    def test_unknown_method_422(self, client):
        response = client.post(
            "/v1/sessions",
            json={"participant": {"id": "x"}, "methods": ["strobe"]},
        )
        assert response.status_code == 422

    def test_status_endpoint(self, client):
        created = create_session(client)
        sid = created["session_id"]
        status = client.get(f"/v1/sessions/{sid}").json()
        assert status["answered"] == 0 and not status["done"] and not status["finalized"]


class TestTruthDisclosure:
    def test_actual_trials_never_contain_truth(self, client):
        created = create_session(client)
        sid = created["session_id"]
        replies = run_all_trials(client, sid)
        actual_trials = [t for t, _ in replies if t["phase"] == "actual"]
        assert len(actual_trials) == 30
        for trial in actual_trials:
            assert "truth_char" not in trial
            assert "truth_pattern" not in trial
        for trial, reply in replies:
            if trial["phase"] == "actual":
                assert reply == {"phase": "actual", "accepted": True}

    def test_training_replies_include_feedback(self, client):
        created = create_session(client)
        sid = created["session_id"]
        first = created["first_trial"]
        reply = client.post(
            f"/v1/sessions/{sid}/responses",
            json={"trial_id": first["trial_id"], "answer": first["truth_char"], "elapsed_s": 1.5},
        ).json()
        assert reply["correct"] is True
        assert reply["truth_char"] == first["truth_char"]
        assert reply["truth_pattern"] == first["truth_pattern"]


class TestSubmission:
    def test_duplicate_response_409(self, client):
        created = create_session(client)
        sid = created["session_id"]
        first = created["first_trial"]
        body = {"trial_id": first["trial_id"], "answer": "1", "elapsed_s": 1.0}
        assert client.post(f"/v1/sessions/{sid}/responses", json=body).status_code == 200
        assert client.post(f"/v1/sessions/{sid}/responses", json=body).status_code == 409

    def test_out_of_alphabet_answer_422(self, client):
        created = create_session(client)
        sid = created["session_id"]
        body = {"trial_id": created["first_trial"]["trial_id"], "answer": "z", "elapsed_s": 1.0}
        assert client.post(f"/v1/sessions/{sid}/responses", json=body).status_code == 422

    def test_unknown_trial_404(self, client):
        created = create_session(client)
        sid = created["session_id"]
        body = {"trial_id": "t999", "answer": "1", "elapsed_s": 1.0}
        assert client.post(f"/v1/sessions/{sid}/responses", json=body).status_code == 404


class TestFinalize:
    def test_incomplete_409(self, client):
        created = create_session(client)
        sid = created["session_id"]
        response = client.post(f"/v1/sessions/{sid}/finalize", json=QUESTIONNAIRE)
        assert response.status_code == 409

    def test_full_flow(self, client):
        created = create_session(client)
        sid = created["session_id"]
        run_all_trials(client, sid)
        response = client.post(f"/v1/sessions/{sid}/finalize", json=QUESTIONNAIRE)
        assert response.status_code == 200, response.text
        summary = response.json()["summary"]
        assert summary["trial_counts"] == {"training": 12, "actual": 30}
        assert summary["sus"]["mean"] == 75.0

        results = client.get(f"/v1/sessions/{sid}/results")
        assert results.status_code == 200
        assert results.json()["summary"] == summary

    def test_results_before_finalize_409(self, client):
        created = create_session(client)
        sid = created["session_id"]
        assert client.get(f"/v1/sessions/{sid}/results").status_code == 409

    def test_bad_sus_items_422(self, client):
        created = create_session(client)
        sid = created["session_id"]
        run_all_trials(client, sid)
        bad = dict(QUESTIONNAIRE, sus_items=[3, 3])
        assert client.post(f"/v1/sessions/{sid}/finalize", json=bad).status_code == 422


class TestScheduleEndpoint:
    def test_document_shape(self, client):
        created = create_session(client)
        sid = created["session_id"]
        tid = created["first_trial"]["trial_id"]
        doc = client.get(f"/v1/sessions/{sid}/trials/{tid}/schedule").json()
        assert doc["format"] == "airbraille-schedule/1"
        assert doc["method"] == created["first_trial"]["method"]
        assert doc["pattern"] == created["first_trial"]["truth_pattern"]
        assert doc["events"]

    def test_unknown_trial_404(self, client):
        created = create_session(client)
        sid = created["session_id"]
        assert client.get(f"/v1/sessions/{sid}/trials/zzz/schedule").status_code == 404


class TestPersistence:
    def test_log_file_grows_per_response(self, tmp_path):
        app = create_app(storage_dir=tmp_path)
        with TestClient(app) as client:
            created = create_session(client)
            sid = created["session_id"]
            log = tmp_path / f"{sid}.jsonl"
            assert len(log.read_text().splitlines()) == 1
            first = created["first_trial"]
            client.post(
                f"/v1/sessions/{sid}/responses",
                json={"trial_id": first["trial_id"], "answer": "1", "elapsed_s": 1.0},
            )
            assert len(log.read_text().splitlines()) == 2
