"""HTTP API tests: wire shapes, status codes, and the service invariants
(per-session serialization, read-your-writes, restart-and-replay)."""

import threading
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from featline.service import create_app

FIXTURES = Path(__file__).parent / "fixtures"

BIG = """\
model Big
feature Big
  attr N in [0..36028797018963968]
maximize goal top: Big.N
"""

VOID = """\
model V
feature V
constraint V = 1 and V = 0
"""

ONE = """\
model One
feature One
"""


@pytest.fixture(scope="module")
def vmc_text():
    return (FIXTURES / "vmc.fm").read_text()


@pytest.fixture(scope="module")
def bloodlab_text():
    return (FIXTURES / "bloodlab.fm").read_text()


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def upload(client, text):
    r = client.post("/models", json={"text": text})
    assert r.status_code == 200
    mid = r.json()["model_id"]
    assert mid is not None
    return mid


def open_session(client, mid):
    r = client.post("/sessions", json={"model_id": mid})
    assert r.status_code == 201
    return r.json()["session_id"]


def decide(client, sid, name, restriction):
    return client.post(f"/sessions/{sid}/decisions",
                       json={"name": name, "restriction": restriction})


class TestModels:
    def test_upload_valid(self, client, vmc_text):
        r = client.post("/models", json={"text": vmc_text})
        assert r.status_code == 200
        body = r.json()
        assert body["model_id"] is not None
        assert body["diagnostics"] == []

    def test_upload_syntax_error(self, client):
        r = client.post("/models", json={"text": "feature X {"})
        assert r.status_code == 200
        body = r.json()
        assert body["model_id"] is None
        assert body["diagnostics"]
        assert "span" in body["diagnostics"][0]

    def test_upload_validation_error(self, client):
        bad = "model M\nfeature M\nfeature A of M optional\nfeature A of M optional\n"
        body = client.post("/models", json={"text": bad}).json()
        assert body["model_id"] is None
        assert any("A" in d["message"] for d in body["diagnostics"])

    def test_missing_text_field(self, client):
        r = client.post("/models", json={})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "bad-request"

    def test_non_object_body(self, client):
        r = client.post("/models", content=b"[1, 2]",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "bad-request"

    def test_summary_shape(self, client, vmc_text):
        mid = upload(client, vmc_text)
        doc = client.get(f"/models/{mid}").json()
        assert doc["name"] == "VMC"
        names = [f["name"] for f in doc["features"]]
        assert names[0] == "VMC" and len(names) == 19
        sensor = next(f for f in doc["features"] if f["name"] == "Sensor")
        assert sensor["max_count"] == 4
        assert sensor["parent"] == "VMC" and sensor["edge"] == "mandatory"
        mem = next(f for f in doc["features"] if f["name"] == "InternalMemory")
        assert mem["attributes"] == [
            {"name": "Size", "domain": {"values": [32, 64, 256, 512, 1024]}}]
        assert doc["groups"] == [{"parent": "Feedback", "lo": 1, "hi": 2,
                                  "members": ["Visual", "Audio", "Vibration"]}]
        kinds = {(d["kind"], d["source"], d["target"])
                 for d in doc["cross_deps"]}
        assert ("requires", "ConsistencyCheck", "ResponseTimeCheck") in kinds
        assert ("excludes", "SpeedSensor", "Vibration") in kinds

    def test_summary_goals(self, client, bloodlab_text):
        mid = upload(client, bloodlab_text)
        doc = client.get(f"/models/{mid}").json()
        goals = {g["name"]: g["direction"] for g in doc["goals"]}
        assert goals == {"cost": "minimize", "revenue": "maximize"}

    def test_unknown_model_404(self, client):
        r = client.get("/models/m-nope")
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "unknown-model"


class TestAnalyses:
    def test_void(self, client, vmc_text):
        mid = upload(client, vmc_text)
        r = client.post(f"/models/{mid}/analyses", json={"kind": "void"})
        body = r.json()
        assert body["kind"] == "void" and body["void"] is False
        assert isinstance(body["elapsed_ms"], int)

    def test_core_dead(self, client, vmc_text):
        mid = upload(client, vmc_text)
        body = client.post(f"/models/{mid}/analyses",
                           json={"kind": "core_dead"}).json()
        assert "VMC" in body["core"] and "Sensor" in body["core"]
        assert body["dead"] == []

    def test_count_exact_under_cap(self, client, bloodlab_text):
        mid = upload(client, bloodlab_text)
        body = client.post(f"/models/{mid}/analyses",
                           json={"kind": "count",
                                 "params": {"cap": 100000}}).json()
        assert body["count"] == 41664 and body["exact"] is True

    def test_enumerate(self, client, vmc_text):
        mid = upload(client, vmc_text)
        body = client.post(f"/models/{mid}/analyses",
                           json={"kind": "enumerate",
                                 "params": {"limit": 3}}).json()
        assert len(body["solutions"]) == 3
        assert all(s["VMC"] == 1 for s in body["solutions"])

    def test_optimize(self, client, bloodlab_text):
        mid = upload(client, bloodlab_text)
        body = client.post(f"/models/{mid}/analyses",
                           json={"kind": "optimize",
                                 "params": {"goal": "cost"}}).json()
        assert body["value"] == 1 and body["proven"] is True
        assert body["solution"]["Analyzer"] == 1

    def test_validate(self, client, vmc_text):
        mid = upload(client, vmc_text)
        assignment = {
            "VMC": 1, "Processor": 1, "InternalMemory": 1,
            "InternalMemory.Size": 32, "Sensor": 1, "PositionSensor": 1,
            "SpeedSensor": 1, "Feedback": 1, "Visual": 1, "Audio": 0,
            "Vibration": 1, "SensorAutoTest": 0,
            "SensorFunctionalityCheck": 0, "ConsistencyCheck": 0,
            "ResponseTimeCheck": 0, "Actuator": 1, "PositionActuator": 1,
            "ActuatorAutoTest": 0, "ActuatorFunctionalityCheck": 0,
            "MemoryCheck": 0,
        }
        body = client.post(
            f"/models/{mid}/analyses",
            json={"kind": "validate",
                  "params": {"assignment": assignment}}).json()
        assert body["ok"] is False
        assert body["violations"] == ["SpeedSensor excludes Vibration"]

    def test_unknown_kind_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        r = client.post(f"/models/{mid}/analyses", json={"kind": "warp"})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "bad-analysis"

    def test_unknown_goal_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        r = client.post(f"/models/{mid}/analyses",
                        json={"kind": "optimize", "params": {"goal": "nope"}})
        assert r.status_code == 400

    def test_void_model_422(self, client):
        mid = upload(client, VOID)
        r = client.post(f"/models/{mid}/analyses", json={"kind": "core_dead"})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "void-model"

    def test_time_budget_flags_partial_count(self, bloodlab_text):
        # 0 ms budget: the counter must stop early and say so, not hang
        tight = TestClient(create_app(time_budget_ms=0))
        mid = upload(tight, bloodlab_text)
        body = tight.post(f"/models/{mid}/analyses",
                          json={"kind": "count",
                                "params": {"cap": 100000}}).json()
        assert body["exact"] is False
        assert body["count"] < 41664


class TestSessions:
    def test_create_returns_view(self, client, vmc_text):
        mid = upload(client, vmc_text)
        r = client.post("/sessions", json={"model_id": mid})
        assert r.status_code == 201
        view = r.json()["view"]
        root = next(v for v in view["vars"] if v["name"] == "VMC")
        assert root["status"] == "fixed" and root["value"] == 1
        assert isinstance(view["remaining"], (int, str))
        assert isinstance(view["exact"], bool)

    def test_void_model_422(self, client):
        mid = upload(client, VOID)
        r = client.post("/sessions", json={"model_id": mid})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "void-model"

    def test_unknown_model_404(self, client):
        r = client.post("/sessions", json={"model_id": "m-nope"})
        assert r.status_code == 404

    def test_decision_delta(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        r = decide(client, sid, "SpeedSensor",
                   {"kind": "at_least", "value": 1})
        assert r.status_code == 200
        changed = {v["name"]: v for v in r.json()["delta"]["changed"]}
        assert changed["Vibration"]["status"] == "forced_out"
        assert changed["SpeedSensor"]["status"] == "forced_in"

    def test_conflict_409_carries_culprit(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        client.post(f"/sessions/{sid}/constraints",
                    json={"expr_text": "Visual + Audio = 1"})
        decide(client, sid, "Visual", {"kind": "fix", "value": 1})
        before = client.get(f"/sessions/{sid}").json()
        r = decide(client, sid, "Audio", {"kind": "fix", "value": 1})
        assert r.status_code == 409
        err = r.json()["error"]
        assert err["code"] == "conflict"
        assert err["culprit"] == "Visual + Audio = 1"
        assert err["variable"] == "Audio"
        assert err["action"] == "Audio = 1"
        # the rejected decision left nothing behind
        assert client.get(f"/sessions/{sid}").json() == before

    def test_constraint_delta(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        r = client.post(f"/sessions/{sid}/constraints",
                        json={"expr_text": "Feedback = 0"})
        assert r.status_code == 200
        changed = {v["name"] for v in r.json()["delta"]["changed"]}
        assert {"Feedback", "Visual", "Audio", "Vibration"} <= changed

    def test_bad_expression_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        for text in ("Visual + 3", "Ghost = 1", "Visual = "):
            r = client.post(f"/sessions/{sid}/constraints",
                            json={"expr_text": text})
            assert r.status_code == 400
            assert r.json()["error"]["code"] == "bad-expression"

    def test_bad_restriction_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        r = decide(client, sid, "Visual", {"kind": "sideways"})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "bad-restriction"

    def test_unknown_name_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        r = decide(client, sid, "Ghost", {"kind": "fix", "value": 1})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "unknown-name"

    def test_undo(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        base = client.get(f"/sessions/{sid}").json()["view"]
        decide(client, sid, "SpeedSensor", {"kind": "at_least", "value": 1})
        r = client.post(f"/sessions/{sid}/undo", json={"k": 1})
        assert r.status_code == 200
        reopened = {v["name"] for v in r.json()["delta"]["changed"]}
        assert {"SpeedSensor", "Vibration"} <= reopened
        assert client.get(f"/sessions/{sid}").json()["view"] == base

    def test_undo_out_of_range_400(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        r = client.post(f"/sessions/{sid}/undo", json={"k": 1})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "out-of-range"

    def test_solutions_exhaust_to_204(self, client):
        mid = upload(client, ONE)
        sid = open_session(client, mid)
        r = client.post(f"/sessions/{sid}/solutions/next")
        assert r.status_code == 200
        assert r.json()["solution"] == {"One": 1}
        for _ in range(2):
            r = client.post(f"/sessions/{sid}/solutions/next")
            assert r.status_code == 204

    def test_optimize_respects_decisions(self, client, bloodlab_text):
        mid = upload(client, bloodlab_text)
        sid = open_session(client, mid)
        r = client.post(f"/sessions/{sid}/optimize", json={"goal": "cost"})
        assert r.status_code == 200
        body = r.json()
        assert body["value"] == 1 and body["proven"] is True
        decide(client, sid, "Chronometric", {"kind": "fix", "value": 1})
        decide(client, sid, "Colorimetric", {"kind": "fix", "value": 1})
        # a third technique exceeds the choose range
        r = decide(client, sid, "Immunologic", {"kind": "fix", "value": 1})
        assert r.status_code == 409
        body = client.post(f"/sessions/{sid}/optimize",
                           json={"goal": "cost"}).json()
        # brute-forced optimum with both techniques pinned
        assert body["value"] == 2
        sol = body["solution"]
        assert sol["Chronometric"] == 1 and sol["Colorimetric"] == 1

    def test_optimize_unknown_goal_400(self, client, bloodlab_text):
        mid = upload(client, bloodlab_text)
        sid = open_session(client, mid)
        r = client.post(f"/sessions/{sid}/optimize", json={"goal": "nope"})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "unknown-goal"

    def test_delete_then_404(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.delete(f"/sessions/{sid}").status_code == 404
        assert client.get(f"/sessions/{sid}").status_code == 404


class TestInvariants:
    def test_read_your_writes(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        v0 = {v["name"]: v for v in
              client.get(f"/sessions/{sid}").json()["view"]["vars"]}
        delta = decide(client, sid, "SpeedSensor",
                       {"kind": "at_least", "value": 1}).json()["delta"]
        v1 = {v["name"]: v for v in
              client.get(f"/sessions/{sid}").json()["view"]["vars"]}
        changed = {v["name"]: v for v in delta["changed"]}
        for name, var in v1.items():
            assert var == changed.get(name, v0[name])
        assert client.get(f"/sessions/{sid}").json()["view"]["vars"] == \
            list(v1.values())

    def test_restart_replay_reproduces_view(self, vmc_text):
        first = TestClient(create_app())
        mid = upload(first, vmc_text)
        sid = open_session(first, mid)
        first.post(f"/sessions/{sid}/constraints",
                   json={"expr_text": "Visual + Audio = 1"})
        decide(first, sid, "SpeedSensor", {"kind": "at_least", "value": 1})
        decide(first, sid, "InternalMemory.Size",
               {"kind": "in", "values": [64, 256]})
        before = first.get(f"/sessions/{sid}").json()

        second = TestClient(create_app())
        mid2 = upload(second, vmc_text)
        sid2 = open_session(second, mid2)
        for entry in before["log"]:
            if entry["kind"] == "decide":
                r = decide(second, sid2, entry["name"], entry["restriction"])
            else:
                r = second.post(f"/sessions/{sid2}/constraints",
                                json={"expr_text": entry["expr"]})
            assert r.status_code == 200
        after = second.get(f"/sessions/{sid2}").json()
        assert after["view"] == before["view"]
        assert after["log"] == before["log"]

    def test_concurrent_decisions_serialize(self, client, vmc_text):
        mid = upload(client, vmc_text)
        sid = open_session(client, mid)
        targets = ["Sensor", "Actuator", "SpeedSensor", "SensorAutoTest",
                   "ActuatorAutoTest", "MemoryCheck", "ConsistencyCheck",
                   "PositionSensor"]
        statuses = []

        def hit(name):
            r = decide(client, sid, name, {"kind": "at_most", "value": 2})
            statuses.append(r.status_code)

        threads = [threading.Thread(target=hit, args=(n,)) for n in targets]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert statuses == [200] * len(targets)
        doc = client.get(f"/sessions/{sid}").json()
        assert len(doc["log"]) == len(targets)
        assert {e["name"] for e in doc["log"]} == set(targets)


class TestBigIntegers:
    def test_values_beyond_double_precision_travel_as_strings(self, client):
        mid = upload(client, BIG)
        doc = client.get(f"/models/{mid}").json()
        dom = doc["features"][0]["attributes"][0]["domain"]
        assert dom == {"range": [0, "36028797018963968"]}

        sid = open_session(client, mid)
        view = client.get(f"/sessions/{sid}").json()["view"]
        n = next(v for v in view["vars"] if v["name"] == "Big.N")
        assert n["domain"] == [[0, "36028797018963968"]]

        body = client.post(
            f"/models/{mid}/analyses",
            json={"kind": "optimize",
                  "params": {"goal": "top",
                             "value_order": "descending"}}).json()
        assert body["value"] == "36028797018963968"
        assert body["solution"]["Big.N"] == "36028797018963968"


class TestStaticAssets:
    def _dist(self, tmp_path):
        (tmp_path / "assets").mkdir()
        (tmp_path / "index.html").write_text("<!doctype html><title>ui</title>")
        (tmp_path / "assets" / "app.js").write_text("console.log(1)")
        return tmp_path

    def test_mounted_dist_serves_index_and_assets(self, tmp_path):
        c = TestClient(create_app(static_dir=str(self._dist(tmp_path))))
        root = c.get("/")
        assert root.status_code == 200
        assert "<title>ui</title>" in root.text
        js = c.get("/assets/app.js")
        assert js.status_code == 200
        assert js.text == "console.log(1)"

    def test_api_routes_win_over_the_mount(self, tmp_path, vmc_text):
        c = TestClient(create_app(static_dir=str(self._dist(tmp_path))))
        mid = upload(c, vmc_text)
        assert c.get(f"/models/{mid}").json()["name"] == "VMC"
        # an API-shaped miss stays a JSON error, not an HTML fallback
        miss = c.get("/models/nope")
        assert miss.status_code == 404
        assert miss.json()["error"]["code"] == "unknown-model"

    def test_env_var_points_at_the_dist(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FEATLINE_STATIC", str(self._dist(tmp_path)))
        c = TestClient(create_app())
        assert c.get("/").status_code == 200

    def test_without_assets_the_root_is_a_json_404(self, monkeypatch, tmp_path):
        monkeypatch.setenv("FEATLINE_STATIC", "")
        monkeypatch.setattr("featline.service._default_static_dir", lambda: None)
        c = TestClient(create_app())
        miss = c.get("/")
        assert miss.status_code == 404
        assert miss.json()["error"]["code"] == "http-error"
