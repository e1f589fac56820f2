"""Session service: envelopes, directives, error surface, isolation."""

from __future__ import annotations

import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raildialog.acts import OPEN_PROMPT_TEXT
from raildialog.service import (
    BadDirective,
    CapacityExceeded,
    ClosedSession,
    SessionBusy,
    SessionManager,
    UnknownSession,
    build_app,
)

SILENT = {"p_fail": 0.0, "p_delete": 0.0, "isolated_factor": 0.0,
          "substitutions": [], "misparses": []}

SUBSTITUTE_ROMA = {"kind": "substitute", "source": "ROMA", "target": "ARONA"}


def fresh(seed: int = 1):
    manager = SessionManager()
    env = manager.create(channel=SILENT, seed=seed)
    return manager, env


def strip_sid(env: dict) -> dict:
    out = copy.deepcopy(env)
    out.pop("session_id")
    return out


class TestSessionLifecycle:
    def test_create_returns_the_greeting(self):
        _, env = fresh()
        assert env["schema_version"] == 1
        assert env["turn"] == 0
        assert env["closed"] is False
        assert env["act"]["kind"] == "open_prompt"
        assert env["act"]["text"] == OPEN_PROMPT_TEXT

    def test_sessions_are_distinct(self):
        manager = SessionManager()
        a = manager.create(channel=SILENT, seed=1)
        b = manager.create(channel=SILENT, seed=1)
        assert a["session_id"] != b["session_id"]
        manager.post(a["session_id"], text="to Roma")
        assert manager.get(b["session_id"])["turn"] == 0

    def test_get_is_read_only(self):
        manager, env = fresh()
        sid = env["session_id"]
        snapshots = [manager.get(sid) for _ in range(3)]
        assert snapshots[0] == snapshots[1] == snapshots[2]

    def test_post_advances_the_turn_counter_by_one(self):
        manager, env = fresh()
        after = manager.post(env["session_id"], text="to Roma")
        assert after["turn"] == env["turn"] + 1

    def test_unknown_session_rejected(self):
        manager = SessionManager()
        with pytest.raises(UnknownSession):
            manager.get("nope")
        with pytest.raises(UnknownSession):
            manager.post("nope", text="yes")

    def test_closed_session_rejects_posts(self):
        manager, env = fresh()
        sid = env["session_id"]
        closed = manager.close(sid)
        assert closed["closed"] is True
        with pytest.raises(ClosedSession):
            manager.post(sid, text="yes")

    def test_capacity_is_enforced(self):
        manager = SessionManager(capacity=1)
        manager.create(channel=SILENT)
        with pytest.raises(CapacityExceeded):
            manager.create(channel=SILENT)

    def test_busy_session_rejects_concurrent_posts(self):
        manager, env = fresh()
        sid = env["session_id"]
        session = manager._sessions[sid]
        assert session.lock.acquire(blocking=False)
        try:
            with pytest.raises(SessionBusy):
                manager.post(sid, text="yes")
        finally:
            session.lock.release()
        manager.post(sid, text="to Roma")  # free again

    def test_substitution_pin_silences_pairs_but_keeps_the_catalog(self):
        manager = SessionManager()
        env = manager.create(channel={"p_fail": 0.0, "p_delete": 0.0,
                                      "isolated_factor": 0.0, "misparses": [],
                                      "substitution_p": 0.0}, seed=5)
        pairs = env["channel"]["substitutions"]
        assert pairs and all(p == 0.0 for _, _, p in pairs)
        assert ["ROMA", "ARONA", 0.0] in pairs
        env = manager.post(env["session_id"], text="from Milano to Roma")
        trace = env["state"]["last_trace"]
        assert trace["heard"] == trace["intended"]

    def test_bad_substitution_pin_is_rejected(self):
        manager = SessionManager()
        for bad in (1.5, -0.1, "silent", True):
            with pytest.raises(BadDirective):
                manager.create(channel={"substitution_p": bad})


class TestConversation:
    def test_noiseless_booking_completes(self):
        manager, env = fresh()
        sid = env["session_id"]
        env = manager.post(sid, text="from Milano to Roma this evening")
        while not env["closed"]:
            env = manager.post(sid, text="yes")
        assert env["failed"] is False
        # the last post carries both the result and the farewell
        kinds = [a["kind"] for a in env["acts"]]
        assert kinds == ["present_info", "closing"]
        assert env["acts"][0]["solutions"]
        store = env["state"]["slot_store"]
        assert store["departure_city"] == {"status": "confirmed", "value": "MILANO"}
        assert store["arrival_city"] == {"status": "confirmed", "value": "ROMA"}

    def test_unparseable_text_counts_as_non_understanding(self):
        manager, env = fresh()
        env = manager.post(env["session_id"], text="qwerty asdf")
        assert env["act"]["kind"] == "non_understanding_request"
        assert env["state"]["last_event"]["kind"] == "non_understanding"
        assert env["state"]["last_trace"]["unparseable"] is True

    def test_forced_failure_channel_never_understands(self):
        manager = SessionManager()
        env = manager.create(channel={**SILENT, "p_fail": 1.0}, seed=3)
        sid = env["session_id"]
        for text in ("from Milano to Roma", "to Roma", "yes"):
            env = manager.post(sid, text=text)
            assert env["state"]["last_event"]["kind"] == "non_understanding"

    def test_explicit_frames_bypass_the_grammar(self):
        manager, env = fresh()
        env = manager.post(env["session_id"],
                           frame={"departure_city": "MILANO",
                                  "arrival_city": "ROMA"})
        assert env["state"]["last_trace"]["intended"] == \
            [["departure_city", "MILANO"], ["arrival_city", "ROMA"]]

    def test_forced_substitution_misleads_the_echo(self):
        manager, env = fresh()
        env = manager.post(env["session_id"], text="from Milano to Roma",
                           corrupt=SUBSTITUTE_ROMA)
        echoed = dict(tuple(p) for p in env["act"]["focused"])
        assert echoed.get("arrival_city") == "ARONA"
        assert env["state"]["last_trace"]["channel"]["substituted"] == \
            [["arrival_city", "ROMA", "ARONA"]]

    def test_correction_after_forced_substitution_repairs(self):
        # the misunderstanding-and-repair shape, driven end to end
        manager, env = fresh()
        sid = env["session_id"]
        env = manager.post(sid, text="to Roma", corrupt=SUBSTITUTE_ROMA)
        assert dict(tuple(p) for p in env["act"]["focused"]) == \
            {"arrival_city": "ARONA"}
        env = manager.post(sid, text="I said Roma")
        assert env["state"]["last_event"]["kind"] == "implicature_repair"
        assert env["act"]["kind"] == "yes_no_confirm"
        assert dict(tuple(p) for p in env["act"]["focused"]) == \
            {"arrival_city": "ROMA"}
        env = manager.post(sid, text="yes")
        assert env["state"]["slot_store"]["arrival_city"] == \
            {"status": "confirmed", "value": "ROMA"}

    def test_forced_deletion_loses_one_slot(self):
        manager, env = fresh()
        env = manager.post(env["session_id"], text="from Milano to Roma today",
                           corrupt={"kind": "delete", "slot": "date"})
        heard = dict(tuple(p) for p in env["state"]["last_trace"]["heard"])
        assert "date" not in heard
        assert env["state"]["last_trace"]["channel"]["deleted"] == ["date"]

    def test_bad_directives_are_rejected(self):
        manager, env = fresh()
        sid = env["session_id"]
        for directive in (
            {"kind": "mangle"},
            {"kind": "substitute", "source": "ROMA"},
            {"kind": "substitute", "source": "ROMA", "target": "XYZZY"},
            {"kind": "delete", "slot": "platform"},
        ):
            with pytest.raises(BadDirective):
                manager.post(sid, text="to Roma", corrupt=directive)

    def test_transcript_records_both_speakers(self):
        manager, env = fresh()
        sid = env["session_id"]
        manager.post(sid, text="from Milano to Roma")
        text = manager.transcript(sid)
        lines = text.splitlines()
        assert lines[0].startswith("SYS")
        assert any(line.startswith("USER from Milano to Roma") for line in lines)

    def test_envelope_is_json_serializable(self):
        manager, env = fresh()
        env = manager.post(env["session_id"], text="from Milano to Roma",
                           corrupt=SUBSTITUTE_ROMA)
        assert json.loads(json.dumps(env)) == env


class TestSessionIsolation:
    SCRIPTS = (
        ["from Milano to Roma this evening", "yes", "yes"],
        ["to Firenze", "from Pisa Centrale", "yes", "yes"],
    )

    def solo_run(self, index: int) -> dict:
        manager = SessionManager()
        env = manager.create(channel=SILENT, seed=100 + index)
        for line in self.SCRIPTS[index]:
            if env["closed"]:
                break
            env = manager.post(env["session_id"], text=line)
        return strip_sid(env)

    @given(schedule=st.lists(st.integers(min_value=0, max_value=1), max_size=12))
    @settings(max_examples=20, deadline=None)
    def test_interleaved_sessions_never_interact(self, schedule):
        references = [self.solo_run(0), self.solo_run(1)]
        manager = SessionManager()
        envs = [manager.create(channel=SILENT, seed=100 + i) for i in range(2)]
        cursors = [0, 0]
        # whatever the interleaving, finish both scripts in the end
        for pick in list(schedule) + [0] * len(self.SCRIPTS[0]) \
                + [1] * len(self.SCRIPTS[1]):
            if cursors[pick] >= len(self.SCRIPTS[pick]) or envs[pick]["closed"]:
                continue
            envs[pick] = manager.post(
                envs[pick]["session_id"], text=self.SCRIPTS[pick][cursors[pick]])
            cursors[pick] += 1
        assert strip_sid(envs[0]) == references[0]
        assert strip_sid(envs[1]) == references[1]


class TestHttpSurface:
    @pytest.fixture()
    def client(self):
        from fastapi.testclient import TestClient
        return TestClient(build_app(SessionManager(capacity=4)))

    def create(self, client, **payload):
        response = client.post("/api/sessions", json={"channel": SILENT,
                                                      "seed": 1, **payload})
        assert response.status_code == 201
        return response.json()

    def test_create_post_get_close_roundtrip(self, client):
        env = self.create(client)
        sid = env["session_id"]
        posted = client.post(f"/api/sessions/{sid}/utterance",
                             json={"text": "from Milano to Roma"})
        assert posted.status_code == 200
        assert posted.json()["turn"] == 1
        got = client.get(f"/api/sessions/{sid}")
        assert got.status_code == 200
        assert got.json() == posted.json()
        closed = client.post(f"/api/sessions/{sid}/close")
        assert closed.status_code == 200
        assert closed.json()["closed"] is True

    def test_unknown_session_is_404(self, client):
        assert client.get("/api/sessions/none").status_code == 404

    def test_closed_session_is_409(self, client):
        env = self.create(client)
        sid = env["session_id"]
        client.post(f"/api/sessions/{sid}/close")
        response = client.post(f"/api/sessions/{sid}/utterance",
                               json={"text": "yes"})
        assert response.status_code == 409
        assert response.json()["detail"]["error"] == "closed_session"

    def test_capacity_is_503(self, client):
        for _ in range(4):
            self.create(client)
        response = client.post("/api/sessions", json={})
        assert response.status_code == 503

    def test_bad_directive_is_422(self, client):
        env = self.create(client)
        response = client.post(
            f"/api/sessions/{env['session_id']}/utterance",
            json={"text": "to Roma", "corrupt": {"kind": "mangle"}})
        assert response.status_code == 422

    def test_bad_frame_is_422(self, client):
        env = self.create(client)
        response = client.post(
            f"/api/sessions/{env['session_id']}/utterance",
            json={"frame": {"arrival_city": "lowercase"}})
        assert response.status_code == 422

    def test_transcript_download_is_plain_text(self, client):
        env = self.create(client)
        sid = env["session_id"]
        client.post(f"/api/sessions/{sid}/utterance", json={"text": "to Roma"})
        response = client.get(f"/api/sessions/{sid}/transcript")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/plain")
        assert "USER to Roma" in response.text

    def test_grammar_fixture_is_served(self, client):
        response = client.get("/api/grammar")
        assert response.status_code == 200
        assert response.json()["schema_version"] == 1
        assert "from" in response.json()["place_markers"]
