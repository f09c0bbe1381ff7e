import base64
import json
import random
import re
import secrets

import pytest
from fastapi.testclient import TestClient

from ringvault.server.app import create_app
from ringvault.server.config import ServerConfig
from ringvault.server.store import Store

from conftest import FakeClock, register_and_login

CODE_RE = re.compile(r"[0-9A-F]{10}")


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def upload(client, headers, payload=b"payload", c=2, i=2, a=9, name="f",
           encrypted=False):
    r = client.post("/objects", json={
        "name": name, "payload_b64": b64(payload),
        "confidentiality": c, "integrity": i, "availability": a,
        "encrypted": encrypted,
    }, headers=headers)
    assert r.status_code == 201, r.text
    return r.json()


def read_code(outbox) -> str:
    return CODE_RE.findall(outbox.read_text())[-1]


class TestAccounts:
    def test_register_login(self, server_env):
        headers = register_and_login(server_env["client"])
        assert server_env["client"].get("/objects", headers=headers).status_code == 200

    def test_duplicate_username(self, server_env):
        register_and_login(server_env["client"])
        r = server_env["client"].post("/register", json={
            "username": "alice", "password": "x", "email": "e", "mobile": "m",
            "graphical_selections": [1, 9, 17]})
        assert r.status_code == 409

    def test_weak_input(self, server_env):
        r = server_env["client"].post("/register", json={
            "username": "bob", "password": "", "email": "e", "mobile": "m",
            "graphical_selections": [1, 9, 17]})
        assert r.status_code == 422

    def test_invalid_graphical_selection(self, server_env):
        r = server_env["client"].post("/register", json={
            "username": "bob", "password": "pw", "email": "e", "mobile": "m",
            "graphical_selections": [1, 1, 17]})
        assert r.status_code == 422

    def test_bad_credentials_uniform(self, server_env):
        client = server_env["client"]
        register_and_login(client)
        wrong_pw = client.post("/login", json={"username": "alice", "password": "nope"})
        unknown = client.post("/login", json={"username": "zelda", "password": "nope"})
        assert wrong_pw.status_code == unknown.status_code == 401
        assert wrong_pw.content == unknown.content

    def test_session_idle_timeout(self, server_env):
        client, clock = server_env["client"], server_env["clock"]
        headers = register_and_login(client)
        clock.advance(1801)
        assert client.get("/objects", headers=headers).status_code == 401

    def test_no_plaintext_password_in_store(self, server_env):
        register_and_login(server_env["client"], password="sw0rdfish")
        state = (server_env["data_dir"] / "state.json").read_text()
        assert "sw0rdfish" not in state


class TestUpload:
    @pytest.mark.parametrize("cia,ring", [((7, 7, 2), 1), ((4, 4, 3), 2), ((2, 2, 9), 3)])
    def test_ring_assignment(self, server_env, cia, ring):
        headers = register_and_login(server_env["client"])
        obj = upload(server_env["client"], headers, c=cia[0], i=cia[1], a=cia[2])
        assert obj["ring"] == ring

    def test_out_of_range(self, server_env):
        headers = register_and_login(server_env["client"])
        r = server_env["client"].post("/objects", json={
            "name": "f", "payload_b64": b64(b"x"),
            "confidentiality": 0, "integrity": 5, "availability": 5,
            "encrypted": False}, headers=headers)
        assert r.status_code == 422

    def test_unauthenticated(self, server_env):
        r = server_env["client"].post("/objects", json={
            "name": "f", "payload_b64": b64(b"x"),
            "confidentiality": 2, "integrity": 2, "availability": 9,
            "encrypted": False})
        assert r.status_code == 401

    def test_blob_stored_verbatim(self, server_env):
        headers = register_and_login(server_env["client"])
        payload = secrets.token_bytes(1024)
        obj = upload(server_env["client"], headers, payload=payload)
        blob = (server_env["data_dir"] / "blobs" / (obj["object_id"] + ".blob"))
        assert blob.read_bytes() == payload

    def test_listing(self, server_env):
        headers = register_and_login(server_env["client"])
        upload(server_env["client"], headers, name="one")
        upload(server_env["client"], headers, name="two")
        names = [o["name"] for o in
                 server_env["client"].get("/objects", headers=headers).json()["objects"]]
        assert names == ["one", "two"]


class TestChallengeRouting:
    def _request(self, env, cia):
        headers = register_and_login(env["client"])
        obj = upload(env["client"], headers, c=cia[0], i=cia[1], a=cia[2])
        r = env["client"].post(f"/objects/{obj['object_id']}/access-request",
                               headers=headers)
        assert r.status_code == 200
        return headers, obj, r.json()

    def test_ring1_routes_to_otp(self, server_env):
        _, _, ch = self._request(server_env, (7, 7, 2))
        assert ch["kind"] == "otp"
        assert server_env["outbox"].exists()
        code = read_code(server_env["outbox"])
        assert "code" not in ch and code not in json.dumps(ch)

    def test_ring2_routes_to_graphical(self, server_env):
        _, _, ch = self._request(server_env, (4, 4, 3))
        assert ch["kind"] == "graphical"
        assert [sorted(s) for s in ch["presented_sets"]] == \
            [list(range(1, 9)), list(range(9, 17)), list(range(17, 25))]

    def test_ring3_routes_to_password(self, server_env):
        _, _, ch = self._request(server_env, (2, 2, 9))
        assert ch["kind"] == "password"

    def test_not_owner(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client)
        obj = upload(client, headers)
        other = register_and_login(client, username="bob")
        r = client.post(f"/objects/{obj['object_id']}/access-request", headers=other)
        assert r.status_code == 403

    def test_unknown_object(self, server_env):
        headers = register_and_login(server_env["client"])
        r = server_env["client"].post("/objects/nope/access-request", headers=headers)
        assert r.status_code == 404

    def test_new_request_voids_prior(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client)
        obj = upload(client, headers, c=7, i=7, a=2)
        first = client.post(f"/objects/{obj['object_id']}/access-request",
                            headers=headers).json()
        first_code = read_code(server_env["outbox"])
        client.post(f"/objects/{obj['object_id']}/access-request", headers=headers)
        r = client.post(f"/challenges/{first['challenge_id']}/answer",
                        json={"answer": first_code}, headers=headers)
        assert r.status_code == 403


class TestChallengeCompletion:
    def test_otp_flow(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client)
        payload = secrets.token_bytes(64)
        obj = upload(client, headers, payload=payload, c=8, i=9, a=1)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        code = read_code(server_env["outbox"])
        grant = client.post(f"/challenges/{ch['challenge_id']}/answer",
                            json={"answer": code}, headers=headers).json()
        r = client.get(f"/download/{grant['grant_id']}", headers=headers)
        assert r.status_code == 200 and r.content == payload

    def test_graphical_flow(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client, selections=(2, 10, 18))
        obj = upload(client, headers, c=4, i=4, a=3)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        grant = client.post(f"/challenges/{ch['challenge_id']}/answer",
                            json={"answer": [2, 10, 18]}, headers=headers)
        assert grant.status_code == 200

    def test_password_flow(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client, password="pw-abc")
        obj = upload(client, headers, c=2, i=2, a=9)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        grant = client.post(f"/challenges/{ch['challenge_id']}/answer",
                            json={"answer": "pw-abc"}, headers=headers)
        assert grant.status_code == 200

    def test_wrong_answers_uniform_on_wire(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client, password="pw-abc")
        obj3 = upload(client, headers, c=2, i=2, a=9)
        obj2 = upload(client, headers, c=4, i=4, a=3)
        ch3 = client.post(f"/objects/{obj3['object_id']}/access-request",
                          headers=headers).json()
        ch2 = client.post(f"/objects/{obj2['object_id']}/access-request",
                          headers=headers).json()
        r3 = client.post(f"/challenges/{ch3['challenge_id']}/answer",
                         json={"answer": "wrong"}, headers=headers)
        r2 = client.post(f"/challenges/{ch2['challenge_id']}/answer",
                         json={"answer": [2, 10, 18]}, headers=headers)
        unknown = client.post("/challenges/nope/answer",
                              json={"answer": "x"}, headers=headers)
        assert r3.status_code == r2.status_code == unknown.status_code == 403
        assert r3.content == r2.content == unknown.content

    def test_graphical_lockout(self, server_env):
        client, clock = server_env["client"], server_env["clock"]
        headers = register_and_login(client, selections=(1, 9, 17))
        obj = upload(client, headers, c=4, i=4, a=3)
        for _ in range(5):
            ch = client.post(f"/objects/{obj['object_id']}/access-request",
                             headers=headers).json()
            r = client.post(f"/challenges/{ch['challenge_id']}/answer",
                            json={"answer": [2, 10, 18]}, headers=headers)
            assert r.status_code == 403
        # locked: even the right answer is refused during the cooldown
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        r = client.post(f"/challenges/{ch['challenge_id']}/answer",
                        json={"answer": [1, 9, 17]}, headers=headers)
        assert r.status_code == 403
        clock.advance(901)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        r = client.post(f"/challenges/{ch['challenge_id']}/answer",
                        json={"answer": [1, 9, 17]}, headers=headers)
        assert r.status_code == 200

    def test_audit_log_records_decisions(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client, password="pw-abc")
        obj = upload(client, headers, c=2, i=2, a=9)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        client.post(f"/challenges/{ch['challenge_id']}/answer",
                    json={"answer": "wrong"}, headers=headers)
        events = [json.loads(line)
                  for line in (server_env["data_dir"] / "audit.log").read_text().splitlines()]
        failures = [e for e in events if e["event"] == "challenge_failed"]
        assert failures and failures[-1]["reason"] == "Mismatch"


class TestGrants:
    def _grant(self, env, password="pw-abc"):
        client = env["client"]
        headers = register_and_login(client, password=password)
        payload = secrets.token_bytes(128)
        obj = upload(client, headers, payload=payload, c=2, i=2, a=9)
        ch = client.post(f"/objects/{obj['object_id']}/access-request",
                         headers=headers).json()
        grant = client.post(f"/challenges/{ch['challenge_id']}/answer",
                            json={"answer": password}, headers=headers).json()
        return client, headers, payload, grant

    def test_grant_single_use(self, server_env):
        client, headers, payload, grant = self._grant(server_env)
        assert client.get(f"/download/{grant['grant_id']}", headers=headers).content == payload
        assert client.get(f"/download/{grant['grant_id']}", headers=headers).status_code == 403

    def test_grant_expiry(self, server_env):
        client, headers, _, grant = self._grant(server_env)
        server_env["clock"].advance(61)
        assert client.get(f"/download/{grant['grant_id']}", headers=headers).status_code == 403

    def test_grant_bound_to_user(self, server_env):
        client, _, _, grant = self._grant(server_env)
        other = register_and_login(client, username="bob")
        assert client.get(f"/download/{grant['grant_id']}", headers=other).status_code == 403

    def test_download_without_grant(self, server_env):
        client = server_env["client"]
        headers = register_and_login(client)
        assert client.get("/download/nope", headers=headers).status_code == 403


class TestCatalogEndpoints:
    def test_catalog_shape(self, server_env):
        manifest = server_env["client"].get("/catalog").json()
        assert len(manifest["sets"]) == 3
        assert all(len(s) == 8 for s in manifest["sets"])

    def test_asset_served(self, server_env):
        manifest = server_env["client"].get("/catalog").json()
        ref = manifest["sets"][0][0]["asset_ref"]
        r = server_env["client"].get(f"/assets/{ref}")
        assert r.status_code == 200
        assert r.content.startswith(b"\x89PNG")

    def test_unknown_asset(self, server_env):
        assert server_env["client"].get("/assets/../secrets").status_code == 404


class TestUiServing:
    def test_ui_dir_served_when_configured(self, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html>ui</html>")
        (ui / "main.js").write_text("console.log('ui')")
        client = TestClient(create_app(ServerConfig(data_dir=tmp_path / "data",
                                                    ui_dir=ui)))
        assert client.get("/").text == "<html>ui</html>"
        r = client.get("/ui/main.js")
        assert r.status_code == 200
        assert "javascript" in r.headers["content-type"]
        assert client.get("/ui/../state.json").status_code == 404

    def test_no_ui_routes_by_default(self, server_env):
        assert server_env["client"].get("/ui/main.js").status_code == 404


class TestPersistence:
    def test_restart_preserves_accounts_and_objects(self, tmp_path):
        config = ServerConfig(data_dir=tmp_path / "data")
        clock = FakeClock()
        client = TestClient(create_app(config, clock=clock))
        headers = register_and_login(client, password="pw-abc")
        payload = b"survives restart"
        obj = upload(client, headers, payload=payload, c=2, i=2, a=9)

        client2 = TestClient(create_app(ServerConfig(data_dir=tmp_path / "data"),
                                        clock=clock))
        headers2 = {"Authorization": "Bearer " + client2.post(
            "/login", json={"username": "alice", "password": "pw-abc"}).json()["token"]}
        ch = client2.post(f"/objects/{obj['object_id']}/access-request",
                          headers=headers2).json()
        grant = client2.post(f"/challenges/{ch['challenge_id']}/answer",
                             json={"answer": "pw-abc"}, headers=headers2).json()
        assert client2.get(f"/download/{grant['grant_id']}",
                           headers=headers2).content == payload

    def test_orphan_blob_reaped(self, tmp_path):
        data_dir = tmp_path / "data"
        (data_dir / "blobs").mkdir(parents=True)
        orphan = data_dir / "blobs" / "orphan.blob"
        orphan.write_bytes(b"leftover")
        Store(data_dir)
        assert not orphan.exists()


class TestAccessStateMachine:
    def test_no_download_without_passed_challenge(self, server_env):
        """Random API walk: payload bytes only ever come back after a passed
        ring-correct challenge, through a grant."""
        client = server_env["client"]
        password = "pw-abc"
        headers = register_and_login(client, password=password,
                                     selections=(1, 9, 17))
        payload = secrets.token_bytes(32)
        objects = {}
        for cia in [(7, 7, 2), (4, 4, 3), (2, 2, 9)]:
            obj = upload(client, headers, payload=payload, c=cia[0], i=cia[1], a=cia[2])
            objects[obj["object_id"]] = obj
        rng = random.Random(77)
        pending = {}  # challenge_id -> kind
        earned_grants = set()
        for _ in range(300):
            action = rng.choice(["request", "answer_right", "answer_wrong",
                                 "download_random", "download_earned"])
            oid = rng.choice(list(objects))
            if action == "request":
                ch = client.post(f"/objects/{oid}/access-request",
                                 headers=headers).json()
                pending[ch["challenge_id"]] = ch["kind"]
            elif action in ("answer_right", "answer_wrong") and pending:
                cid, kind = rng.choice(list(pending.items()))
                if action == "answer_right":
                    answer = {"otp": lambda: read_code(server_env["outbox"]),
                              "graphical": lambda: [1, 9, 17],
                              "password": lambda: password}[kind]()
                else:
                    answer = {"otp": lambda: "0000000000",
                              "graphical": lambda: [2, 10, 18],
                              "password": lambda: "wrong"}[kind]()
                r = client.post(f"/challenges/{cid}/answer",
                                json={"answer": answer}, headers=headers)
                pending.pop(cid, None)
                if r.status_code == 200:
                    assert action == "answer_right"
                    earned_grants.add(r.json()["grant_id"])
            elif action == "download_random":
                r = client.get(f"/download/{secrets.token_urlsafe(16)}",
                               headers=headers)
                assert r.status_code == 403
            elif action == "download_earned" and earned_grants:
                gid = earned_grants.pop()
                r = client.get(f"/download/{gid}", headers=headers)
                if r.status_code == 200:
                    assert r.content == payload
