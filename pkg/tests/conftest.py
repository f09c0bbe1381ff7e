import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from ringvault.server.app import create_app
from ringvault.server.config import ServerConfig

sys.path.insert(0, str(Path(__file__).parent))


class FakeClock:
    """Injectable integer-second clock."""

    def __init__(self, start: int = 1_700_000_000):
        self.now = start

    def __call__(self) -> int:
        return self.now

    def advance(self, seconds: int) -> None:
        self.now += seconds


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def server_env(tmp_path, clock):
    """In-process server plus handles on its data directory and clock."""
    config = ServerConfig(data_dir=tmp_path / "data")
    app = create_app(config, clock=clock)
    client = TestClient(app)
    return {
        "client": client,
        "app": app,
        "config": config,
        "clock": clock,
        "data_dir": config.data_dir,
        "outbox": config.outbox_path,
        "service": app.state.service,
    }


def register_and_login(client, username="alice", password="sw0rdfish",
                       selections=(1, 9, 17)):
    r = client.post("/register", json={
        "username": username, "password": password,
        "email": f"{username}@example.org", "mobile": "555-0001",
        "graphical_selections": list(selections),
    })
    assert r.status_code == 201, r.text
    r = client.post("/login", json={"username": username, "password": password})
    assert r.status_code == 200, r.text
    return {"Authorization": "Bearer " + r.json()["token"]}
