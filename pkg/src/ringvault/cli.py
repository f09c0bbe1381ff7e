"""Client command line: local encrypt/decrypt with user-managed keys, upload
with CIA ratings, and the ring-appropriate challenge flows.

Exit codes: 0 success, 2 validation error, 3 authentication/challenge
failure, 4 server or transport error.
"""

from __future__ import annotations

import base64
import json
import os
import stat
import sys
from pathlib import Path
from typing import List, Optional

import click
import requests

from . import crypto
from .classification import OutOfRange, classify, validate_rating

EXIT_VALIDATION = 2
EXIT_AUTH = 3
EXIT_SERVER = 4

DEFAULT_SERVER = "http://127.0.0.1:8470"


def config_path() -> Path:
    override = os.environ.get("RINGVAULT_CLIENT_CONFIG")
    if override:
        return Path(override)
    return Path.home() / ".config" / "ringvault" / "client.json"


def load_client_config() -> dict:
    path = config_path()
    if path.exists():
        return json.loads(path.read_text())
    return {}


def save_client_config(cfg: dict) -> None:
    path = config_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg))
    path.chmod(stat.S_IRUSR | stat.S_IWUSR)


def create_transport(server_url: str):
    """Session factory; tests may monkeypatch this to talk in-process."""
    return requests.Session()


class ApiClient:
    def __init__(self, server_url: str, token: Optional[str] = None):
        self.server_url = server_url.rstrip("/")
        self.token = token
        self.session = create_transport(self.server_url)

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def _check(self, resp):
        if resp.status_code in (401, 403):
            raise click.exceptions.Exit(self._fail(resp, EXIT_AUTH))
        if resp.status_code >= 400:
            raise click.exceptions.Exit(self._fail(resp, EXIT_SERVER))
        return resp

    @staticmethod
    def _fail(resp, code: int) -> int:
        try:
            message = resp.json().get("message", resp.text)
        except ValueError:
            message = resp.text
        click.echo(f"error: {message}", err=True)
        return code

    def post(self, path: str, body: dict):
        try:
            resp = self.session.post(self.server_url + path, json=body,
                                     headers=self._headers())
        except requests.ConnectionError as exc:
            click.echo(f"error: cannot reach server: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_SERVER)
        return self._check(resp)

    def get(self, path: str):
        try:
            resp = self.session.get(self.server_url + path,
                                    headers=self._headers())
        except requests.ConnectionError as exc:
            click.echo(f"error: cannot reach server: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_SERVER)
        return self._check(resp)


def make_client(server: Optional[str], need_token: bool = True) -> ApiClient:
    cfg = load_client_config()
    url = server or cfg.get("server_url") or DEFAULT_SERVER
    token = cfg.get("token")
    if need_token and not token:
        click.echo("error: not logged in (run `ringvault login`)", err=True)
        raise click.exceptions.Exit(EXIT_AUTH)
    return ApiClient(url, token)


def parse_choices(raw: str) -> List[int]:
    try:
        parts = [int(x) for x in raw.split(",")]
    except ValueError:
        click.echo("error: --choices must be three comma-separated ids", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    if len(parts) != 3:
        click.echo("error: --choices must list exactly three ids", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    return parts


@click.group()
def main():
    """Tiered secure storage client."""


@main.command()
@click.option("--server", default=None, help="Server URL")
@click.option("--username", required=True)
@click.option("--password", required=True, prompt=False)
@click.option("--email", required=True)
@click.option("--mobile", required=True)
@click.option("--choices", required=True,
              help="Graphical password: three image ids, one per set (a,b,c)")
def register(server, username, password, email, mobile, choices):
    """Create an account with a graphical password enrollment."""
    selections = parse_choices(choices)
    client = make_client(server, need_token=False)
    client.post("/register", {
        "username": username, "password": password,
        "email": email, "mobile": mobile,
        "graphical_selections": selections,
    })
    cfg = load_client_config()
    cfg["server_url"] = client.server_url
    save_client_config(cfg)
    click.echo(f"registered {username}")


@main.command()
@click.option("--server", default=None)
@click.option("--username", required=True)
@click.option("--password", required=True)
def login(server, username, password):
    """Obtain and cache a session token."""
    client = make_client(server, need_token=False)
    resp = client.post("/login", {"username": username, "password": password})
    cfg = load_client_config()
    cfg["server_url"] = client.server_url
    cfg["token"] = resp.json()["token"]
    save_client_config(cfg)
    click.echo("logged in")


@main.command("classify")
@click.argument("c", type=int)
@click.argument("i", type=int)
@click.argument("a", type=int)
def classify_cmd(c, i, a):
    """Print the protection ring for a CIA rating (local, no network)."""
    try:
        ring = classify(validate_rating(c, i, a))
    except OutOfRange as exc:
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    click.echo(str(ring.level))


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--passphrase", required=True)
def encrypt(input_path, output_path, passphrase):
    """Encrypt a file locally; the passphrase never leaves this machine."""
    try:
        key = crypto.derive_key(passphrase)
    except crypto.EmptyPassphrase:
        click.echo("error: passphrase must be non-empty", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    envelope = crypto.encrypt(Path(input_path).read_bytes(), key)
    _write_atomic(Path(output_path), crypto.serialize_envelope(envelope))
    click.echo(f"encrypted -> {output_path}")


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--passphrase", required=True)
def decrypt(input_path, output_path, passphrase):
    """Decrypt an envelope file locally."""
    try:
        key = crypto.derive_key(passphrase)
        envelope = crypto.deserialize_envelope(Path(input_path).read_bytes())
        plaintext = crypto.decrypt(envelope, key)
    except (crypto.EmptyPassphrase, crypto.MalformedEnvelope, crypto.BadPadding) as exc:
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    _write_atomic(Path(output_path), plaintext)
    click.echo(f"decrypted -> {output_path}")


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(data)
    tmp.replace(path)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--server", default=None)
@click.option("-c", "--confidentiality", type=int, required=True)
@click.option("-i", "--integrity", type=int, required=True)
@click.option("-a", "--availability", type=int, required=True)
@click.option("--encrypted", is_flag=True, default=False,
              help="Mark the payload as a client-encrypted envelope")
@click.option("--name", default=None)
def put(path, server, confidentiality, integrity, availability, encrypted, name):
    """Upload a file with its CIA ratings; prints the assigned ring."""
    try:
        validate_rating(confidentiality, integrity, availability)
    except OutOfRange as exc:
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_VALIDATION)
    client = make_client(server)
    payload = Path(path).read_bytes()
    resp = client.post("/objects", {
        "name": name or Path(path).name,
        "payload_b64": base64.b64encode(payload).decode(),
        "confidentiality": confidentiality,
        "integrity": integrity,
        "availability": availability,
        "encrypted": encrypted,
    })
    body = resp.json()
    click.echo(f"object: {body['object_id']}")
    click.echo(f"ring: {body['ring']}")


@main.command("list")
@click.option("--server", default=None)
def list_cmd(server):
    """List your stored objects."""
    client = make_client(server)
    for obj in client.get("/objects").json()["objects"]:
        enc = " (encrypted)" if obj["encrypted"] else ""
        click.echo(f"{obj['object_id']}  ring {obj['ring']}  {obj['name']}{enc}")


@main.command()
@click.argument("object_id")
@click.option("--server", default=None)
@click.option("-o", "--output", default=None, type=click.Path(dir_okay=False))
@click.option("--otp", default=None, help="OTP code received out-of-band (ring 1)")
@click.option("--password", default=None, help="Password re-entry (ring 3)")
@click.option("--choices", default=None,
              help="Graphical answer: three image ids a,b,c (ring 2)")
def get(object_id, server, output, otp, password, choices):
    """Download an object, walking the ring-appropriate challenge."""
    client = make_client(server)
    challenge = client.post(f"/objects/{object_id}/access-request", {}).json()
    kind = challenge["kind"]
    if kind == "otp":
        answer = otp or click.prompt("One-time password")
    elif kind == "graphical":
        catalog = client.get("/catalog").json()
        labels = {e["image_id"]: e["label"]
                  for s in catalog["sets"] for e in s}
        for idx, row in enumerate(challenge["presented_sets"], start=1):
            rendered = "  ".join(f"{iid} - {labels.get(iid, '?')}" for iid in row)
            click.echo(f"set {idx}: {rendered}")
        raw = choices or click.prompt("Your three image ids (a,b,c)")
        answer = parse_choices(raw)
    else:
        answer = password or click.prompt("Password", hide_input=True)

    resp = client.post(f"/challenges/{challenge['challenge_id']}/answer",
                       {"answer": answer})
    grant_id = resp.json()["grant_id"]
    download = client.get(f"/download/{grant_id}")
    out_path = Path(output or object_id)
    _write_atomic(out_path, download.content)
    click.echo(f"saved -> {out_path}")


if __name__ == "__main__":
    main()
