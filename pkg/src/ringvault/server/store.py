"""Durable metadata store plus blob files.

Metadata (accounts, object records) lives in one JSON state file replaced
atomically on every mutation. Blobs are files named by object id, written
via write-then-rename. A crash between blob write and metadata commit leaves
an orphan blob; orphans are reaped on startup.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..classification import CiaRating, ProtectionRing
from ..graphical import GraphicalSecret


@dataclass
class PasswordVerifier:
    scheme: str
    iterations: int
    salt_hex: str
    hash_hex: str

    def as_string(self) -> str:
        return f"{self.scheme}${self.iterations}${self.salt_hex}${self.hash_hex}"


@dataclass
class UserAccount:
    user_id: str
    username: str
    verifier: PasswordVerifier
    email: str
    mobile: str
    graphical_secret: Optional[GraphicalSecret] = None

    @property
    def password_verifier_string(self) -> str:
        return self.verifier.as_string()


@dataclass
class StoredObject:
    object_id: str
    owner: str
    name: str
    cia: CiaRating
    ring: ProtectionRing
    encrypted: bool
    blob_ref: str
    size_bytes: int
    created_at: int


def _account_to_json(a: UserAccount) -> dict:
    d = {
        "user_id": a.user_id,
        "username": a.username,
        "verifier": asdict(a.verifier),
        "email": a.email,
        "mobile": a.mobile,
        "graphical_secret": list(a.graphical_secret.selections)
        if a.graphical_secret else None,
    }
    return d


def _account_from_json(d: dict) -> UserAccount:
    secret = d.get("graphical_secret")
    return UserAccount(
        user_id=d["user_id"],
        username=d["username"],
        verifier=PasswordVerifier(**d["verifier"]),
        email=d["email"],
        mobile=d["mobile"],
        graphical_secret=GraphicalSecret(tuple(secret)) if secret else None,
    )


def _object_to_json(o: StoredObject) -> dict:
    return {
        "object_id": o.object_id,
        "owner": o.owner,
        "name": o.name,
        "cia": [o.cia.c, o.cia.i, o.cia.a],
        "ring": o.ring.level,
        "encrypted": o.encrypted,
        "blob_ref": o.blob_ref,
        "size_bytes": o.size_bytes,
        "created_at": o.created_at,
    }


def _object_from_json(d: dict) -> StoredObject:
    return StoredObject(
        object_id=d["object_id"],
        owner=d["owner"],
        name=d["name"],
        cia=CiaRating(*d["cia"]),
        ring=ProtectionRing(d["ring"]),
        encrypted=d["encrypted"],
        blob_ref=d["blob_ref"],
        size_bytes=d["size_bytes"],
        created_at=d["created_at"],
    )


class Store:
    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.blob_dir = self.data_dir / "blobs"
        self.state_path = self.data_dir / "state.json"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self.accounts: Dict[str, UserAccount] = {}
        self.objects: Dict[str, StoredObject] = {}
        self._load()
        self._reap_orphans()

    def _load(self) -> None:
        if not self.state_path.exists():
            return
        state = json.loads(self.state_path.read_text())
        self.accounts = {d["user_id"]: _account_from_json(d)
                        for d in state.get("accounts", [])}
        self.objects = {d["object_id"]: _object_from_json(d)
                        for d in state.get("objects", [])}

    def _persist(self) -> None:
        state = {
            "accounts": [_account_to_json(a) for a in self.accounts.values()],
            "objects": [_object_to_json(o) for o in self.objects.values()],
        }
        tmp = self.state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, indent=1))
        os.replace(tmp, self.state_path)

    def _reap_orphans(self) -> None:
        known = {o.blob_ref for o in self.objects.values()}
        for path in self.blob_dir.iterdir():
            if path.name not in known:
                path.unlink()

    # -- accounts --

    def find_username(self, username: str) -> Optional[UserAccount]:
        with self._lock:
            for a in self.accounts.values():
                if a.username == username:
                    return a
        return None

    def put_account(self, account: UserAccount) -> None:
        with self._lock:
            self.accounts[account.user_id] = account
            self._persist()

    def get_account(self, user_id: str) -> Optional[UserAccount]:
        with self._lock:
            return self.accounts.get(user_id)

    # -- objects --

    def put_object(self, obj: StoredObject, payload: bytes) -> None:
        with self._lock:
            tmp = self.blob_dir / (obj.blob_ref + ".tmp")
            tmp.write_bytes(payload)
            os.replace(tmp, self.blob_dir / obj.blob_ref)
            self.objects[obj.object_id] = obj
            self._persist()

    def get_object(self, object_id: str) -> Optional[StoredObject]:
        with self._lock:
            return self.objects.get(object_id)

    def list_objects(self, owner: str) -> List[StoredObject]:
        with self._lock:
            return sorted(
                (o for o in self.objects.values() if o.owner == owner),
                key=lambda o: o.created_at,
            )

    def read_blob(self, obj: StoredObject) -> bytes:
        return (self.blob_dir / obj.blob_ref).read_bytes()
