"""The provider service: registration, sessions, upload with classification,
ring-gated challenge/response download flows, grants and audit.

Every authentication decision is audited with its precise reason; wire-facing
callers must collapse challenge failures to one generic error.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .. import graphical
from ..classification import OutOfRange, classify, validate_rating
from ..otp import FileOutboxTransport, OtpService, SmsTransport, TransportFailure
from .config import ServerConfig
from .store import PasswordVerifier, Store, StoredObject, UserAccount

PBKDF2_ITERATIONS = 100_000

RING_TO_KIND = {1: "otp", 2: "graphical", 3: "password"}


class ServiceError(Exception):
    def __init__(self, code: str, message: Optional[str] = None):
        self.code = code
        super().__init__(message or code)


@dataclass
class AccessGrant:
    grant_id: str
    user_id: str
    object_id: str
    issued_at: int
    ttl_seconds: int = 60
    consumed: bool = False


@dataclass
class PendingChallenge:
    kind: str  # otp | graphical | password
    challenge_id: str
    user_id: str
    object_id: str
    issued_at: int
    ttl_seconds: int
    consumed: bool = False
    presented_sets: Optional[List[List[int]]] = None


def hash_password(password: str, salt: Optional[bytes] = None) -> PasswordVerifier:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt,
                                 PBKDF2_ITERATIONS)
    return PasswordVerifier("pbkdf2-sha256", PBKDF2_ITERATIONS,
                            salt.hex(), digest.hex())


def check_password(password: str, verifier: PasswordVerifier) -> bool:
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"),
                                 bytes.fromhex(verifier.salt_hex),
                                 verifier.iterations)
    return hmac.compare_digest(digest.hex(), verifier.hash_hex)


class AuditLog:
    """Append-only JSONL record of auth decisions."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record(self, event: str, **fields) -> None:
        entry = {"event": event, **fields}
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")


class RingVaultService:
    def __init__(
        self,
        config: ServerConfig,
        clock: Optional[Callable[[], int]] = None,
        transport: Optional[SmsTransport] = None,
    ):
        self.config = config
        self.clock = clock or (lambda: int(time.time()))
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.store = Store(config.data_dir)
        self.audit = AuditLog(config.data_dir / "audit.log")
        self.transport = transport or FileOutboxTransport(config.outbox_path)
        self.catalog = graphical.load_catalog(config.catalog_path)
        self.otp_service = OtpService(ttl_seconds=config.otp_ttl_seconds)
        self.graphical_service = graphical.GraphicalService(
            self.catalog, ttl_seconds=config.graphical_ttl_seconds)
        self._lock = threading.RLock()
        self._sessions: Dict[str, dict] = {}
        self._pending: Dict[str, PendingChallenge] = {}
        self._pending_by_key: Dict[Tuple[str, str], str] = {}
        self._grants: Dict[str, AccessGrant] = {}
        self._failures: Dict[Tuple[str, str], dict] = {}

    # -- accounts and sessions --

    def register(self, username: str, password: str, email: str, mobile: str,
                 graphical_selections: Sequence[int]) -> UserAccount:
        if not all([username, password, email, mobile]):
            raise ServiceError("WeakInput", "all fields must be non-empty")
        secret = graphical.enroll(self.catalog, graphical_selections)
        with self._lock:
            if self.store.find_username(username) is not None:
                raise ServiceError("DuplicateUsername")
            account = UserAccount(
                user_id=secrets.token_urlsafe(12),
                username=username,
                verifier=hash_password(password),
                email=email,
                mobile=mobile,
                graphical_secret=secret,
            )
            self.store.put_account(account)
        self.audit.record("register", ts=self.clock(), user_id=account.user_id)
        return account

    def enroll_graphical(self, user_id: str, selections: Sequence[int]) -> None:
        """Replace the account's graphical secret."""
        secret = graphical.enroll(self.catalog, selections)
        with self._lock:
            account = self.store.get_account(user_id)
            if account is None:
                raise ServiceError("NotFound")
            account.graphical_secret = secret
            self.store.put_account(account)

    def login(self, username: str, password: str) -> str:
        account = self.store.find_username(username)
        # burn a hash even for unknown users so timing does not enumerate
        verifier = account.verifier if account else hash_password("x")
        ok = check_password(password, verifier) and account is not None
        now = self.clock()
        if not ok:
            self.audit.record("login", ts=now, username=username,
                              decision="reject", reason="BadCredentials")
            raise ServiceError("BadCredentials")
        token = secrets.token_urlsafe(24)
        with self._lock:
            self._sessions[token] = {"user_id": account.user_id, "last_seen": now}
        self.audit.record("login", ts=now, user_id=account.user_id,
                          decision="accept")
        return token

    def authenticate(self, token: Optional[str]) -> UserAccount:
        now = self.clock()
        with self._lock:
            session = self._sessions.get(token) if token else None
            if session is None:
                raise ServiceError("Unauthenticated")
            if now - session["last_seen"] > self.config.session_idle_seconds:
                del self._sessions[token]
                raise ServiceError("Unauthenticated")
            session["last_seen"] = now
            account = self.store.get_account(session["user_id"])
        if account is None:
            raise ServiceError("Unauthenticated")
        return account

    # -- objects --

    def upload(self, account: UserAccount, name: str, payload: bytes,
               c: int, i: int, a: int, encrypted: bool) -> StoredObject:
        rating = validate_rating(c, i, a)
        ring = classify(rating)
        obj = StoredObject(
            object_id=secrets.token_urlsafe(12),
            owner=account.user_id,
            name=name,
            cia=rating,
            ring=ring,
            encrypted=encrypted,
            blob_ref="",
            size_bytes=len(payload),
            created_at=self.clock(),
        )
        obj.blob_ref = obj.object_id + ".blob"
        self.store.put_object(obj, payload)
        return obj

    def list_objects(self, account: UserAccount) -> List[StoredObject]:
        return self.store.list_objects(account.user_id)

    def get_owned_object(self, account: UserAccount, object_id: str) -> StoredObject:
        obj = self.store.get_object(object_id)
        if obj is None:
            raise ServiceError("NotFound")
        if obj.owner != account.user_id:
            raise ServiceError("NotOwner")
        return obj

    # -- challenge flows --

    @staticmethod
    def route_challenge(obj: StoredObject) -> str:
        return RING_TO_KIND[obj.ring.level]

    def request_download(self, account: UserAccount, object_id: str) -> PendingChallenge:
        obj = self.get_owned_object(account, object_id)
        kind = self.route_challenge(obj)
        now = self.clock()
        key = (account.user_id, object_id)
        if kind == "otp":
            challenge = self.otp_service.issue_challenge(account, self.clock,
                                                         self.transport)
            pending = PendingChallenge(
                kind="otp", challenge_id=challenge.challenge_id,
                user_id=account.user_id, object_id=object_id,
                issued_at=challenge.issued_at,
                ttl_seconds=challenge.ttl_seconds,
            )
        elif kind == "graphical":
            challenge = self.graphical_service.issue_challenge(now)
            pending = PendingChallenge(
                kind="graphical", challenge_id=challenge.challenge_id,
                user_id=account.user_id, object_id=object_id,
                issued_at=now, ttl_seconds=challenge.ttl_seconds,
                presented_sets=challenge.presented_sets,
            )
        else:
            pending = PendingChallenge(
                kind="password", challenge_id=secrets.token_urlsafe(16),
                user_id=account.user_id, object_id=object_id,
                issued_at=now, ttl_seconds=self.config.password_ttl_seconds,
            )
        with self._lock:
            prior_id = self._pending_by_key.pop(key, None)
            if prior_id is not None:
                prior = self._pending.pop(prior_id, None)
                if prior is not None:
                    if prior.kind == "otp":
                        self.otp_service.void_challenge(prior.challenge_id)
                    elif prior.kind == "graphical":
                        self.graphical_service.void_challenge(prior.challenge_id)
            self._pending[pending.challenge_id] = pending
            self._pending_by_key[key] = pending.challenge_id
        self.audit.record("challenge_issued", ts=now, user_id=account.user_id,
                          object_id=object_id, kind=pending.kind)
        return pending

    def _locked_out(self, key: Tuple[str, str], now: int) -> bool:
        entry = self._failures.get(key)
        return bool(entry and entry.get("locked_until", 0) > now)

    def _note_failure(self, key: Tuple[str, str], now: int) -> None:
        entry = self._failures.setdefault(key, {"count": 0, "locked_until": 0})
        entry["count"] += 1
        if entry["count"] >= self.config.lockout_threshold:
            entry["locked_until"] = now + self.config.lockout_cooldown_seconds
            entry["count"] = 0

    def complete_challenge(self, account: UserAccount, challenge_id: str,
                           answer) -> AccessGrant:
        now = self.clock()
        with self._lock:
            pending = self._pending.get(challenge_id)
        if pending is None or pending.user_id != account.user_id:
            self._reject(account, challenge_id, "Unknown", now)
        key = (pending.user_id, pending.object_id)

        if pending.kind == "otp":
            if not isinstance(answer, str):
                self._reject(account, challenge_id, "Mismatch", now)
            verdict = self.otp_service.verify_otp(pending.challenge_id, answer, now)
        elif pending.kind == "graphical":
            if self._locked_out(key, now):
                self._reject(account, challenge_id, "LockedOut", now)
            try:
                submitted = [int(x) for x in answer]
            except (TypeError, ValueError):
                submitted = []
            verdict = self.graphical_service.verify(
                account.graphical_secret, pending.challenge_id, submitted, now)
            if verdict == "reject:Mismatch":
                with self._lock:
                    self._note_failure(key, now)
        elif pending.kind == "password":
            verdict = self._verify_password_reentry(account, pending, answer, now)
        else:  # unreachable
            verdict = "reject:Unknown"

        if verdict != "accept":
            self._reject(account, challenge_id, verdict.split(":", 1)[1], now,
                         object_id=pending.object_id, kind=pending.kind)
        with self._lock:
            self._failures.pop(key, None)
            self._pending.pop(challenge_id, None)
            self._pending_by_key.pop(key, None)
            grant = AccessGrant(
                grant_id=secrets.token_urlsafe(16),
                user_id=account.user_id,
                object_id=pending.object_id,
                issued_at=now,
                ttl_seconds=self.config.grant_ttl_seconds,
            )
            self._grants[grant.grant_id] = grant
        self.audit.record("challenge_passed", ts=now, user_id=account.user_id,
                          object_id=pending.object_id, kind=pending.kind)
        return grant

    def _verify_password_reentry(self, account: UserAccount,
                                 pending: PendingChallenge, answer, now: int) -> str:
        with self._lock:
            if pending.consumed:
                return "reject:AlreadyUsed"
            if now >= pending.issued_at + pending.ttl_seconds:
                return "reject:Expired"
            if not isinstance(answer, str) or not check_password(answer, account.verifier):
                return "reject:Mismatch"
            pending.consumed = True
            return "accept"

    def _reject(self, account: UserAccount, challenge_id: str, reason: str,
                now: int, object_id: Optional[str] = None,
                kind: Optional[str] = None):
        self.audit.record("challenge_failed", ts=now, user_id=account.user_id,
                          challenge_id=challenge_id, object_id=object_id,
                          kind=kind, reason=reason)
        raise ServiceError("ChallengeFailed")

    # -- download --

    def download(self, account: UserAccount, grant_id: str) -> Tuple[bytes, StoredObject]:
        now = self.clock()
        with self._lock:
            grant = self._grants.get(grant_id)
            if (grant is None or grant.consumed
                    or grant.user_id != account.user_id
                    or now >= grant.issued_at + grant.ttl_seconds):
                self.audit.record("download", ts=now, user_id=account.user_id,
                                  grant_id=grant_id, decision="reject")
                raise ServiceError("GrantInvalid")
            grant.consumed = True
            obj = self.store.get_object(grant.object_id)
        if obj is None:
            raise ServiceError("GrantInvalid")
        payload = self.store.read_blob(obj)
        self.audit.record("download", ts=now, user_id=account.user_id,
                          object_id=obj.object_id, decision="accept")
        return payload, obj
