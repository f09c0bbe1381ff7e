"""One-time passwords: SHA-1 over user data, digest folded by XOR into five
bytes, rendered as ten uppercase hex characters.

Challenges are single-use and expire after ttl_seconds (default 600).
Verification reasons are detailed here; callers must collapse them to a
generic failure on the wire.
"""

from __future__ import annotations

import datetime
import hashlib
import hmac
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Protocol

DEFAULT_TTL_SECONDS = 600

CODE_LENGTH = 10
DIGEST_LENGTH = 20
GROUP_LENGTH = 5


class WrongLength(ValueError):
    pass


class TransportFailure(RuntimeError):
    """The SMS transport could not deliver the code."""


@dataclass(frozen=True)
class OtpSeed:
    username: str
    password_material: str  # stored verifier string, never the plaintext
    email: str
    mobile: str
    timestamp: int  # Unix seconds, UTC

    def __post_init__(self):
        for name in ("username", "password_material", "email", "mobile"):
            if not getattr(self, name):
                raise ValueError(f"seed field {name} must be non-empty")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")


@dataclass
class OtpChallenge:
    challenge_id: str
    user_id: str
    code: str
    issued_at: int
    ttl_seconds: int = DEFAULT_TTL_SECONDS
    consumed: bool = False


def build_seed_string(seed: OtpSeed) -> str:
    """Pipe-joined seed fields with a decimal Unix timestamp."""
    return "|".join([
        seed.username,
        seed.password_material,
        seed.email,
        seed.mobile,
        str(seed.timestamp),
    ])


def digest_seed(s: str) -> bytes:
    return hashlib.sha1(s.encode("utf-8")).digest()


def fold_digest(digest: bytes) -> bytes:
    """XOR the four 5-byte groups of a 20-byte digest into one group."""
    if len(digest) != DIGEST_LENGTH:
        raise WrongLength(f"expected {DIGEST_LENGTH} bytes, got {len(digest)}")
    return bytes(
        digest[j] ^ digest[5 + j] ^ digest[10 + j] ^ digest[15 + j]
        for j in range(GROUP_LENGTH)
    )


def encode_otp(folded: bytes) -> str:
    if len(folded) != GROUP_LENGTH:
        raise WrongLength(f"expected {GROUP_LENGTH} bytes, got {len(folded)}")
    return folded.hex().upper()


def derive_code(seed: OtpSeed) -> str:
    return encode_otp(fold_digest(digest_seed(build_seed_string(seed))))


class SmsTransport(Protocol):
    def deliver(self, mobile: str, body: str) -> None:
        """Deliver one message; raise TransportFailure on error."""


class FileOutboxTransport:
    """Desk-scale SMS stand-in: one tab-separated record per message."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def deliver(self, mobile: str, body: str) -> None:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        line = f"{stamp}\t{mobile}\t{body}\n"
        try:
            with self._lock:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
        except OSError as exc:
            raise TransportFailure(str(exc)) from exc


class OtpService:
    """Issues and verifies single-use, time-limited OTP challenges."""

    def __init__(self, ttl_seconds: int = DEFAULT_TTL_SECONDS):
        self.ttl_seconds = ttl_seconds
        self._challenges: Dict[str, OtpChallenge] = {}
        self._lock = threading.Lock()

    def issue_challenge(self, account, clock: Callable[[], int],
                        transport: SmsTransport) -> OtpChallenge:
        """Derive a code from the account and clock, dispatch it, persist the
        challenge. Nothing is persisted if dispatch fails.

        account needs user_id, username, password_verifier_string, email and
        mobile attributes.
        """
        if not account.mobile:
            raise ValueError("account has no mobile number")
        now = int(clock())
        seed = OtpSeed(
            username=account.username,
            password_material=account.password_verifier_string,
            email=account.email,
            mobile=account.mobile,
            timestamp=now,
        )
        code = derive_code(seed)
        challenge = OtpChallenge(
            challenge_id=secrets.token_urlsafe(16),
            user_id=account.user_id,
            code=code,
            issued_at=now,
            ttl_seconds=self.ttl_seconds,
        )
        transport.deliver(account.mobile, f"Your one-time password is {code}")
        with self._lock:
            self._challenges[challenge.challenge_id] = challenge
        return challenge

    def void_challenge(self, challenge_id: str) -> None:
        with self._lock:
            self._challenges.pop(challenge_id, None)

    def verify_otp(self, challenge_id: str, submitted: str, now: int) -> str:
        """Returns "accept" or "reject:<reason>". The consumed flip and the
        expiry check are one atomic decision."""
        with self._lock:
            challenge = self._challenges.get(challenge_id)
            if challenge is None:
                return "reject:Unknown"
            if challenge.consumed:
                return "reject:AlreadyUsed"
            if now >= challenge.issued_at + challenge.ttl_seconds:
                return "reject:Expired"
            if not hmac.compare_digest(submitted.upper().encode(),
                                       challenge.code.encode()):
                return "reject:Mismatch"
            challenge.consumed = True
            return "accept"
