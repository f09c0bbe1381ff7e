"""Client-side encryption: passphrase-derived DES key, CBC/PKCS#7 chaining,
self-describing envelope.

Keys stay with the user; the server only ever sees opaque envelope bytes.
DES is kept for compatibility with the surrounding design, not for strength;
the envelope records its algorithm tag so the format survives a cipher swap.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass
from typing import Callable, Optional

from . import des

BLOCK_SIZE = 8
ALGORITHM_TAG = "DES-CBC-PKCS7"
ENVELOPE_MAGIC = b"RV3D"
ENVELOPE_VERSION = 1


class EmptyPassphrase(ValueError):
    pass


class BadPadding(ValueError):
    """Decryption produced invalid PKCS#7 padding (wrong key or corruption)."""


class MalformedEnvelope(ValueError):
    """Envelope bytes violate the serialization format."""


@dataclass(frozen=True)
class EncryptionKey:
    key_material: bytes  # 8 bytes, odd parity per byte

    def __post_init__(self):
        if len(self.key_material) != 8:
            raise ValueError("DES key material must be 8 bytes")


@dataclass(frozen=True)
class CipherEnvelope:
    algorithm_tag: str
    iv: bytes
    ciphertext: bytes

    def __post_init__(self):
        if len(self.iv) != BLOCK_SIZE:
            raise MalformedEnvelope("iv must be 8 bytes")
        if not self.ciphertext or len(self.ciphertext) % BLOCK_SIZE:
            raise MalformedEnvelope("ciphertext length must be a positive multiple of 8")


def _odd_parity(b: int) -> int:
    # flip the low bit if the byte has an even number of set bits
    if bin(b).count("1") % 2 == 0:
        return b ^ 1
    return b


def derive_key(passphrase: str) -> EncryptionKey:
    """First 8 SHA-1 bytes of the passphrase, parity-adjusted. Deterministic."""
    if not passphrase:
        raise EmptyPassphrase("passphrase must be non-empty")
    digest = hashlib.sha1(passphrase.encode("utf-8")).digest()
    return EncryptionKey(bytes(_odd_parity(b) for b in digest[:8]))


def _pad(data: bytes) -> bytes:
    n = BLOCK_SIZE - len(data) % BLOCK_SIZE
    return data + bytes([n]) * n


def _unpad(data: bytes) -> bytes:
    if not data:
        raise BadPadding("empty plaintext buffer")
    n = data[-1]
    if not 1 <= n <= BLOCK_SIZE or data[-n:] != bytes([n]) * n:
        raise BadPadding("invalid PKCS#7 padding")
    return data[:-n]


def encrypt(
    plaintext: bytes,
    key: EncryptionKey,
    rng: Optional[Callable[[int], bytes]] = None,
) -> CipherEnvelope:
    """CBC-encrypt with a fresh random IV. rng(n) -> n bytes, defaults secure."""
    rng = rng or secrets.token_bytes
    iv = rng(BLOCK_SIZE)
    padded = _pad(plaintext)
    subkeys = des.key_schedule(key.key_material)
    out = bytearray()
    prev = iv
    for off in range(0, len(padded), BLOCK_SIZE):
        block = bytes(x ^ y for x, y in zip(padded[off:off + BLOCK_SIZE], prev))
        prev = des.crypt_block(block, subkeys)
        out += prev
    return CipherEnvelope(ALGORITHM_TAG, iv, bytes(out))


def decrypt(envelope: CipherEnvelope, key: EncryptionKey) -> bytes:
    if envelope.algorithm_tag != ALGORITHM_TAG:
        raise MalformedEnvelope(f"unsupported algorithm {envelope.algorithm_tag!r}")
    subkeys = des.key_schedule(key.key_material)[::-1]
    out = bytearray()
    prev = envelope.iv
    ct = envelope.ciphertext
    for off in range(0, len(ct), BLOCK_SIZE):
        block = ct[off:off + BLOCK_SIZE]
        out += bytes(x ^ y for x, y in zip(des.crypt_block(block, subkeys), prev))
        prev = block
    return _unpad(bytes(out))


def serialize_envelope(envelope: CipherEnvelope) -> bytes:
    """magic | version | tag-len + tag | iv | ct-len (u64 BE) | ct"""
    tag = envelope.algorithm_tag.encode("ascii")
    if len(tag) > 255:
        raise MalformedEnvelope("algorithm tag too long")
    return b"".join([
        ENVELOPE_MAGIC,
        bytes([ENVELOPE_VERSION, len(tag)]),
        tag,
        envelope.iv,
        struct.pack(">Q", len(envelope.ciphertext)),
        envelope.ciphertext,
    ])


def deserialize_envelope(data: bytes) -> CipherEnvelope:
    if len(data) < 6 or data[:4] != ENVELOPE_MAGIC:
        raise MalformedEnvelope("bad magic")
    if data[4] != ENVELOPE_VERSION:
        raise MalformedEnvelope(f"unsupported version {data[4]}")
    tag_len = data[5]
    pos = 6
    if len(data) < pos + tag_len + BLOCK_SIZE + 8:
        raise MalformedEnvelope("truncated header")
    tag = data[pos:pos + tag_len].decode("ascii")
    pos += tag_len
    iv = data[pos:pos + BLOCK_SIZE]
    pos += BLOCK_SIZE
    (ct_len,) = struct.unpack(">Q", data[pos:pos + 8])
    pos += 8
    ct = data[pos:pos + ct_len]
    if len(ct) != ct_len or pos + ct_len != len(data):
        raise MalformedEnvelope("ciphertext length mismatch")
    if not ct_len or ct_len % BLOCK_SIZE:
        raise MalformedEnvelope("ciphertext length must be a positive multiple of 8")
    return CipherEnvelope(tag, iv, ct)
