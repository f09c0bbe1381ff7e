"""Independent oracles used to pin expected values.

These deliberately do not share code paths with the package: the ring oracle
is a literal transcription of the rule table, the DES oracle goes through the
cryptography package (3DES with K1=K2=K3 is single DES), and the OTP oracle
recomputes the pipeline from hashlib primitives.
"""

import hashlib

from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
from cryptography.hazmat.primitives.ciphers import Cipher, modes


def ring_oracle(c: int, i: int, a: int) -> int:
    """Rule table: paper rules R1-R4 plus the two gap-closing decisions
    (ci >= 5 without R1 -> ring 2; a = 5 inside the 3..5 band -> ring 2)."""
    if c > 6 and i > 6:
        return 1
    ci2 = c + i  # 2*ci, keeps arithmetic integral
    if 6 < ci2 < 10 and a < 5:
        return 2
    if 6 < ci2 < 10 and a > 5:
        return 3
    if 2 <= ci2 <= 6:
        return 3
    if 6 < ci2 < 10 and a == 5:
        return 2  # boundary closed toward the more protective ring
    return 2  # ci >= 5, R1 not satisfied


def des_encrypt_oracle(block: bytes, key: bytes) -> bytes:
    enc = Cipher(TripleDES(key * 3), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def des_decrypt_oracle(block: bytes, key: bytes) -> bytes:
    dec = Cipher(TripleDES(key * 3), modes.ECB()).decryptor()
    return dec.update(block) + dec.finalize()


def otp_oracle(username: str, password_material: str, email: str,
               mobile: str, timestamp: int) -> str:
    seed = f"{username}|{password_material}|{email}|{mobile}|{timestamp}"
    digest = hashlib.sha1(seed.encode("utf-8")).digest()
    groups = [digest[k:k + 5] for k in range(0, 20, 5)]
    folded = bytes(g0 ^ g1 ^ g2 ^ g3 for g0, g1, g2, g3 in zip(*groups))
    return "".join(f"{b:02X}" for b in folded)


def derive_key_oracle(passphrase: str) -> bytes:
    raw = hashlib.sha1(passphrase.encode("utf-8")).digest()[:8]
    out = []
    for b in raw:
        ones = bin(b).count("1")
        out.append(b if ones % 2 == 1 else b ^ 1)
    return bytes(out)
