import random

import pytest

from ringvault import crypto
from oracles import derive_key_oracle


class TestDeriveKey:
    def test_deterministic(self):
        assert crypto.derive_key("hunter2") == crypto.derive_key("hunter2")

    def test_empty_rejected(self):
        with pytest.raises(crypto.EmptyPassphrase):
            crypto.derive_key("")

    def test_matches_oracle(self):
        for phrase in ["hunter2", "a", "correct horse battery staple", "pässwörd"]:
            assert crypto.derive_key(phrase).key_material == derive_key_oracle(phrase)

    def test_every_byte_odd_parity(self):
        for phrase in ["x", "y", "zzz", "hunter2"]:
            for b in crypto.derive_key(phrase).key_material:
                assert bin(b).count("1") % 2 == 1


class TestEncryptDecrypt:
    key = crypto.derive_key("hunter2")

    def test_empty_plaintext_one_block(self):
        env = crypto.encrypt(b"", self.key)
        assert len(env.ciphertext) == 8

    def test_fresh_iv_each_call(self):
        a = crypto.encrypt(b"same message", self.key)
        b = crypto.encrypt(b"same message", self.key)
        assert a.iv != b.iv
        assert a.ciphertext != b.ciphertext

    def test_nine_bytes_pad_to_sixteen(self):
        env = crypto.encrypt(b"123456789", self.key)
        assert len(env.ciphertext) == 16

    def test_length_formula(self):
        for n in range(65):
            env = crypto.encrypt(bytes(n), self.key)
            assert len(env.ciphertext) == 8 * ((n + 8) // 8)

    def test_roundtrip_random_payloads(self):
        rng = random.Random(23)
        for _ in range(300):
            msg = rng.randbytes(rng.randrange(0, 4097))
            key = crypto.EncryptionKey(rng.randbytes(8))
            assert crypto.decrypt(crypto.encrypt(msg, key), key) == msg

    def test_wrong_key_raises_bad_padding_mostly(self):
        rng = random.Random(29)
        failures = 0
        trials = 200
        for _ in range(trials):
            env = crypto.encrypt(rng.randbytes(64), self.key)
            other = crypto.EncryptionKey(rng.randbytes(8))
            try:
                crypto.decrypt(env, other)
            except crypto.BadPadding:
                failures += 1
        # each trial survives only if a random last byte forms valid padding,
        # p < 2^-8 per padding-length case; 0.9 is a very loose floor
        assert failures / trials > 0.9

    def test_key_bytes_absent_from_envelope(self):
        env = crypto.encrypt(b"secret payload" * 10, self.key)
        blob = crypto.serialize_envelope(env)
        assert self.key.key_material not in blob


class TestEnvelopeFormat:
    key = crypto.derive_key("hunter2")

    def test_roundtrip(self):
        env = crypto.encrypt(b"hello world", self.key)
        again = crypto.deserialize_envelope(crypto.serialize_envelope(env))
        assert again == env
        assert crypto.decrypt(again, self.key) == b"hello world"

    def test_magic_prefix(self):
        blob = crypto.serialize_envelope(crypto.encrypt(b"x", self.key))
        assert blob.startswith(b"RV3D\x01")

    def test_truncation_detected(self):
        blob = crypto.serialize_envelope(crypto.encrypt(b"hello world", self.key))
        for cut in (3, 5, 10, len(blob) - 1):
            with pytest.raises(crypto.MalformedEnvelope):
                crypto.deserialize_envelope(blob[:cut])

    def test_trailing_garbage_detected(self):
        blob = crypto.serialize_envelope(crypto.encrypt(b"hello", self.key))
        with pytest.raises(crypto.MalformedEnvelope):
            crypto.deserialize_envelope(blob + b"x")

    def test_bad_magic_detected(self):
        blob = crypto.serialize_envelope(crypto.encrypt(b"hello", self.key))
        with pytest.raises(crypto.MalformedEnvelope):
            crypto.deserialize_envelope(b"XXXX" + blob[4:])

    def test_ragged_ciphertext_rejected(self):
        with pytest.raises(crypto.MalformedEnvelope):
            crypto.CipherEnvelope(crypto.ALGORITHM_TAG, bytes(8), bytes(12))
        with pytest.raises(crypto.MalformedEnvelope):
            crypto.CipherEnvelope(crypto.ALGORITHM_TAG, bytes(8), b"")
