import hashlib
import hmac
import struct

from hypothesis import given, strategies as st

from lzero.txmodel import (
    Prevalidation, decode_transaction, encode_transaction, make_signer, make_transaction, prevalidate,
    short_id,
)


def test_id_is_sha256_of_encoding():
    s = make_signer("mac", b"alice")
    tx = make_transaction(s, 7, b"hello")
    body = struct.pack("<I", 32) + s.public_key + struct.pack("<q", 7) + struct.pack("<I", 5) + b"hello"
    sig = hmac.new(s.public_key, body, hashlib.sha256).digest()
    assert tx.signature == sig
    assert tx.id == hashlib.sha256(body + struct.pack("<I", 32) + sig).digest()


def test_short_id_reference():
    txid, salt = bytes(range(32)), b"salt"
    ref = int.from_bytes(hashlib.sha256(b"lzero-shortid" + salt + txid).digest(), "big") >> 176
    assert short_id(txid, salt) == ref
    assert 0 < ref < 2**80


@given(st.integers(0, 2**40), st.binary(max_size=300))
def test_roundtrip(fee, payload):
    tx = make_transaction(make_signer("ed25519", b"bob"), fee, payload)
    assert decode_transaction(encode_transaction(tx)) == tx
    assert prevalidate(tx).ok


def test_prevalidation_outcomes():
    s = make_signer("ed25519", b"carol")
    good = make_transaction(s, 10, b"x")
    assert prevalidate(good, min_fee=11) is Prevalidation.LOW_FEE
    assert prevalidate(make_transaction(s, -1, b"x")) is Prevalidation.NEGATIVE_FEE
    assert prevalidate(make_transaction(s, 1, b"x" * 5000)) is Prevalidation.OVERSIZE
    forged = type(good)(good.creator, 11, good.payload, good.signature)
    assert prevalidate(forged) is Prevalidation.BAD_SIGNATURE


def test_signers_are_deterministic():
    assert make_signer("ed25519", b"d").public_key == make_signer("ed25519", b"d").public_key
    assert make_signer("mac", b"d").public_key != make_signer("mac", b"e").public_key
