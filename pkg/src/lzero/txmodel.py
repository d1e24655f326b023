"""Transactions, identifiers and prevalidation.

Canonical encoding (all integers little-endian)::

    u32 len(creator) | creator | u64 fee | u32 len(payload) | payload

The signature covers that body; the transaction id is SHA-256 over the body
followed by ``u32 len(signature) | signature``.
"""

import enum
import hashlib
import hmac
import struct
from dataclasses import dataclass, field
from typing import Dict, Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

TXID_SIZE = 32
DEFAULT_PAYLOAD_SIZE = 250
DEFAULT_MAX_PAYLOAD = 4096
DEFAULT_SHORT_ID_BITS = 80


def _lp(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


# --- signatures -----------------------------------------------------------


class SignatureScheme(Protocol):
    name: str

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool: ...


class Signer(Protocol):
    public_key: bytes
    scheme: SignatureScheme

    def sign(self, message: bytes) -> bytes: ...


class Ed25519Scheme:
    name = "ed25519"

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class MacScheme:
    """HMAC-SHA256 stand-in with 32-byte "public" keys.

    Anyone holding the public key can forge signatures, so this only models
    authentication inside a simulation where adversaries use their own keys.
    """

    name = "mac"

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        expected = hmac.new(public_key, message, hashlib.sha256).digest()
        return hmac.compare_digest(expected, signature)


SCHEMES: Dict[str, SignatureScheme] = {"ed25519": Ed25519Scheme(), "mac": MacScheme()}


@dataclass
class Ed25519Signer:
    seed: bytes
    scheme: SignatureScheme = field(default=SCHEMES["ed25519"], repr=False)

    def __post_init__(self) -> None:
        self._key = Ed25519PrivateKey.from_private_bytes(sha256(b"ed25519-seed", self.seed))
        self.public_key = self._key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)


@dataclass
class MacSigner:
    seed: bytes
    scheme: SignatureScheme = field(default=SCHEMES["mac"], repr=False)

    def __post_init__(self) -> None:
        self.public_key = sha256(b"mac-key", self.seed)

    def sign(self, message: bytes) -> bytes:
        return hmac.new(self.public_key, message, hashlib.sha256).digest()


def make_signer(scheme: str, seed: bytes) -> Signer:
    if scheme == "ed25519":
        return Ed25519Signer(seed)
    if scheme == "mac":
        return MacSigner(seed)
    raise ValueError(f"unknown signature scheme {scheme!r}")


def verify_signature(scheme: str, public_key: bytes, message: bytes, signature: bytes) -> bool:
    return SCHEMES[scheme].verify(public_key, message, signature)


# --- transactions ---------------------------------------------------------


@dataclass(frozen=True)
class Transaction:
    creator: bytes
    fee: int
    payload: bytes
    signature: bytes
    id: bytes = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", tx_id(self))

    @property
    def size(self) -> int:
        return len(encode_transaction(self))


def signing_body(creator: bytes, fee: int, payload: bytes) -> bytes:
    # fee is signed-encoded so a negative fee round-trips and is rejected later
    return _lp(creator) + struct.pack("<q", fee) + _lp(payload)


def encode_transaction(tx: Transaction) -> bytes:
    return signing_body(tx.creator, tx.fee, tx.payload) + _lp(tx.signature)


def decode_transaction(data: bytes) -> Transaction:
    off = 0

    def take() -> bytes:
        nonlocal off
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        chunk = data[off:off + n]
        if len(chunk) != n:
            raise ValueError("truncated transaction encoding")
        off += n
        return chunk

    creator = take()
    (fee,) = struct.unpack_from("<q", data, off)
    off += 8
    payload = take()
    signature = take()
    if off != len(data):
        raise ValueError("trailing bytes after transaction")
    return Transaction(creator, fee, payload, signature)


def tx_id(tx: Transaction) -> bytes:
    return sha256(encode_transaction(tx))


def make_transaction(signer: Signer, fee: int, payload: bytes) -> Transaction:
    body = signing_body(signer.public_key, fee, payload)
    return Transaction(signer.public_key, fee, payload, signer.sign(body))


def short_id(txid: bytes, salt: bytes, bits: int = DEFAULT_SHORT_ID_BITS) -> int:
    """Nonzero ``bits``-wide sketch element for a transaction id."""
    v = int.from_bytes(sha256(b"lzero-shortid", salt, txid), "big") >> (256 - bits)
    return v or 1


class Prevalidation(enum.Enum):
    VALID = "valid"
    BAD_SIGNATURE = "bad_signature"
    NEGATIVE_FEE = "negative_fee"
    LOW_FEE = "low_fee"
    OVERSIZE = "oversize"

    @property
    def ok(self) -> bool:
        return self is Prevalidation.VALID


def prevalidate(
    tx: Transaction,
    min_fee: int = 0,
    max_payload: int = DEFAULT_MAX_PAYLOAD,
    scheme: str = "ed25519",
) -> Prevalidation:
    if len(tx.payload) > max_payload:
        return Prevalidation.OVERSIZE
    if tx.fee < 0:
        return Prevalidation.NEGATIVE_FEE
    if not verify_signature(scheme, tx.creator, signing_body(tx.creator, tx.fee, tx.payload), tx.signature):
        return Prevalidation.BAD_SIGNATURE
    if tx.fee < min_fee:
        return Prevalidation.LOW_FEE
    return Prevalidation.VALID
