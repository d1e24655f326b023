"""Signed, hash-chained mempool commitments and equivocation evidence.

A commitment binds its author to the full set of sketch elements it has ever
committed, through three digests of that set: a bloom clock (fast subset
test), a sketch (set difference) and an additive checksum (equality).

Wire encoding (big-endian)::

    u16 len(author) | author | u64 seq | 32 prev_hash
    | u16 clock_len | clock | u16 capacity | u16 field_bits | sketch
    | 32 checksum | 32 log_digest | u64 tx_count | u64 bundle_count
    | u16 len(signature) | signature
"""

import enum
import hashlib
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

from lzero.bloomclock import BloomClock, clock_consistent
from lzero.params import AnySketch, Deployment
from lzero.txmodel import Signer, verify_signature

ZERO_HASH = bytes(32)
CHECKSUM_MOD = 1 << 256


class DuplicateTransaction(ValueError):
    pass


class DifferentAuthor(ValueError):
    pass


@lru_cache(maxsize=1 << 20)
def checksum_term(element: int) -> int:
    return int.from_bytes(hashlib.sha256(b"cs" + element.to_bytes(16, "big")).digest(), "big")


def set_checksum(elements: Iterable[int], start: int = 0) -> int:
    acc = start
    for e in elements:
        acc += checksum_term(e)
    return acc % CHECKSUM_MOD


@dataclass(frozen=True, eq=False)
class Commitment:
    author: bytes
    seq: int
    prev_hash: bytes
    clock: BloomClock
    sketch: AnySketch
    checksum: int
    log_digest: bytes
    tx_count: int
    bundle_count: int
    signature: bytes = b""
    hash: bytes = field(init=False, repr=False)
    size: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        encoded = self.encode()
        object.__setattr__(self, "hash", hashlib.sha256(encoded).digest())
        object.__setattr__(self, "size", len(encoded))

    def body(self) -> bytes:
        clock = self.clock.serialize()
        return b"".join((
            struct.pack(">H", len(self.author)), self.author,
            struct.pack(">Q", self.seq), self.prev_hash,
            struct.pack(">H", len(clock)), clock,
            struct.pack(">HH", self.sketch.capacity, self.sketch.field_bits), self.sketch.serialize(),
            self.checksum.to_bytes(32, "big"), self.log_digest,
            struct.pack(">QQ", self.tx_count, self.bundle_count),
        ))

    def encode(self) -> bytes:
        return self.body() + struct.pack(">H", len(self.signature)) + self.signature

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Commitment) and other.hash == self.hash

    def __hash__(self) -> int:
        return hash(self.hash)

    def __repr__(self) -> str:
        return (f"Commitment(author={self.author[:4].hex()}, seq={self.seq}, "
                f"tx_count={self.tx_count}, bundles={self.bundle_count})")


def wire_size(author_len: int, clock_cells: int, capacity: int, field_bits: int, sig_len: int) -> int:
    """Encoded commitment size, summed field by field."""
    return (2 + author_len + 8 + 32 + 2 + (4 + 2 * clock_cells) + 4 + capacity * field_bits // 8
            + 32 + 32 + 16 + 2 + sig_len)


def bundle_digest(elements: Iterable[int]) -> bytes:
    return hashlib.sha256(b"".join(e.to_bytes(16, "big") for e in sorted(elements))).digest()


def extend_log_digest(digest: bytes, elements: Iterable[int]) -> bytes:
    """Fold one bundle into the running digest of an author's bundle sequence."""
    return hashlib.sha256(b"lzero-log" + digest + bundle_digest(elements)).digest()


def log_digest_of(bundles: Iterable[Iterable[int]]) -> bytes:
    d = ZERO_HASH
    for b in bundles:
        d = extend_log_digest(d, b)
    return d


def _signed(signer: Signer, **f) -> Commitment:
    unsigned = Commitment(**f)
    return Commitment(signature=signer.sign(unsigned.body()), **f)


def commit_extend(head: Optional[Commitment], new_elements: Sequence[int], signer: Signer,
                  params: Deployment, committed: Optional[set] = None) -> Commitment:
    """Next commitment in ``signer``'s chain, covering ``new_elements`` as one bundle.

    ``committed`` (the author's already-committed elements) enables the
    duplicate check; the engine always passes it.
    """
    new = list(new_elements)
    if len(set(new)) != len(new):
        raise DuplicateTransaction("bundle repeats an element")
    if committed is not None:
        dup = [e for e in new if e in committed]
        if dup:
            raise DuplicateTransaction(f"{len(dup)} element(s) already committed")
    if head is None:
        clock, sketch, checksum, log = params.empty_clock(), params.empty_sketch(), 0, ZERO_HASH
        seq, prev, txs, bundles = 0, ZERO_HASH, 0, 0
    else:
        clock, sketch, checksum, log = head.clock, head.sketch.copy(), head.checksum, head.log_digest
        seq, prev, txs, bundles = head.seq + 1, head.hash, head.tx_count, head.bundle_count
    if new:
        clock = clock.add_many(new)
        sketch.add_many(new)
        checksum = set_checksum(new, checksum)
        log = extend_log_digest(log, new)
        txs += len(new)
        bundles += 1
    return _signed(signer, author=signer.public_key, seq=seq, prev_hash=prev, clock=clock,
                   sketch=sketch, checksum=checksum, log_digest=log, tx_count=txs,
                   bundle_count=bundles)


def forge_commitment(template: Commitment, signer: Signer, **changes) -> Commitment:
    """Re-sign a commitment with some fields replaced (adversary and test helper)."""
    f = dict(author=template.author, seq=template.seq, prev_hash=template.prev_hash,
             clock=template.clock, sketch=template.sketch, checksum=template.checksum,
             log_digest=template.log_digest, tx_count=template.tx_count, bundle_count=template.bundle_count)
    f.update(changes)
    return _signed(signer=signer, **f)


class Verdict(enum.Enum):
    OK = "ok"
    BAD_SIGNATURE = "bad_signature"
    BAD_PARAMS = "bad_params"
    MALFORMED = "malformed"

    def __bool__(self) -> bool:
        return self is Verdict.OK


def verify_commitment(c: Commitment, params: Deployment) -> Verdict:
    if c.clock.params() != params.empty_clock().params():
        return Verdict.BAD_PARAMS
    if c.sketch.capacity != params.sketch_capacity or c.sketch.field_bits != params.field_bits:
        return Verdict.BAD_PARAMS
    if (len(c.prev_hash) != 32 or len(c.log_digest) != 32 or c.seq < 0 or c.tx_count < 0 or c.bundle_count < 0
            or not 0 <= c.checksum < CHECKSUM_MOD or (c.seq == 0 and c.prev_hash != ZERO_HASH)):
        return Verdict.MALFORMED
    if not verify_signature(params.signature_scheme, c.author, c.body(), c.signature):
        return Verdict.BAD_SIGNATURE
    return Verdict.OK


class EvidenceKind(enum.Enum):
    EQUIVOCATION = "equivocation"
    INJECTION = "injection"
    CENSORSHIP = "censorship"
    REORDERING = "reordering"
    MALFORMED_BLOCK = "malformed_block"


@dataclass(frozen=True)
class ExposureEvidence:
    kind: EvidenceKind
    accused: bytes
    items: Tuple[object, ...]
    predicate: str

    @property
    def size(self) -> int:
        return 8 + len(self.predicate) + sum(getattr(i, "size", 32) for i in self.items)


def chain_violation(prev: Commitment, nxt: Commitment, params: Deployment) -> Optional[str]:
    """Name of the append-only rule two same-author commitments break, if any."""
    if prev.seq > nxt.seq:
        prev, nxt = nxt, prev
    if prev.seq == nxt.seq:
        return "same-seq-conflict" if prev.hash != nxt.hash else None
    if nxt.seq == prev.seq + 1 and nxt.prev_hash != prev.hash:
        return "broken-link"
    if nxt.tx_count < prev.tx_count or nxt.bundle_count < prev.bundle_count:
        return "counter-regression"
    if nxt.tx_count == prev.tx_count:
        if nxt.checksum != prev.checksum:
            return "replaced-set"
        if nxt.bundle_count != prev.bundle_count:
            return "counter-regression"
        return "replaced-log" if nxt.log_digest != prev.log_digest else None
    if nxt.bundle_count == prev.bundle_count:
        # more elements without a new bundle
        return "counter-regression"
    if not clock_consistent(prev.clock, nxt.clock) and nxt.checksum != prev.checksum:
        return "clock-regression"
    grown = nxt.tx_count - prev.tx_count
    if grown <= params.sketch_capacity:
        # append-only growth by `grown` elements always decodes to exactly those
        n = nxt.sketch.merge(prev.sketch).decoded_size()
        if n != grown:
            return "sketch-regression"
    return None


def check_chain_consistency(prev: Commitment, nxt: Commitment,
                            params: Deployment) -> Optional[ExposureEvidence]:
    """None when consistent, otherwise equivocation evidence holding both commitments."""
    if prev.author != nxt.author:
        raise DifferentAuthor("commitments from different authors")
    rule = chain_violation(prev, nxt, params)
    if rule is None:
        return None
    items = (prev, nxt) if prev.seq <= nxt.seq else (nxt, prev)
    return ExposureEvidence(EvidenceKind.EQUIVOCATION, prev.author, items, rule)


def verify_commitment_evidence(ev: ExposureEvidence, params: Deployment) -> bool:
    if ev.kind is not EvidenceKind.EQUIVOCATION or len(ev.items) != 2:
        return False
    a, b = ev.items
    if not isinstance(a, Commitment) or not isinstance(b, Commitment):
        return False
    if a.author != ev.accused or b.author != ev.accused:
        return False
    if not verify_commitment(a, params) or not verify_commitment(b, params):
        return False
    return chain_violation(a, b, params) is not None


def chain_elements(chain: Sequence[Commitment], params: Deployment) -> Optional[List[List[int]]]:
    """Recover each commitment's bundle from consecutive sketch differences.

    Returns one sorted element list per commitment (empty for no-op
    extensions), or None when a delta is wider than the sketch capacity or the
    chain is not an append-only sequence.
    """
    out: List[List[int]] = []
    prev: Optional[Commitment] = None
    for c in chain:
        if prev is None:
            if c.seq != 0:
                return None
            base = params.empty_sketch()
            grown = c.tx_count
        else:
            if c.seq != prev.seq + 1 or c.prev_hash != prev.hash:
                return None
            base = prev.sketch
            grown = c.tx_count - prev.tx_count
        if grown == 0:
            out.append([])
        else:
            diff = c.sketch.merge(base).decode()
            if diff is None or len(diff) != grown:
                return None
            out.append(sorted(diff))
        prev = c
    return out
