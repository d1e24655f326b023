"""Canonical block building and block inspection against commitments.

A block carries its creator's full bundle sequence up to the referenced
commitment. Inspectors check that sequence against the commitment's log
digest and counters, then recompute the canonical order themselves.
"""

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from lzero.commitment import (Commitment, EvidenceKind, ExposureEvidence, log_digest_of,
                              verify_commitment)
from lzero.mempool import MempoolLog
from lzero.params import Deployment
from lzero.txmodel import Signer, Transaction, encode_transaction, prevalidate, sha256, verify_signature

GENESIS_BLOCK_HASH = sha256(b"lzero-genesis-block")
_U64 = 1 << 64


class UnresolvableCommitRef(ValueError):
    """The block's commitment reference cannot be verified; grounds for suspicion only."""


def bundle_seed(prev_block_hash: bytes, index: int) -> bytes:
    return sha256(prev_block_hash, struct.pack(">Q", index))


def _u64_stream(seed: bytes) -> Iterator[int]:
    ctr = 0
    while True:
        block = hashlib.sha256(seed + ctr.to_bytes(8, "big")).digest()
        for off in range(0, 32, 8):
            yield int.from_bytes(block[off:off + 8], "big")
        ctr += 1


def canonical_shuffle(ids: Iterable, seed: bytes, key: Optional[Callable] = None) -> list:
    """Fisher-Yates over the sorted arrangement, drawing from SHA-256(seed || counter).

    Each draw is a big-endian u64; draws at or above the largest multiple of
    ``i + 1`` are rejected so every swap index is exactly uniform.
    """
    arr = sorted(ids, key=key)
    keys = [key(a) for a in arr] if key else arr
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate ids")
    draws = _u64_stream(seed)
    for i in range(len(arr) - 1, 0, -1):
        n = i + 1
        limit = _U64 - _U64 % n
        r = next(draws)
        while r >= limit:
            r = next(draws)
        j = r % n
        arr[i], arr[j] = arr[j], arr[i]
    return arr


def _tx_key(tx: Transaction) -> bytes:
    return tx.id


@dataclass(frozen=True, eq=False)
class Block:
    height: int
    prev_hash: bytes
    creator: bytes
    commit_ref: Commitment
    bundles: Tuple[Tuple[int, ...], ...]
    txs: Tuple[Transaction, ...]
    excluded: Tuple[Transaction, ...] = ()
    missing: Tuple[int, ...] = ()
    signature: bytes = b""
    hash: bytes = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hash", hashlib.sha256(self.body() + self.signature).digest())

    def body(self) -> bytes:
        w = 16
        parts = [struct.pack(">Q", self.height), self.prev_hash, struct.pack(">H", len(self.creator)),
                 self.creator, self.commit_ref.hash, struct.pack(">I", len(self.bundles))]
        for b in self.bundles:
            parts.append(struct.pack(">I", len(b)))
            parts.extend(e.to_bytes(w, "big") for e in b)
        for group in (self.txs, self.excluded):
            parts.append(struct.pack(">I", len(group)))
            for tx in group:
                enc = encode_transaction(tx)
                parts.append(struct.pack(">I", len(enc)) + enc)
        parts.append(struct.pack(">I", len(self.missing)))
        parts.extend(e.to_bytes(w, "big") for e in self.missing)
        return b"".join(parts)

    @property
    def tx_ids(self) -> List[bytes]:
        return [t.id for t in self.txs]

    def __repr__(self) -> str:
        return f"Block(height={self.height}, txs={len(self.txs)}, creator={self.creator[:4].hex()})"


def _sign_block(signer: Signer, **f) -> Block:
    unsigned = Block(**f)
    return Block(signature=signer.sign(unsigned.body()), **f)


def canonical_order(bundles: Sequence[Sequence[int]], contents: Dict[int, Transaction],
                    prev_hash: bytes, shuffle: Callable = canonical_shuffle) -> List[Transaction]:
    """Bundles in log order, each bundle's available bodies permuted by its own seed."""
    out: List[Transaction] = []
    for index, bundle in enumerate(bundles):
        txs = [contents[e] for e in bundle if e in contents]
        if txs:
            out.extend(shuffle(txs, bundle_seed(prev_hash, index), key=_tx_key))
    return out


def _fits(bundle_sizes: Sequence[int], cap: Optional[int]) -> int:
    """Number of leading bundles taken whole under a transaction cap."""
    if cap is None:
        return len(bundle_sizes)
    total = 0
    for i, n in enumerate(bundle_sizes):
        if total + n > cap:
            return i
        total += n
    return len(bundle_sizes)


def build_block(log: MempoolLog, head: Commitment, prev_hash: bytes, height: int, signer: Signer,
                params: Deployment, included: Set[int] = frozenset(), min_fee: Optional[int] = None,
                max_txs: Optional[int] = None, shuffle: Callable = canonical_shuffle) -> Block:
    """Build the canonical block for ``log`` as committed by ``head``.

    Elements already on chain are skipped, bodies that fail prevalidation
    are listed in ``excluded`` and elements without a body in ``missing``.
    With ``max_txs`` only whole bundles are taken until the next would overflow.
    """
    fee = params.min_fee if min_fee is None else min_fee
    bundles = log.bundle_elements()[:head.bundle_count]
    keep: Dict[int, Transaction] = {}
    excluded: List[Transaction] = []
    missing: List[int] = []
    sizes: List[int] = []
    for bundle in bundles:
        n = 0
        for e in bundle:
            if e in included:
                continue
            tx = log.contents.get(e)
            if tx is None:
                missing.append(e)
            elif not prevalidate(tx, fee, params.max_payload, params.signature_scheme).ok:
                excluded.append(tx)
            else:
                keep[e] = tx
                n += 1
        sizes.append(n)
    take = _fits(sizes, max_txs)
    if take < len(bundles):
        tail = {e for b in bundles[take:] for e in b}
        keep = {e: t for e, t in keep.items() if e not in tail}
    txs = canonical_order(bundles, keep, prev_hash, shuffle)
    return _sign_block(signer, height=height, prev_hash=prev_hash, creator=signer.public_key,
                       commit_ref=head, bundles=bundles, txs=tuple(txs), excluded=tuple(excluded),
                       missing=tuple(missing))


def _evidence(block: Block, kind: EvidenceKind, predicate: str) -> ExposureEvidence:
    return ExposureEvidence(kind, block.creator, (block, block.commit_ref), predicate)


def inspect_block(block: Block, params: Deployment, included: Set[int] = frozenset(),
                  min_fee: Optional[int] = None, max_txs: Optional[int] = None,
                  shuffle: Callable = canonical_shuffle) -> Optional[ExposureEvidence]:
    """None for a valid block, otherwise evidence naming the first rule it breaks.

    ``included`` holds the elements already on chain before this block.
    Raises UnresolvableCommitRef when the block or its commitment is unverifiable.
    """
    fee = params.min_fee if min_fee is None else min_fee
    ref = block.commit_ref
    if ref.author != block.creator or not verify_commitment(ref, params):
        raise UnresolvableCommitRef("commitment reference does not verify")
    if not verify_signature(params.signature_scheme, block.creator, block.body(), block.signature):
        raise UnresolvableCommitRef("block signature does not verify")

    if (len(block.bundles) != ref.bundle_count or sum(map(len, block.bundles)) != ref.tx_count
            or log_digest_of(block.bundles) != ref.log_digest):
        return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "log-mismatch")
    committed = {e for b in block.bundles for e in b}
    tx_elems = [params.short_id(t.id) for t in block.txs]
    if len(set(tx_elems)) != len(tx_elems):
        return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "duplicate-tx")
    for e in tx_elems:
        if e not in committed:
            return _evidence(block, EvidenceKind.INJECTION, "uncommitted-tx")
        if e in included:
            return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "replayed-tx")

    accounted = set(tx_elems)
    for tx in block.excluded:
        e = params.short_id(tx.id)
        if e not in committed or e in included or e in accounted:
            return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "bad-exclusion")
        if prevalidate(tx, fee, params.max_payload, params.signature_scheme).ok:
            return _evidence(block, EvidenceKind.CENSORSHIP, "valid-tx-excluded")
        accounted.add(e)
    for e in block.missing:
        if e not in committed or e in included or e in accounted:
            return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "bad-missing-notice")
        accounted.add(e)

    kept = set(tx_elems)
    sizes = [sum(1 for e in b if e in kept) for b in block.bundles]
    take = len(block.bundles)
    if max_txs is not None:
        pending = [sum(1 for e in b if e not in included and e not in accounted) + s
                   for b, s in zip(block.bundles, sizes)]
        take = _fits(pending, max_txs)
    for b in block.bundles[:take]:
        for e in b:
            if e not in included and e not in accounted:
                return _evidence(block, EvidenceKind.CENSORSHIP, "committed-tx-omitted")
    if any(e in kept for b in block.bundles[take:] for e in b):
        return _evidence(block, EvidenceKind.MALFORMED_BLOCK, "cap-overflow")

    contents = {e: t for e, t in zip(tx_elems, block.txs)}
    expected = canonical_order(block.bundles, contents, block.prev_hash, shuffle)
    if [t.id for t in expected] != [t.id for t in block.txs]:
        return _evidence(block, EvidenceKind.REORDERING, "non-canonical-order")
    return None


def verify_block_evidence(ev: ExposureEvidence, params: Deployment, included: Set[int] = frozenset(),
                          **kw) -> bool:
    if not ev.items or not isinstance(ev.items[0], Block) or ev.items[0].creator != ev.accused:
        return False
    try:
        found = inspect_block(ev.items[0], params, included, **kw)
    except UnresolvableCommitRef:
        return False
    return found is not None and found.kind is ev.kind


class IncludedBefore:
    """Membership view of the elements on chain below a given height."""

    __slots__ = ("_height_of", "_height")

    def __init__(self, height_of: Dict[int, int], height: int):
        self._height_of = height_of
        self._height = height

    def __contains__(self, e: int) -> bool:
        h = self._height_of.get(e)
        return h is not None and h < self._height


class Chain:
    """The single settled chain of a simulation, with per-block inspection verdicts.

    Inspection is a pure function of the block and the chain below it, so the
    verdict is computed once here and read by every inspecting node.
    """

    def __init__(self, params: Deployment, min_fee: int = 0, max_txs: Optional[int] = None):
        self.params = params
        self.min_fee = min_fee
        self.max_txs = max_txs
        self.blocks: List[Block] = []
        self.times: List[float] = []
        self.height_of: Dict[int, int] = {}
        self._verdicts: Dict[bytes, object] = {}

    @property
    def head_hash(self) -> bytes:
        return self.blocks[-1].hash if self.blocks else GENESIS_BLOCK_HASH

    @property
    def height(self) -> int:
        return len(self.blocks)

    def included_before(self, height: int) -> IncludedBefore:
        return IncludedBefore(self.height_of, height)

    def append(self, block: Block, now: float) -> object:
        if block.height != self.height or block.prev_hash != self.head_hash:
            raise ValueError("block does not extend the chain head")
        verdict = self._inspect(block)
        self._verdicts[block.hash] = verdict
        self.blocks.append(block)
        self.times.append(now)
        for tx in block.txs:
            self.height_of.setdefault(self.params.short_id(tx.id), block.height)
        return verdict

    def _inspect(self, block: Block) -> object:
        try:
            return inspect_block(block, self.params, self.included_before(block.height),
                                 self.min_fee, self.max_txs)
        except UnresolvableCommitRef as exc:
            return exc

    def verdict(self, block: Block) -> object:
        """None (valid), ExposureEvidence, or an UnresolvableCommitRef instance."""
        if block.hash not in self._verdicts:
            self._verdicts[block.hash] = self._inspect(block)
        return self._verdicts[block.hash]
