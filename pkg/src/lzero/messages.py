"""Wire messages exchanged between nodes, with their encoded sizes.

Sizes feed the bandwidth metrics. Every message carries a 12-byte frame
header (u16 type, u16 flags, u64 request id). Elements travel as
``field_bits / 8`` bytes, 10 at the default width.
"""

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

from lzero.commitment import Commitment, ExposureEvidence
from lzero.params import AnySketch
from lzero.txmodel import Transaction

HEADER = 12
HASH = 32
ELEMENT = 10


def _csize(c: Optional[Commitment]) -> int:
    return c.size if c is not None else 1


@dataclass(frozen=True)
class CommitRequest:
    commitment: Commitment
    control = True

    @property
    def size(self) -> int:
        return HEADER + self.commitment.size


@dataclass(frozen=True)
class CommitPromise:
    req_hash: bytes
    commitment: Commitment
    wanted: Tuple[int, ...]
    control = True

    @property
    def size(self) -> int:
        return HEADER + HASH + self.commitment.size + 4 + ELEMENT * len(self.wanted)


@dataclass(frozen=True)
class CommitCurrent:
    req_hash: bytes
    commitment: Commitment
    control = True

    @property
    def size(self) -> int:
        return HEADER + HASH + self.commitment.size


@dataclass(frozen=True)
class SketchRequest:
    req_hash: bytes
    depth: int
    prefixes: Tuple[int, ...]
    control = True

    @property
    def size(self) -> int:
        return HEADER + HASH + 2 + 4 * len(self.prefixes)


@dataclass(frozen=True)
class SketchReply:
    req_hash: bytes
    depth: int
    sketches: Tuple[Tuple[int, AnySketch], ...]
    control = True

    @property
    def size(self) -> int:
        return HEADER + HASH + 2 + sum(4 + s.serialized_size() for _, s in self.sketches)


@dataclass(frozen=True)
class TxBatch:
    txs: Tuple[Transaction, ...]
    # transaction bodies are identical across protocols and not counted as overhead
    control = False

    @property
    def size(self) -> int:
        return HEADER + sum(4 + t.size for t in self.txs)


@dataclass(frozen=True)
class SuspicionGossip:
    target: bytes
    suspecter: bytes
    request: Commitment
    last: Optional[Commitment]
    control = True

    @property
    def size(self) -> int:
        return HEADER + 2 * HASH + self.request.size + _csize(self.last)


@dataclass(frozen=True)
class SuspicionRetraction:
    target: bytes
    proof: Commitment
    control = True

    @property
    def size(self) -> int:
        return HEADER + HASH + self.proof.size


@dataclass(frozen=True)
class CommitForward:
    commitment: Commitment
    control = True

    @property
    def size(self) -> int:
        return HEADER + self.commitment.size


@dataclass(frozen=True)
class ExposureGossip:
    evidence: ExposureEvidence
    control = True

    @property
    def size(self) -> int:
        return HEADER + self.evidence.size


@dataclass(frozen=True)
class CommitmentSample:
    samples: Tuple[Commitment, ...]
    control = True

    @property
    def size(self) -> int:
        return HEADER + 2 + sum(c.size for c in self.samples)


@dataclass(frozen=True)
class BlockAnnouncement:
    block: object
    # blocks propagate the same way under every protocol
    control = False

    @property
    def size(self) -> int:
        return HEADER + len(self.block.body()) + len(self.block.signature)


@dataclass(frozen=True)
class MempoolHashes:
    hashes: FrozenSet[bytes]
    control = True

    @property
    def size(self) -> int:
        return HEADER + 4 + HASH * len(self.hashes)


@dataclass(frozen=True)
class TxRequest:
    hashes: Tuple[bytes, ...]
    control = True

    @property
    def size(self) -> int:
        return HEADER + 4 + HASH * len(self.hashes)
