"""Append-only bundle log and transaction content store of one node.

Bundles hold sketch elements (short ids). Promises are made over decoded
short ids before the transaction bodies arrive, so the element is the only
key available when the bundle is created.
"""

from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Set, Tuple

from lzero.commitment import ZERO_HASH, extend_log_digest
from lzero.txmodel import Transaction

LOCAL = "local"


@dataclass(frozen=True)
class Bundle:
    index: int
    tx_ids: Tuple[int, ...]
    source: Hashable
    commit_seq: int


@dataclass
class MempoolLog:
    bundles: List[Bundle] = field(default_factory=list)
    known: Set[int] = field(default_factory=set)
    contents: Dict[int, Transaction] = field(default_factory=dict)
    digest: bytes = ZERO_HASH

    def append_bundle(self, ids: Iterable[int], source: Hashable, commit_seq: int) -> Optional[Bundle]:
        """Append the unknown part of ``ids`` as one bundle; None if nothing is new."""
        fresh = sorted(set(ids) - self.known)
        if not fresh:
            return None
        b = Bundle(len(self.bundles), tuple(fresh), source, commit_seq)
        self.bundles.append(b)
        self.known.update(fresh)
        self.digest = extend_log_digest(self.digest, fresh)
        return b

    def add_content(self, element: int, tx: Transaction) -> bool:
        """Store a body for a known element; returns True when it was missing."""
        if element not in self.known or element in self.contents:
            return False
        self.contents[element] = tx
        return True

    def missing_content(self) -> Set[int]:
        return self.known - self.contents.keys()

    def ordered_ids(self) -> Iterator[int]:
        for b in self.bundles:
            yield from b.tx_ids

    def bundle_elements(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(b.tx_ids for b in self.bundles)

    def __len__(self) -> int:
        return len(self.known)

    def check_invariants(self) -> None:
        flat = list(self.ordered_ids())
        if len(flat) != len(self.known) or set(flat) != self.known:
            raise AssertionError("bundle log is not a permutation of the known set")
        if any(b.index != i for i, b in enumerate(self.bundles)):
            raise AssertionError("bundle indices are not consecutive")
        if not self.contents.keys() <= self.known:
            raise AssertionError("content stored for an unknown element")


def append_bundle(log: MempoolLog, ids: Iterable[int], source: Hashable,
                  commit_seq: int) -> Optional[Bundle]:
    return log.append_bundle(ids, source, commit_seq)


def missing_content(log: MempoolLog) -> Set[int]:
    return log.missing_content()
