"""Misbehaving node strategies.

Each strategy deviates from the honest engine in one behaviour and is
otherwise identical, so that any detection is attributable to that deviation.
"""

from typing import Callable, Dict, FrozenSet, Iterable, Optional, Set, Type

from lzero.blockchain import Block, _sign_block
from lzero.commitment import Commitment, commit_extend
from lzero.engine import Node
from lzero.txmodel import make_signer, make_transaction


def default_target(e: int) -> bool:
    """Transactions singled out by censoring strategies: one eighth of all ids."""
    return e % 8 == 0


class NonResponder(Node):
    """Never answers commitment requests, but still initiates its own."""

    strategy = "nonresponder"

    def responds_to(self, peer: int) -> bool:
        return False

    def on_sketch_request(self, src, msg) -> None:
        return None


class ColludingCensor(Node):
    """Talks only to coalition members: no answers, relays or requests towards others."""

    strategy = "colluding"

    def __init__(self, *args, coalition: FrozenSet[int] = frozenset(), **kw):
        super().__init__(*args, **kw)
        self.coalition = coalition

    def send(self, dst: int, msg: object) -> None:
        if dst in self.coalition:
            super().send(dst, msg)

    def responds_to(self, peer: int) -> bool:
        return peer in self.coalition

    def sync_candidates(self):
        return [j for j in super().sync_candidates() if j in self.coalition]


class Equivocator(Node):
    """Keeps a second commitment chain and serves it to every other neighbor.

    The second chain leaves out the first bundle at the fork for good and
    otherwise follows the real set. Both chains are individually valid.
    """

    strategy = "equivocator"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.alt_peers = set(self.neighbors[1::2])
        self.alt_head = self.head
        self.alt_set: Set[int] = set()
        self.omitted: Set[int] = set()
        self.forked = False

    def alt_filter(self, e: int) -> bool:
        return True

    def head_for(self, peer: int) -> Commitment:
        return self.alt_head if peer in self.alt_peers else self.head

    def extend(self, elements: Iterable[int], source: object) -> None:
        super().extend(elements, source)
        if not self.forked:
            self.alt_head = commit_extend(self.alt_head, [], self.signer, self.params)
            self.omitted = set(self.log.known)
            self.forked = True
            return
        catch_up = sorted(e for e in self.log.known - self.alt_set - self.omitted if self.alt_filter(e))
        cap = self.params.sketch_capacity
        for i in range(0, len(catch_up), cap):
            chunk = catch_up[i:i + cap]
            self.alt_head = commit_extend(self.alt_head, chunk, self.signer, self.params)
            self.alt_set.update(chunk)


class MempoolCensor(Equivocator):
    """Hides targeted transactions from half of its neighbors with a censored chain."""

    strategy = "mempool_censor"

    def __init__(self, *args, target: Callable[[int], bool] = default_target, **kw):
        self.target = target
        super().__init__(*args, **kw)

    def alt_filter(self, e: int) -> bool:
        return not self.target(e)

    def extend(self, elements: Iterable[int], source: object) -> None:
        # censored chain never forks on order, it only omits targets
        self.forked = True
        super().extend(elements, source)


def _resign(node: Node, block: Block, txs) -> Block:
    return _sign_block(node.signer, height=block.height, prev_hash=block.prev_hash,
                       creator=block.creator, commit_ref=block.commit_ref, bundles=block.bundles,
                       txs=tuple(txs), excluded=block.excluded, missing=block.missing)


class Injector(Node):
    """Puts a fresh, never committed transaction at the front of its blocks."""

    strategy = "injector"

    def make_block(self, prev_hash, height, included) -> Block:
        block = super().make_block(prev_hash, height, included)
        sybil = make_signer(self.params.signature_scheme, b"sybil-%d" % self.nid)
        fresh = make_transaction(sybil, 10**9, b"front-run %d" % height)
        return _resign(self, block, (fresh,) + block.txs)


class Reorderer(Node):
    """Swaps the first two transactions of its blocks."""

    strategy = "reorderer"

    def make_block(self, prev_hash, height, included) -> Block:
        block = super().make_block(prev_hash, height, included)
        if len(block.txs) < 2:
            return block
        txs = list(block.txs)
        txs[0], txs[1] = txs[1], txs[0]
        return _resign(self, block, txs)


class BlockspaceCensor(Node):
    """Silently drops targeted committed transactions from its blocks."""

    strategy = "blockspace_censor"

    def __init__(self, *args, target: Callable[[int], bool] = default_target, **kw):
        super().__init__(*args, **kw)
        self.target = target

    def make_block(self, prev_hash, height, included) -> Block:
        block = super().make_block(prev_hash, height, included)
        short = self.params.short_id
        txs = [t for t in block.txs if not self.target(short(t.id))]
        if len(txs) == len(block.txs) and txs:
            # no targeted transaction pending: drop one so the deviation is observable
            txs = txs[1:]
        return _resign(self, block, txs)


STRATEGIES: Dict[str, Type[Node]] = {
    cls.strategy: cls
    for cls in (Node, NonResponder, ColludingCensor, Equivocator, MempoolCensor, Injector, Reorderer,
                BlockspaceCensor)
}

BLOCK_STRATEGIES = frozenset({"injector", "reorderer", "blockspace_censor"})
