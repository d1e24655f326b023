"""Per-node protocol state machine: reconciliation, suspicion and exposure.

A node only talks to the outside world through a ``Net`` object: it sends
messages, arms timers and reports observations for metrics. All behaviour
is a deterministic function of the events delivered and the node's RNG.
"""

import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Protocol, Sequence, Set

from lzero.blockchain import Block, UnresolvableCommitRef, build_block, verify_block_evidence
from lzero.bloomclock import clock_consistent
from lzero.commitment import (Commitment, EvidenceKind, ExposureEvidence, commit_extend,
                              check_chain_consistency, verify_commitment, verify_commitment_evidence)
from lzero.mempool import LOCAL, MempoolLog
from lzero.messages import (BlockAnnouncement, CommitCurrent, CommitForward, CommitPromise,
                            CommitRequest, CommitmentSample, ExposureGossip, SketchReply,
                            SketchRequest, SuspicionGossip, SuspicionRetraction, TxBatch)
from lzero.params import Deployment
from lzero.sketch import SketchError
from lzero.txmodel import Signer, Transaction, prevalidate

_MEMO_LIMIT = 400_000


class Net(Protocol):
    now: float
    chain: object

    def send(self, src: int, dst: int, msg: object) -> None: ...

    def timer(self, node: int, delay: float, payload: tuple) -> None: ...

    def node_of(self, pub: bytes) -> Optional[int]: ...

    def pub_of(self, nid: int) -> bytes: ...

    def record(self, event: str, node: int, **data) -> None: ...


@dataclass
class EngineConfig:
    fanout: int = 3
    sync_period: float = 1.0
    timeout: float = 1.0
    retries: int = 3
    sample_prob: float = 0.1
    sample_size: int = 4
    max_strikes: int = 3
    min_fee: int = 0
    max_block_txs: Optional[int] = None


@dataclass
class Pending:
    request: Commitment
    token: int
    attempts: int = 0
    expired: bool = False
    # issued because of someone else's suspicion gossip
    follow_up: bool = False


@dataclass
class Suspicion:
    since: float
    request: Commitment
    last: Optional[Commitment]


@dataclass
class Bisection:
    requester: int
    request: Commitment
    max_depth: int
    outstanding: Set[tuple] = field(default_factory=set)
    found: Set[int] = field(default_factory=set)


def covers(c: Commitment, r: Commitment, params: Deployment) -> Optional[bool]:
    """Whether ``c``'s set contains ``r``'s set; None when the sketch cannot tell.

    With D the decoded symmetric difference, |r \\ c| = (|D| - (|c| - |r|)) / 2.
    """
    if r.tx_count == 0 or c.hash == r.hash:
        return True
    if c.tx_count < r.tx_count:
        return False
    if c.tx_count == r.tx_count:
        return c.checksum == r.checksum
    if not clock_consistent(r.clock, c.clock):
        return False
    n = c.sketch.merge(r.sketch).decoded_size()
    if n is None:
        return None
    return n == c.tx_count - r.tx_count


class Node:
    """Honest participant. Adversaries subclass and override the hooks."""

    strategy = "honest"

    def __init__(self, nid: int, signer: Signer, params: Deployment, cfg: EngineConfig, net: Net,
                 neighbors: Sequence[int], rng: random.Random):
        self.nid = nid
        self.signer = signer
        self.pub = signer.public_key
        self.params = params
        self.cfg = cfg
        self.net = net
        self.neighbors = sorted(neighbors)
        self.rng = rng
        self.log = MempoolLog()
        self.head = commit_extend(None, [], signer, params)
        self.views: Dict[int, Commitment] = {}
        self.pending: Dict[int, Pending] = {}
        self.sent_to: Dict[int, Deque[bytes]] = {}
        self.suspected: Dict[int, Suspicion] = {}
        self.exposed: Dict[int, ExposureEvidence] = {}
        self.strikes: Counter = Counter()
        self.disconnected: Set[int] = set()
        self.bisections: Dict[bytes, Bisection] = {}
        self.relayed: Set[tuple] = set()
        self.ticking = True
        self._token = 0

    # --- plumbing ---------------------------------------------------------

    def send(self, dst: int, msg: object) -> None:
        self.net.send(self.nid, dst, msg)

    def gossip(self, msg: object, exclude: Optional[int] = None) -> None:
        for j in self.neighbors:
            if j != exclude and j not in self.disconnected:
                self.send(j, msg)

    def verified(self, c: Commitment) -> bool:
        memo = self.params.memo
        key = ("v", c.hash)
        ok = memo.get(key)
        if ok is None:
            if len(memo) > _MEMO_LIMIT:
                memo.clear()
            ok = memo[key] = bool(verify_commitment(c, self.params))
        return ok

    def strike(self, j: int, reason: str) -> None:
        self.strikes[j] += 1
        self.net.record("strike", self.nid, target=j, reason=reason)
        if self.strikes[j] >= self.cfg.max_strikes and j not in self.disconnected:
            self.disconnected.add(j)
            self.net.record("disconnect", self.nid, target=j)

    def head_for(self, peer: int) -> Commitment:
        return self.head

    def responds_to(self, peer: int) -> bool:
        return True

    def handle(self, src: int, msg: object) -> None:
        if src in self.disconnected:
            return
        getattr(self, _HANDLERS[type(msg)])(src, msg)

    def on_timer(self, payload: tuple) -> None:
        if payload[0] == "tick":
            self.on_tick()
        elif payload[0] == "req":
            self.on_timeout(payload[1], payload[2])

    # --- stage I ----------------------------------------------------------

    def on_client_tx(self, tx: Transaction) -> bool:
        """Initial sharing: prevalidate and commit a transaction received from a client."""
        if not prevalidate(tx, 0, self.params.max_payload, self.params.signature_scheme).ok:
            return False
        e = self.params.short_id(tx.id)
        if e in self.log.known:
            self.log.add_content(e, tx)
            return False
        self.extend([e], LOCAL)
        self.log.add_content(e, tx)
        return True

    def extend(self, elements: Iterable[int], source: object) -> None:
        """Commit new elements, one bundle per sketch-capacity chunk."""
        fresh = sorted(set(elements) - self.log.known)
        cap = self.params.sketch_capacity
        for i in range(0, len(fresh), cap):
            chunk = fresh[i:i + cap]
            self.head = commit_extend(self.head, chunk, self.signer, self.params)
            self.log.append_bundle(chunk, source, self.head.seq)
            self.net.record("learn", self.nid, elements=chunk, via=source)

    # --- sync (requester side) --------------------------------------------

    def sync_candidates(self) -> List[int]:
        return [j for j in self.neighbors if j not in self.disconnected]

    def on_tick(self) -> None:
        if not self.ticking:
            return
        self.net.timer(self.nid, self.cfg.sync_period, ("tick",))
        cands = self.sync_candidates()
        chosen = self.rng.sample(cands, min(self.cfg.fanout, len(cands)))
        for j in chosen:
            if j in self.pending:
                continue
            seen = self.views.get(j)
            if seen is not None and covers(seen, self.head_for(j), self.params) is True:
                continue
            self.send_request(j)
        if chosen and self.rng.random() < self.cfg.sample_prob:
            heads = [self.views[n] for n in self.neighbors if n in self.views]
            if heads:
                picked = self.rng.sample(heads, min(self.cfg.sample_size, len(heads)))
                msg = CommitmentSample(tuple(picked))
                for j in chosen:
                    self.send(j, msg)

    def send_request(self, j: int, follow_up: bool = False) -> None:
        self._token += 1
        req = self.head_for(j)
        self.pending[j] = Pending(req, self._token, follow_up=follow_up)
        self.sent_to.setdefault(j, deque(maxlen=64)).append(req.hash)
        self.send(j, CommitRequest(req))
        self.net.timer(self.nid, self.cfg.timeout, ("req", j, self._token))

    def on_timeout(self, j: int, token: int) -> None:
        p = self.pending.get(j)
        if p is None or p.token != token or p.expired:
            return
        if p.attempts < self.cfg.retries:
            p.attempts += 1
            self.send(j, CommitRequest(p.request))
            self.net.timer(self.nid, self.cfg.timeout, ("req", j, token))
        else:
            p.expired = True
            # a follow-up suspicion repeats an accusation the network already has
            self.suspect(j, p.request, broadcast=not p.follow_up)

    def suspect(self, j: int, request: Commitment, broadcast: bool = True) -> None:
        """``request`` is this node's own commitment that ``j`` left unanswered."""
        if j in self.suspected or j in self.exposed:
            return
        last = self.views.get(j)
        self.suspected[j] = Suspicion(self.net.now, request, last)
        self.net.record("suspect", self.nid, target=j)
        if not broadcast:
            return
        msg = SuspicionGossip(self.net.pub_of(j), self.pub, request, last)
        self.relayed.add(("s", msg.target, request.hash))
        self.gossip(msg)

    def resolve(self, j: int, answer: Commitment) -> None:
        self.pending.pop(j, None)
        if j in self.suspected:
            del self.suspected[j]
            self.net.record("retract", self.nid, target=j)
            msg = SuspicionRetraction(self.net.pub_of(j), answer)
            self.relayed.add(("r", answer.hash))
            self.gossip(msg)

    def _answer_for(self, src: int, req_hash: bytes, c: Commitment) -> Optional[Pending]:
        """Common checks for a promise or current reply; returns the pending entry it answers."""
        if c.author != self.net.pub_of(src) or not self.verified(c):
            self.strike(src, "bad-commitment")
            return None
        if req_hash not in self.sent_to.get(src, ()):
            self.strike(src, "unknown-request")
            return None
        self.observe(c)
        p = self.pending.get(src)
        if p is None or p.request.hash != req_hash:
            return None
        if covers(c, p.request, self.params) is False:
            self.strike(src, "uncovered-reply")
            return None
        return p

    def on_promise(self, src: int, msg: CommitPromise) -> None:
        p = self._answer_for(src, msg.req_hash, msg.commitment)
        if msg.req_hash in self.sent_to.get(src, ()):
            contents = self.log.contents
            self.send(src, TxBatch(tuple(contents[e] for e in msg.wanted if e in contents)))
        if p is not None:
            self.resolve(src, msg.commitment)

    def on_current(self, src: int, msg: CommitCurrent) -> None:
        if self._answer_for(src, msg.req_hash, msg.commitment) is not None:
            self.resolve(src, msg.commitment)

    def on_tx_batch(self, src: int, msg: TxBatch) -> None:
        for tx in msg.txs:
            e = self.params.short_id(tx.id)
            if self.log.add_content(e, tx):
                self.net.record("content", self.nid, element=e)

    # --- sync (responder side) --------------------------------------------

    def on_request(self, src: int, msg: CommitRequest) -> None:
        c = msg.commitment
        if c.author != self.net.pub_of(src) or not self.verified(c):
            self.strike(src, "bad-commitment")
            return
        self.observe(c)
        if not self.responds_to(src) or c.hash in self.bisections:
            return
        diff = self.head_for(src).sketch.merge(c.sketch).decode()
        if diff is None:
            self.start_bisection(src, c)
        else:
            self.finish_request(src, c, {e for e in diff if e not in self.log.known})

    def finish_request(self, src: int, c: Commitment, delta: Set[int]) -> None:
        if delta:
            self.extend(delta, src)
            self.send(src, CommitPromise(c.hash, self.head_for(src), tuple(sorted(delta))))
        else:
            self.send(src, CommitCurrent(c.hash, self.head_for(src)))

    def _partition(self, depth: int, prefix: int) -> List[int]:
        keep = self.params.partition_filter(depth, prefix)
        return [e for e in self.log.known if keep(e)]

    def start_bisection(self, src: int, c: Commitment) -> None:
        size = len(self.log.known) + c.tx_count
        b = Bisection(src, c, max_depth=math.ceil(math.log2(max(size, 2))) + 1)
        b.outstanding = {(1, 0), (1, 1)}
        self.bisections[c.hash] = b
        self.net.record("bisect", self.nid, depth=1)
        self.send(src, SketchRequest(c.hash, 1, (0, 1)))

    def on_sketch_request(self, src: int, msg: SketchRequest) -> None:
        if msg.req_hash not in self.sent_to.get(src, ()):
            self.strike(src, "unknown-request")
            return
        sketches = tuple((p, self.params.sketch_of(self._partition(msg.depth, p))) for p in msg.prefixes)
        self.send(src, SketchReply(msg.req_hash, msg.depth, sketches))

    def on_sketch_reply(self, src: int, msg: SketchReply) -> None:
        b = self.bisections.get(msg.req_hash)
        if b is None or b.requester != src:
            self.strike(src, "unknown-bisection")
            return
        retry = []
        for prefix, theirs in msg.sketches:
            key = (msg.depth, prefix)
            if key not in b.outstanding:
                self.strike(src, "unrequested-partition")
                continue
            b.outstanding.discard(key)
            try:
                diff = theirs.merge(self.params.sketch_of(self._partition(msg.depth, prefix))).decode()
            except SketchError:
                diff = None
            keep = self.params.partition_filter(msg.depth, prefix)
            if diff is not None and not all(keep(e) for e in diff):
                diff = None
            if diff is None:
                retry.append(prefix)
            else:
                b.found.update(e for e in diff if e not in self.log.known)
        if retry:
            depth = msg.depth + 1
            if depth > b.max_depth:
                del self.bisections[msg.req_hash]
                self.strike(src, "bisection-depth")
                self.suspect(src, self.head_for(src))
                return
            children = tuple(q for p in retry for q in (2 * p, 2 * p + 1))
            b.outstanding.update((depth, q) for q in children)
            self.net.record("bisect", self.nid, depth=depth)
            self.send(src, SketchRequest(msg.req_hash, depth, children))
        if not b.outstanding:
            del self.bisections[msg.req_hash]
            self.finish_request(src, b.request, b.found - self.log.known)

    # --- commitments from anywhere ------------------------------------------

    def observe(self, c: Commitment) -> bool:
        """Record a verified commitment; True when it became the stored view of its author."""
        a = self.net.node_of(c.author)
        if a is None or a == self.nid:
            return False
        prev = self.views.get(a)
        if prev is not None:
            if prev.hash == c.hash:
                return False
            ev = check_chain_consistency(prev, c, self.params)
            if ev is not None:
                self.expose(a, ev)
                return False
            if c.seq <= prev.seq:
                return False
        self.views[a] = c
        p = self.pending.get(a)
        if p is not None and a not in self.suspected and covers(c, p.request, self.params) is True:
            # only the target's own answer retracts a suspicion
            self.resolve(a, c)
        return True

    def expose(self, a: int, ev: ExposureEvidence) -> None:
        if a in self.exposed or a == self.nid:
            return
        self.exposed[a] = ev
        self.suspected.pop(a, None)
        self.net.record("expose", self.nid, target=a, evidence=ev.kind.value)
        self.gossip(ExposureGossip(ev))

    def on_sample(self, src: int, msg: CommitmentSample) -> None:
        for c in msg.samples:
            if self.verified(c):
                self.observe(c)
            else:
                self.strike(src, "bad-sample")

    def on_forward(self, src: int, msg: CommitForward) -> None:
        if self.verified(msg.commitment):
            self.observe(msg.commitment)
        else:
            self.strike(src, "bad-forward")

    # --- blame gossip -------------------------------------------------------

    def on_suspicion(self, src: int, msg: SuspicionGossip) -> None:
        t, s = self.net.node_of(msg.target), self.net.node_of(msg.suspecter)
        key = ("s", msg.target, msg.request.hash)
        if t is None or s is None or key in self.relayed or t in self.exposed:
            return
        if (msg.request.author != msg.suspecter or not self.verified(msg.request)
                or (msg.last is not None and (msg.last.author != msg.target or not self.verified(msg.last)))):
            self.strike(src, "bad-suspicion")
            return
        self.relayed.add(key)
        self.gossip(msg, exclude=src)
        if t == self.nid:
            # answer the unanswered request publicly
            if self.responds_to(s):
                self.on_request(s, CommitRequest(msg.request))
            return
        if msg.last is not None:
            self.observe(msg.last)
        if t in self.exposed:
            return
        seen = self.views.get(t)
        if seen is not None and covers(seen, msg.request, self.params) is True:
            self.send(s, CommitForward(seen))
        elif t not in self.pending and t not in self.suspected:
            self.send_request(t, follow_up=True)

    def on_retraction(self, src: int, msg: SuspicionRetraction) -> None:
        key = ("r", msg.proof.hash)
        if key in self.relayed:
            return
        if msg.proof.author != msg.target or not self.verified(msg.proof):
            self.strike(src, "bad-retraction")
            return
        self.relayed.add(key)
        self.observe(msg.proof)
        self.gossip(msg, exclude=src)

    def on_exposure(self, src: int, msg: ExposureGossip) -> None:
        ev = msg.evidence
        a = self.net.node_of(ev.accused)
        if a is None or a in self.exposed or a == self.nid:
            return
        if self.verify_evidence(ev):
            self.expose(a, ev)
        else:
            self.strike(src, "bad-evidence")

    def verify_evidence(self, ev: ExposureEvidence) -> bool:
        key = ("e", id(ev))
        memo = self.params.memo
        if key in memo and memo[key][0] is ev:
            return memo[key][1]
        if ev.kind is EvidenceKind.EQUIVOCATION:
            ok = verify_commitment_evidence(ev, self.params)
        else:
            block = ev.items[0]
            ok = isinstance(block, Block) and verify_block_evidence(
                ev, self.params, self.net.chain.included_before(block.height),
                min_fee=self.cfg.min_fee, max_txs=self.cfg.max_block_txs)
        memo[key] = (ev, ok)
        return ok

    # --- blocks -------------------------------------------------------------

    def make_block(self, prev_hash: bytes, height: int, included) -> Block:
        return build_block(self.log, self.head, prev_hash, height, self.signer, self.params,
                           included, self.cfg.min_fee, self.cfg.max_block_txs)

    def on_block(self, src: int, msg: BlockAnnouncement) -> None:
        block = msg.block
        a = self.net.node_of(block.creator)
        if a is None or a == self.nid:
            return
        verdict = self.net.chain.verdict(block)
        if isinstance(verdict, UnresolvableCommitRef):
            self.suspect(a, self.head, broadcast=False)
            return
        self.observe(block.commit_ref)
        if verdict is not None:
            self.expose(a, verdict)


_HANDLERS = {
    CommitRequest: "on_request",
    CommitPromise: "on_promise",
    CommitCurrent: "on_current",
    SketchRequest: "on_sketch_request",
    SketchReply: "on_sketch_reply",
    TxBatch: "on_tx_batch",
    SuspicionGossip: "on_suspicion",
    SuspicionRetraction: "on_retraction",
    CommitForward: "on_forward",
    ExposureGossip: "on_exposure",
    CommitmentSample: "on_sample",
    BlockAnnouncement: "on_block",
}
