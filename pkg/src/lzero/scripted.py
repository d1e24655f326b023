"""Hand-scripted protocol traces over a zero-latency network."""

import random
from collections import deque
from typing import Dict, List, Optional, Tuple

from lzero.blockchain import Block, Chain, inspect_block
from lzero.engine import EngineConfig, Node
from lzero.mempool import LOCAL
from lzero.params import Deployment
from lzero.txmodel import make_signer, make_transaction, sha256


class ScriptNet:
    """Zero-latency FIFO network for hand-scripted protocol traces."""

    def __init__(self, params: Deployment, names: List[str], edges, cls=None, cfg=None):
        self.now = 0.0
        self.params = params
        self.chain = Chain(params)
        self.queue = deque()
        self.timers = []
        self.events: List[tuple] = []
        adj: Dict[int, set] = {i: set() for i in range(len(names))}
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        cfg = cfg or EngineConfig()
        cls = cls or {}
        self.signers = [make_signer(params.signature_scheme, n.encode()) for n in names]
        self.nodes = [cls.get(i, Node)(i, s, params, cfg, self, sorted(adj[i]), random.Random(i))
                      for i, s in enumerate(self.signers)]
        self._by_pub = {s.public_key: i for i, s in enumerate(self.signers)}

    def send(self, src, dst, msg):
        self.queue.append((src, dst, msg))

    def timer(self, node, delay, payload):
        self.timers.append((self.now + delay, node, payload))

    def node_of(self, pub):
        return self._by_pub.get(pub)

    def pub_of(self, nid):
        return self.signers[nid].public_key

    def record(self, kind, node, **data):
        self.events.append((kind, node, data))

    def deliver(self, limit=100000):
        n = 0
        while self.queue and n < limit:
            src, dst, msg = self.queue.popleft()
            self.nodes[dst].handle(src, msg)
            n += 1
        return n

    def advance(self, dt):
        """Fire timers due within ``dt`` seconds, delivering messages after each."""
        end = self.now + dt
        while True:
            due = sorted(t for t in self.timers if t[0] <= end)
            if not due:
                break
            t = due[0]
            self.timers.remove(t)
            self.now = t[0]
            self.nodes[t[1]].on_timer(t[2])
            self.deliver()
        self.now = end


# a previous-block hash under which every bundle shuffle leaves the txs in label order
WALKTHROUGH_PREV = sha256(b"walkthrough-fixture", (7).to_bytes(4, "big"))


def three_node_walkthrough(prev_hash: bytes = WALKTHROUGH_PREV) -> Tuple[List[int], Optional[object], Block, dict]:
    """A and C reconcile with B, then B builds a block.

    B holds txs 1, 3, 4 as one local bundle, A holds 2 and C holds 5, 6.
    Returns the block's tx labels, the inspection verdict (None when valid),
    the block and a label map from short id to tx number.
    """
    params = Deployment(signature_scheme="mac")
    net = ScriptNet(params, ["A", "B", "C"], [(0, 1), (1, 2)])
    a, b, c = net.nodes
    client = make_signer("mac", b"client")
    txs = {i: make_transaction(client, i, b"tx%d" % i) for i in range(1, 7)}
    label = {params.short_id(t.id): i for i, t in txs.items()}

    # B's three local submissions arrive together and form one bundle
    b.extend([params.short_id(txs[i].id) for i in (1, 3, 4)], LOCAL)
    for i in (1, 3, 4):
        b.log.add_content(params.short_id(txs[i].id), txs[i])
    a.on_client_tx(txs[2])
    for i in (5, 6):
        c.on_client_tx(txs[i])

    a.send_request(1)
    net.deliver()
    c.send_request(1)
    net.deliver()

    block = b.make_block(prev_hash, 0, set())
    order = [label[params.short_id(t.id)] for t in block.txs]
    return order, inspect_block(block, params), block, {"net": net, "label": label}
