import random

from lzero.adversary import Equivocator, NonResponder
from lzero.commitment import commit_extend
from lzero.engine import EngineConfig, Node
from lzero.messages import CommitRequest, SketchReply, SuspicionGossip
from lzero.params import Deployment
from lzero.sketch import Sketch
from lzero.txmodel import make_signer, make_transaction

from lzero.scripted import ScriptNet

MAC = Deployment(signature_scheme="mac")
CLIENT = make_signer("mac", b"client")


def tx(i):
    return make_transaction(CLIENT, 1, b"tx-%d" % i)


def kinds(net, kind):
    return [(n, d) for k, n, d in net.events if k == kind]


class Mute(Node):
    speak = False

    def responds_to(self, peer):
        return self.speak


def test_unanswered_request_suspected_after_retries():
    net = ScriptNet(MAC, ["a", "b"], [(0, 1)], cls={1: NonResponder})
    a = net.nodes[0]
    a.on_client_tx(tx(1))
    a.send_request(1)
    net.deliver()
    net.advance(3.99)
    assert not kinds(net, "suspect")
    net.advance(0.02)
    assert kinds(net, "suspect") == [(0, {"target": 1})]
    assert 1 in a.suspected and net.now >= 4.0


def test_answer_before_expiry_clears_pending():
    net = ScriptNet(MAC, ["a", "b"], [(0, 1)], cls={1: Mute})
    a, b = net.nodes
    a.on_client_tx(tx(1))
    a.send_request(1)
    net.deliver()
    net.advance(2.5)
    b.speak = True
    b.on_request(0, CommitRequest(a.pending[1].request))
    net.deliver()
    net.advance(10)
    assert 1 not in a.pending and not kinds(net, "suspect")
    assert b.log.known == a.log.known


def test_late_answer_retracts():
    net = ScriptNet(MAC, ["a", "b", "c"], [(0, 1), (0, 2)], cls={1: Mute})
    a, b, c = net.nodes
    a.on_client_tx(tx(1))
    a.send_request(1)
    net.deliver()
    net.advance(4.5)
    assert 1 in a.suspected
    b.speak = True
    b.on_request(0, CommitRequest(a.suspected[1].request))
    net.deliver()
    assert 1 not in a.suspected
    assert kinds(net, "retract") == [(0, {"target": 1})]
    assert 1 not in c.suspected


def test_gossip_branch_forward():
    # c already holds b's commitment covering a's request and forwards it
    net = ScriptNet(MAC, ["a", "b", "c"], [(0, 1), (0, 2), (1, 2)])
    a, b, c = net.nodes
    b.on_client_tx(tx(1))
    a.extend(b.log.known, 1)
    c.observe(b.head)
    msg = SuspicionGossip(b.pub, a.pub, a.head, None)
    c.on_suspicion(0, msg)
    sent = [m for s, d, m in net.queue if s == 2 and d == 0]
    assert any(type(m).__name__ == "CommitForward" and m.commitment.hash == b.head.hash for m in sent)


def test_gossip_branch_own_request():
    net = ScriptNet(MAC, ["a", "b", "c"], [(0, 1), (0, 2), (1, 2)])
    a, b, c = net.nodes
    a.on_client_tx(tx(1))
    c.on_suspicion(0, SuspicionGossip(b.pub, a.pub, a.head, None))
    assert 1 in c.pending and c.pending[1].follow_up


def test_gossip_branch_exposure():
    net = ScriptNet(MAC, ["a", "b", "c"], [(0, 1), (0, 2), (1, 2)])
    a, b, c = net.nodes
    base = b.head
    fork1 = commit_extend(base, [11], b.signer, MAC)
    fork2 = commit_extend(base, [12], b.signer, MAC)
    c.observe(fork1)
    c.on_suspicion(0, SuspicionGossip(b.pub, a.pub, a.head, fork2))
    assert 1 in c.exposed
    assert kinds(net, "expose") == [(2, {"target": 1, "evidence": "equivocation"})]


def test_equivocator_exposed_through_samples():
    net = ScriptNet(MAC, ["a", "e", "c", "d"], [(0, 1), (1, 2), (1, 3), (0, 2), (0, 3), (2, 3)],
                    cls={1: Equivocator})
    e = net.nodes[1]
    for i in range(1, 4):
        e.on_client_tx(tx(i))
    alt = e.alt_head
    assert alt.hash != e.head.hash
    net.nodes[0].observe(e.head)
    net.nodes[0].observe(alt)
    net.deliver()
    assert all(1 in net.nodes[i].exposed for i in (0, 2, 3))


def test_bisection_recovers_large_difference():
    params = Deployment(signature_scheme="mac", sketch_capacity=8)
    net = ScriptNet(params, ["a", "b"], [(0, 1)])
    a, b = net.nodes
    for i in range(30):
        a.on_client_tx(tx(i))
    a.send_request(1)
    net.deliver()
    assert kinds(net, "bisect")
    assert b.log.known == a.log.known
    assert not kinds(net, "strike") and not kinds(net, "suspect")


class Garbage(Node):
    def on_sketch_request(self, src, msg):
        rng = random.Random(msg.depth)
        bad = tuple((p, Sketch.deserialize(rng.randbytes(80), 8)) for p in msg.prefixes)
        self.send(src, SketchReply(msg.req_hash, msg.depth, bad))


def test_garbage_sketches_end_in_suspicion():
    params = Deployment(signature_scheme="mac", sketch_capacity=8)
    net = ScriptNet(params, ["a", "b"], [(0, 1)], cls={0: Garbage})
    a, b = net.nodes
    for i in range(30):
        a.on_client_tx(tx(i))
    a.send_request(1)
    net.deliver()
    depths = [d["depth"] for n, d in kinds(net, "bisect")]
    assert max(depths) <= 7
    assert (1, {"target": 0}) in kinds(net, "suspect")


def test_three_strikes_disconnect():
    net = ScriptNet(MAC, ["a", "b"], [(0, 1)], cfg=EngineConfig())
    a = net.nodes[0]
    for _ in range(3):
        a.strike(1, "test")
    assert 1 in a.disconnected
    assert kinds(net, "disconnect") == [(0, {"target": 1})]
