"""Deterministic discrete-event network simulator.

Simulated seconds throughout. A run is a pure function of its ``Config``:
every random draw comes from an RNG seeded from ``Config.seed``.
"""

import csv
import dataclasses
import heapq
import json
import random
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Set, Tuple

from lzero.adversary import BLOCK_STRATEGIES, STRATEGIES, ColludingCensor, Equivocator
from lzero.blockchain import Chain
from lzero.commitment import wire_size
from lzero.engine import EngineConfig, Node
from lzero.messages import BlockAnnouncement, MempoolHashes, TxBatch, TxRequest
from lzero.metrics import RunLog, aggregate, highest_fee_baseline
from lzero.mempool import LOCAL
from lzero.oracle_sketch import ElementRegistry
from lzero.params import Deployment
from lzero.txmodel import Transaction, make_signer, make_transaction


class ConfigError(ValueError):
    pass


class Infeasible(ValueError):
    """Topology constraints cannot be met."""


PROTOCOLS = ("lo", "flood")
SKETCH_MODES = ("oracle", "exact")


@dataclass
class Config:
    nodes: int = 200
    out_degree: int = 8
    in_cap: int = 125
    byz_fraction: float = 0.0
    byz_strategy: str = "none"
    tx_rate: float = 20.0
    tx_size: int = 250
    duration_s: float = 120.0
    drain_s: float = 10.0
    seed: int = 0
    protocol: str = "lo"
    min_fee: int = 0
    block_mean_s: float = 12.0
    sketch_capacity: int = 100
    field_bits: int = 80
    clock_cells: int = 32
    timeout_s: float = 1.0
    retries: int = 3
    sample_prob: float = 0.1
    fanout: int = 3
    sync_period_s: float = 1.0
    jitter: float = 0.05
    latency_file: Optional[str] = None
    uniform_latency_ms: Optional[float] = None
    sketch_mode: str = "oracle"
    signatures: str = "mac"
    highest_fee_cap: Optional[int] = None
    max_block_txs: Optional[int] = None
    byz_lead_at: Optional[float] = None
    workload_file: Optional[str] = None
    fee_file: Optional[str] = None
    clients: int = 64
    flood_prune: bool = False

    def validate(self) -> None:
        errs = []
        if self.nodes < 1:
            errs.append("nodes must be positive")
        if not 0.0 <= self.byz_fraction < 1.0:
            errs.append("byz_fraction must be in [0, 1)")
        if self.byz_strategy not in STRATEGIES and self.byz_strategy != "none":
            errs.append(f"unknown byz_strategy {self.byz_strategy!r}")
        if self.byz_fraction > 0 and self.byz_strategy == "none":
            errs.append("byz_fraction > 0 needs a byz_strategy")
        if self.protocol not in PROTOCOLS:
            errs.append(f"protocol must be one of {PROTOCOLS}")
        if self.sketch_mode not in SKETCH_MODES:
            errs.append(f"sketch_mode must be one of {SKETCH_MODES}")
        if self.signatures not in ("mac", "ed25519"):
            errs.append("signatures must be 'mac' or 'ed25519'")
        for name in ("tx_rate", "duration_s", "drain_s", "block_mean_s", "jitter", "min_fee"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be non-negative")
        for name in ("timeout_s", "sync_period_s", "sketch_capacity", "clock_cells", "clients"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be positive")
        if self.field_bits % 8:
            errs.append("field_bits must be a multiple of 8")
        if not 0.0 <= self.sample_prob <= 1.0:
            errs.append("sample_prob must be in [0, 1]")
        if errs:
            raise ConfigError("; ".join(errs))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "Config":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def replace(self, **changes) -> "Config":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg


# --- latency ------------------------------------------------------------------


@dataclass
class LatencyMatrix:
    cities: List[str]
    ms: List[List[float]]
    jitter: float = 0.05

    def delay_s(self, a: int, b: int, u: float) -> float:
        """One-way delay between city indices; ``u`` in [0, 1) draws the jitter."""
        return self.ms[a][b] * (1.0 + self.jitter * (2.0 * u - 1.0)) / 1000.0

    @classmethod
    def load_csv(cls, path: Optional[str] = None, jitter: float = 0.05) -> "LatencyMatrix":
        if path is None:
            text = resources.files("lzero").joinpath("data/latency_32.csv").read_text()
        else:
            with open(path) as f:
                text = f.read()
        rows = list(csv.reader(text.splitlines()))
        cities = rows[0][1:]
        ms = [[float(x) for x in r[1:]] for r in rows[1:]]
        if len(ms) != len(cities) or any(len(r) != len(cities) for r in ms):
            raise ConfigError("latency matrix must be square")
        if any(x <= 0 for r in ms for x in r):
            raise ConfigError("latency entries must be positive")
        return cls(cities, ms, jitter)

    @classmethod
    def uniform(cls, ms: float, cities: int = 1, jitter: float = 0.0) -> "LatencyMatrix":
        return cls([f"c{i}" for i in range(cities)], [[ms] * cities for _ in range(cities)], jitter)


# --- topology -----------------------------------------------------------------


@dataclass
class Topology:
    out: List[List[int]]
    city: List[int]

    @property
    def n(self) -> int:
        return len(self.out)

    def undirected(self) -> List[List[int]]:
        adj: List[Set[int]] = [set() for _ in range(self.n)]
        for i, outs in enumerate(self.out):
            for j in outs:
                adj[i].add(j)
                adj[j].add(i)
        return [sorted(a) for a in adj]

    def in_degree(self) -> List[int]:
        deg = [0] * self.n
        for outs in self.out:
            for j in outs:
                deg[j] += 1
        return deg


def connected(adj: Sequence[Sequence[int]], members: Set[int]) -> bool:
    if not members:
        return True
    start = min(members)
    seen = {start}
    stack = [start]
    while stack:
        for j in adj[stack.pop()]:
            if j in members and j not in seen:
                seen.add(j)
                stack.append(j)
    return seen == members


def build_topology(n: int, out_degree: int, in_cap: int, seed: int, cities: int = 32,
                   byzantine: Set[int] = frozenset(), attempts: int = 100) -> Topology:
    """Random out-neighbors per node, respecting the in-degree cap.

    Retries until the undirected graph of correct nodes is connected.
    """
    out_degree = min(out_degree, n - 1)
    if n * out_degree > n * in_cap:
        raise Infeasible("in-degree cap too small for the requested out-degree")
    rng = random.Random(f"lzero-topology:{seed}")
    correct = set(range(n)) - set(byzantine)
    for _ in range(attempts):
        indeg = [0] * n
        out: List[List[int]] = []
        ok = True
        for i in range(n):
            cands = [j for j in range(n) if j != i and indeg[j] < in_cap]
            if len(cands) < out_degree:
                ok = False
                break
            picked = rng.sample(cands, out_degree)
            for j in picked:
                indeg[j] += 1
            out.append(sorted(picked))
        if not ok:
            continue
        topo = Topology(out, [i % cities for i in range(n)])
        if connected(topo.undirected(), correct):
            return topo
    raise Infeasible("could not build a topology with a connected correct subgraph")


# --- workload -----------------------------------------------------------------


@dataclass(frozen=True)
class WorkloadItem:
    arrival_s: float
    fee: int
    size: int


def load_fees(path: Optional[str] = None) -> List[int]:
    if path is None:
        text = resources.files("lzero").joinpath("data/fees_sample.csv").read_text()
    else:
        with open(path) as f:
            text = f.read()
    return [int(r[0]) for r in list(csv.reader(text.splitlines()))[1:] if r]


def generate_workload(rate: float, duration_s: float, size: int, fees: Sequence[int],
                      seed: int) -> List[WorkloadItem]:
    """Poisson arrivals; fees resampled from the bundled empirical sample."""
    rng = random.Random(f"lzero-workload:{seed}")
    out: List[WorkloadItem] = []
    if rate <= 0:
        return out
    t = rng.expovariate(rate)
    while t < duration_s:
        out.append(WorkloadItem(t, rng.choice(fees), size))
        t += rng.expovariate(rate)
    return out


def save_workload(items: Sequence[WorkloadItem], path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["arrival_s", "fee", "size"])
        for it in items:
            w.writerow([repr(it.arrival_s), it.fee, it.size])


def load_workload(path: str) -> List[WorkloadItem]:
    with open(path) as f:
        rows = list(csv.DictReader(f))
    items = [WorkloadItem(float(r["arrival_s"]), int(r["fee"]), int(r["size"])) for r in rows]
    return sorted(items, key=lambda it: it.arrival_s)


# --- flood baseline -----------------------------------------------------------


@dataclass(frozen=True)
class FloodBlock:
    height: int
    creator: int
    txs: Tuple[Transaction, ...]


class FloodNode:
    """Classical mempool exchange: full hash lists each tick, bodies on request."""

    strategy = "flood"

    def __init__(self, nid: int, params: Deployment, cfg: EngineConfig, net, neighbors: Sequence[int],
                 rng: random.Random, prune: bool = False):
        self.nid = nid
        self.prune = prune
        self.params = params
        self.cfg = cfg
        self.net = net
        self.neighbors = sorted(neighbors)
        self.rng = rng
        self.known: Set[bytes] = set()
        self.mempool: Dict[bytes, Transaction] = {}
        self.requested: Set[bytes] = set()
        self.ticking = True

    def on_timer(self, payload: tuple) -> None:
        if payload[0] == "tick" and self.ticking:
            self.net.timer(self.nid, self.cfg.sync_period, ("tick",))
            self.flood_step()

    def flood_step(self) -> None:
        chosen = self.rng.sample(self.neighbors, min(self.cfg.fanout, len(self.neighbors)))
        if not chosen:
            return
        msg = MempoolHashes(frozenset(self.mempool))
        for j in chosen:
            self.net.send(self.nid, j, msg)

    def handle(self, src: int, msg: object) -> None:
        if isinstance(msg, MempoolHashes):
            unknown = msg.hashes - self.known - self.requested
            if unknown:
                self.requested |= unknown
                self.net.send(self.nid, src, TxRequest(tuple(sorted(unknown))))
        elif isinstance(msg, TxRequest):
            txs = tuple(self.mempool[h] for h in msg.hashes if h in self.mempool)
            self.net.send(self.nid, src, TxBatch(txs))
        elif isinstance(msg, TxBatch):
            for tx in msg.txs:
                self._learn(tx, src)
        elif isinstance(msg, BlockAnnouncement) and self.prune:
            for tx in msg.block.txs:
                self.mempool.pop(tx.id, None)
                self.known.add(tx.id)

    def _learn(self, tx: Transaction, via) -> None:
        self.requested.discard(tx.id)
        if tx.id in self.known:
            return
        self.known.add(tx.id)
        self.mempool[tx.id] = tx
        self.net.record("learn", self.nid, elements=[self.params.short_id(tx.id)], via=via)

    def on_client_tx(self, tx: Transaction) -> bool:
        if tx.id in self.known:
            return False
        self._learn(tx, LOCAL)
        return True

    def contents(self) -> Dict[bytes, Transaction]:
        return self.mempool


# --- simulation ---------------------------------------------------------------

_MSG, _TIMER, _TX, _BLOCK = 0, 1, 2, 3


class Simulation:
    """One scenario: topology, nodes, workload, blocks and the event loop."""

    def __init__(self, cfg: Config):
        cfg.validate()
        self.cfg = cfg
        seed = cfg.seed
        self.rng = random.Random(f"lzero-net:{seed}")
        n = cfg.nodes
        placement = random.Random(f"lzero-byz:{seed}")
        k = round(cfg.byz_fraction * n) if cfg.byz_strategy != "none" else 0
        self.byzantine = sorted(placement.sample(range(n), k)) if k else []
        self.latency = (LatencyMatrix.uniform(cfg.uniform_latency_ms, 1, cfg.jitter)
                        if cfg.uniform_latency_ms is not None
                        else LatencyMatrix.load_csv(cfg.latency_file, cfg.jitter))
        self.topology = build_topology(n, cfg.out_degree, cfg.in_cap, seed, len(self.latency.cities),
                                       set(self.byzantine))
        self.adj = self.topology.undirected()
        self.params = Deployment(
            sketch_capacity=cfg.sketch_capacity, field_bits=cfg.field_bits, clock_cells=cfg.clock_cells,
            signature_scheme=cfg.signatures, min_fee=cfg.min_fee,
            registry=ElementRegistry() if cfg.sketch_mode == "oracle" else None)
        self.chain = Chain(self.params, cfg.min_fee, cfg.max_block_txs)
        self.ecfg = EngineConfig(fanout=cfg.fanout, sync_period=cfg.sync_period_s, timeout=cfg.timeout_s,
                                 retries=cfg.retries, sample_prob=cfg.sample_prob, min_fee=cfg.min_fee,
                                 max_block_txs=cfg.max_block_txs)
        self.now = 0.0
        self._queue: list = []
        self._seq = 0
        self.signers = [make_signer(cfg.signatures, b"node-%d-%d" % (seed, i)) for i in range(n)]
        self._pub = [s.public_key for s in self.signers]
        self._nid = {p: i for i, p in enumerate(self._pub)}
        self.nodes = [self._make_node(i) for i in range(n)]
        self.correct = [i for i in range(n) if i not in set(self.byzantine)]
        self.log = RunLog(n, self.correct, {i: self.nodes[i].strategy for i in self.byzantine},
                          cfg.duration_s, cfg.duration_s + cfg.drain_s)
        self.log.analytic_commitment_bytes = wire_size(
            32, cfg.clock_cells, cfg.sketch_capacity, cfg.field_bits, 32 if cfg.signatures == "mac" else 64)
        self.log.sync_period_s = cfg.sync_period_s
        for key in ("msg_sent", "msg_delivered", "msg_undelivered", "bisections", "blocks", "disconnects"):
            self.log.counters[key] = 0
        self._hops: List[bytearray] = [bytearray() for _ in range(n)]
        self._tx_index: Dict[int, int] = {}
        self._txs: List[Transaction] = []
        self._traffic: List[Dict[str, List[int]]] = [dict() for _ in range(n)]
        self._hf_included: Set[bytes] = set()

    def _make_node(self, i: int):
        rng = random.Random(f"lzero-node:{self.cfg.seed}:{i}")
        nbrs = self.adj[i]
        if self.cfg.protocol == "flood":
            return FloodNode(i, self.params, self.ecfg, self, nbrs, rng, self.cfg.flood_prune)
        if i not in self.byzantine:
            return Node(i, self.signers[i], self.params, self.ecfg, self, nbrs, rng)
        strategy = self.cfg.byz_strategy
        if strategy == "colluding":
            if i == self.byzantine[0]:
                # the coalition's evidence source talks to everyone and equivocates
                return Equivocator(i, self.signers[i], self.params, self.ecfg, self, nbrs, rng)
            return ColludingCensor(i, self.signers[i], self.params, self.ecfg, self, nbrs, rng,
                                   coalition=frozenset(self.byzantine))
        return STRATEGIES[strategy](i, self.signers[i], self.params, self.ecfg, self, nbrs, rng)

    # --- Net interface --------------------------------------------------------

    def _push(self, t: float, kind: int, a, b=None, c=None) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (t, self._seq, kind, a, b, c))

    def send(self, src: int, dst: int, msg: object) -> None:
        delay = self.latency.delay_s(self.topology.city[src], self.topology.city[dst], self.rng.random())
        name = type(msg).__name__ if msg.control else "~" + type(msg).__name__
        slot = self._traffic[src].setdefault(name, [0, 0])
        slot[0] += 1
        if msg.control:
            slot[1] += msg.size
        self.log.counters["msg_sent"] += 1
        self._push(self.now + delay, _MSG, dst, src, msg)

    def timer(self, node: int, delay: float, payload: tuple) -> None:
        self._push(self.now + delay, _TIMER, node, payload)

    def node_of(self, pub: bytes) -> Optional[int]:
        return self._nid.get(pub)

    def pub_of(self, nid: int) -> bytes:
        return self._pub[nid]

    def record(self, event: str, node: int, **data) -> None:
        if event == "learn":
            via = data["via"]
            hops = self._hops
            for e in data["elements"]:
                idx = self._tx_index.get(e)
                if idx is None:
                    continue
                if via == LOCAL:
                    hop = 0
                else:
                    src = hops[via]
                    hop = min(254, src[idx] + 1) if idx < len(src) else 255
                mine = hops[node]
                if len(mine) <= idx:
                    mine.extend(b"\xff" * (idx + 1 - len(mine)))
                mine[idx] = hop
                log = self.log
                log.learn_tx.append(idx)
                log.learn_node.append(node)
                log.learn_time.append(self.now)
                log.learn_hop.append(hop)
        elif event in ("expose", "suspect", "retract", "strike"):
            self.log.blame.append([self.now, event, node, data["target"]])
        elif event == "bisect":
            self.log.counters["bisections"] += 1
        elif event == "disconnect":
            self.log.counters["disconnects"] += 1

    # --- scenario -------------------------------------------------------------

    def _workload(self) -> List[WorkloadItem]:
        cfg = self.cfg
        if cfg.workload_file:
            return [w for w in load_workload(cfg.workload_file) if w.arrival_s < cfg.duration_s]
        return generate_workload(cfg.tx_rate, cfg.duration_s, cfg.tx_size, load_fees(cfg.fee_file), cfg.seed)

    def _schedule(self) -> None:
        cfg = self.cfg
        rng = random.Random(f"lzero-schedule:{cfg.seed}")
        clients = [make_signer(cfg.signatures, b"client-%d-%d" % (cfg.seed, c)) for c in range(cfg.clients)]
        for i in range(cfg.nodes):
            self._push(rng.random() * cfg.sync_period_s, _TIMER, i, ("tick",))
        for k, w in enumerate(self._workload()):
            client = clients[rng.randrange(len(clients))]
            payload = rng.getrandbits(8 * w.size).to_bytes(w.size, "big") if w.size else b""
            tx = make_transaction(client, w.fee, payload)
            origin = rng.randrange(cfg.nodes)
            self._push(w.arrival_s, _TX, origin, tx)
        if cfg.block_mean_s > 0:
            t = rng.expovariate(1.0 / cfg.block_mean_s)
            while t < cfg.duration_s:
                self._push(t, _BLOCK, rng.randrange(cfg.nodes))
                t += rng.expovariate(1.0 / cfg.block_mean_s)
            if cfg.byz_lead_at is not None:
                # extra blocks so every byzantine node builds one, spaced by the mean block time
                for k, b in enumerate(self.byzantine):
                    at = cfg.byz_lead_at + k * cfg.block_mean_s
                    if at < cfg.duration_s:
                        self._push(at, _BLOCK, b)

    def _on_tx(self, origin: int, tx: Transaction) -> None:
        e = self.params.short_id(tx.id)
        if e in self._tx_index:
            return
        self._tx_index[e] = len(self._txs)
        self._txs.append(tx)
        self.log.tx_time.append(self.now)
        self.log.tx_fee.append(tx.fee)
        self.nodes[origin].on_client_tx(tx)

    def _on_block(self, leader: int) -> None:
        node = self.nodes[leader]
        height = self.chain.height
        if isinstance(node, FloodNode):
            on_chain = self.chain.height_of
            short = self.params.short_id
            txs = tuple(t for t in node.mempool.values() if short(t.id) not in on_chain)
            for t in txs:
                on_chain[short(t.id)] = height
            block = FloodBlock(height, leader, txs)
            self.chain.blocks.append(block)
            self.chain.times.append(self.now)
            snapshot = node.mempool.values()
        else:
            block = node.make_block(self.chain.head_hash, height, self.chain.included_before(height))
            self.chain.append(block, self.now)
            txs = block.txs
            snapshot = node.log.contents.values()
        for tx in txs:
            idx = self._tx_index.get(self.params.short_id(tx.id))
            if idx is not None and idx not in self.log.natural_incl:
                self.log.natural_incl[idx] = self.now
        cap = self.cfg.highest_fee_cap
        if cap is None:
            cap = round(self.cfg.tx_rate * self.cfg.block_mean_s)
        for tx in highest_fee_baseline((t for t in snapshot if t.id not in self._hf_included), cap):
            self._hf_included.add(tx.id)
            idx = self._tx_index.get(self.params.short_id(tx.id))
            if idx is not None:
                self.log.highest_fee_incl.setdefault(idx, self.now)
        self.log.counters["blocks"] += 1
        msg = BlockAnnouncement(block)
        for j in range(self.cfg.nodes):
            if j != leader:
                self.send(leader, j, msg)

    def run(self) -> dict:
        """Execute the scenario; returns the aggregated report."""
        cfg = self.cfg
        end = cfg.duration_s + cfg.drain_s
        if cfg.duration_s <= 0:
            end = 0.0
        else:
            self._schedule()
        stop_ticks = cfg.duration_s
        queue = self._queue
        nodes = self.nodes
        delivered = 0
        while queue and queue[0][0] <= end:
            t, _, kind, a, b, c = heapq.heappop(queue)
            self.now = t
            if kind == _MSG:
                delivered += 1
                nodes[a].handle(b, c)
            elif kind == _TIMER:
                if b[0] == "tick" and t >= stop_ticks:
                    continue
                nodes[a].on_timer(b)
            elif kind == _TX:
                self._on_tx(a, b)
            elif kind == _BLOCK:
                self._on_block(a)
        self.now = max(self.now, end)
        self.log.counters["msg_delivered"] = delivered
        self.log.counters["msg_undelivered"] = sum(1 for ev in queue if ev[2] == _MSG)
        self.log.counters["reconciliations"] = sum(
            v[0] for i in self.correct for k, v in self._traffic[i].items()
            if k in ("CommitPromise", "CommitCurrent"))
        for i, tr in enumerate(self._traffic):
            self.log.traffic[str(i)] = {k: list(v) for k, v in sorted(tr.items())}
        if cfg.protocol == "lo":
            for i in range(cfg.nodes):
                nd = nodes[i]
                self.log.storage[i] = [len(nd.head.encode())] + [
                    len(c.encode()) for _, c in sorted(nd.views.items())]
            for i in self.correct:
                nodes[i].log.check_invariants()
        return aggregate(self.log)


def run(cfg: Config) -> dict:
    """Run one scenario and return its metrics report."""
    return Simulation(cfg).run()
