"""Acceptance suite: one function per criterion, each returning a ``Result``.

Simulation runs are cached on a ``Suite`` so criteria that read the same
scenario (honest 200-node runs feed discovery, storage and determinism)
execute it once.
"""

import gc
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from lzero.bloomclock import BloomClock
from lzero.blockchain import _sign_block, build_block, inspect_block
from lzero.commitment import EvidenceKind, commit_extend, wire_size
from lzero.mempool import LOCAL, MempoolLog
from lzero.metrics import report_json
from lzero.params import Deployment
from lzero.scripted import three_node_walkthrough
from lzero.simnet import Config, Simulation
from lzero.sketch import Sketch
from lzero.txmodel import make_signer, make_transaction, sha256


DETECTION_STRATEGIES = ("equivocator", "injector", "reorderer", "blockspace_censor", "mempool_censor",
                        "nonresponder")


@dataclass
class Result:
    number: int
    name: str
    passed: bool
    detail: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items() if not isinstance(v, (list, dict)))
        return f"[{mark}] criterion {self.number:2d} {self.name}: {info} ({self.seconds:.1f}s)"


def _fmt(v: object) -> str:
    return f"{v:.4g}" if isinstance(v, float) else str(v)


@dataclass(frozen=True)
class Outcome:
    """Which byzantine nodes every correct node ends up blaming."""

    byzantine: Tuple[int, ...]
    exposed_by_all: frozenset
    blamed_by_all: frozenset  # exposed or still suspected

    @classmethod
    def of(cls, sim: Simulation) -> "Outcome":
        correct = [sim.nodes[i] for i in sim.correct]
        exposed = frozenset(b for b in sim.byzantine if all(b in n.exposed for n in correct))
        blamed = frozenset(b for b in sim.byzantine
                           if all(b in n.exposed or b in n.suspected for n in correct))
        return cls(tuple(sim.byzantine), exposed, blamed)


@dataclass
class Suite:
    """Scenario sizes and a cache of finished runs."""

    honest_runs: int = 50
    honest_nodes: int = 200
    honest_duration_s: float = 120.0
    detection_seeds: int = 10
    detection_nodes: int = 200
    detection_duration_s: float = 60.0
    collusion_fractions: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    collusion_duration_s: float = 60.0
    bandwidth_duration_s: float = 600.0
    discovery_large_nodes: int = 1000
    discovery_large_duration_s: float = 60.0
    ordering_seeds: int = 10
    ordering_nodes: int = 100
    ordering_duration_s: float = 120.0
    sketch_pairs: Tuple[Tuple[int, int], ...] = ((8, 9000), (100, 1000))
    roundtrip_logs: int = 1000
    _cache: Dict[str, Tuple[dict, "Outcome"]] = field(default_factory=dict, repr=False)

    @classmethod
    def quick(cls) -> "Suite":
        """Reduced sizes for smoke testing; not the acceptance tolerances."""
        return cls(honest_runs=2, honest_nodes=60, honest_duration_s=40.0, detection_seeds=1,
                   detection_nodes=60, detection_duration_s=40.0, collusion_fractions=(0.1, 0.3),
                   collusion_duration_s=40.0, bandwidth_duration_s=60.0, discovery_large_nodes=200,
                   discovery_large_duration_s=30.0, ordering_seeds=2, ordering_nodes=60,
                   ordering_duration_s=60.0, sketch_pairs=((8, 200), (100, 20)), roundtrip_logs=50)

    def run(self, cfg: Config) -> Tuple[dict, "Outcome"]:
        """Report and final blame state; simulations themselves are not kept."""
        key = report_json(cfg.to_dict())
        if key not in self._cache:
            sim = Simulation(cfg)
            rep = sim.run()
            self._cache[key] = (rep, Outcome.of(sim))
            del sim
            gc.collect()
        return self._cache[key]

    def honest_config(self, seed: int) -> Config:
        return Config(nodes=self.honest_nodes, tx_rate=20.0, duration_s=self.honest_duration_s, seed=seed)

    def detection_config(self, strategy: str, seed: int) -> Config:
        return Config(nodes=self.detection_nodes, tx_rate=20.0, duration_s=self.detection_duration_s, seed=seed,
                      byz_fraction=0.02, byz_strategy=strategy, byz_lead_at=5.0)


# --- 1, 2: sketch and clock ---------------------------------------------------


def _random_pair(rng: random.Random, c: int, bits: int = 80):
    d = rng.randint(0, c)
    base = set()
    for _ in range(rng.randint(0, 16)):
        base.add(rng.getrandbits(bits) or 1)
    diff = set()
    while len(diff) < d:
        e = rng.getrandbits(bits)
        if e and e not in base:
            diff.add(e)
    diff = sorted(diff)
    rng.shuffle(diff)
    k = rng.randint(0, d)
    return base | set(diff[:k]), base | set(diff[k:])


def sketch_equivalence(suite: Suite) -> Result:
    rng = random.Random("acceptance-sketch")
    failures = 0
    pairs = 0
    for c, n in suite.sketch_pairs:
        for _ in range(n):
            a, b = _random_pair(rng, c)
            merged = Sketch.from_elements(sorted(a), c).merge(Sketch.from_elements(sorted(b), c))
            failures += merged.decode() != a ^ b
            pairs += 1
    return Result(1, "sketch oracle equivalence", failures == 0,
                  {"pairs": pairs, "capacities": [c for c, _ in suite.sketch_pairs], "failures": failures})


def wire_sizes(suite: Suite) -> Result:
    clock = len(BloomClock.empty(32).serialize())
    sketch = len(Sketch(100, 80).serialize())
    return Result(2, "wire sizes", clock == 68 and sketch == 1000, {"bloom_clock_bytes": clock, "sketch_bytes": sketch})


# --- 3, 4, 5: accountability ---------------------------------------------------


def honest_accuracy(suite: Suite) -> Result:
    exposures = persistent = strikes = 0
    for seed in range(suite.honest_runs):
        rep, _ = suite.run(suite.honest_config(seed))
        acc = rep["accountability"]
        exposures += acc["false_exposures"]
        persistent += acc["persistent_suspicions_of_correct"]
        strikes += acc["strikes_against_correct"]
    return Result(3, "honest runs raise no blame", exposures == 0 and persistent == 0,
                  {"runs": suite.honest_runs, "exposures": exposures, "persistent_suspicions": persistent,
                   "strikes": strikes})


def detection(suite: Suite) -> Result:
    per: Dict[str, int] = {}
    false_blame = 0
    for strategy in DETECTION_STRATEGIES:
        ok = 0
        for seed in range(suite.detection_seeds):
            rep, out = suite.run(suite.detection_config(strategy, seed))
            acc = rep["accountability"]
            false_blame += acc["false_exposures"] + acc["persistent_suspicions_of_correct"]
            caught = out.blamed_by_all if strategy == "nonresponder" else out.exposed_by_all
            ok += bool(out.byzantine) and caught == set(out.byzantine)
        per[strategy] = ok
    passed = all(v == suite.detection_seeds for v in per.values())
    detail: Dict[str, object] = {k: f"{v}/{suite.detection_seeds}" for k, v in per.items()}
    detail["false_blame"] = false_blame
    return Result(4, "detection completeness", passed and false_blame == 0, detail)


def exposure_propagation(suite: Suite) -> Result:
    spreads: Dict[str, Optional[float]] = {}
    curve = []
    for frac in suite.collusion_fractions:
        cfg = Config(nodes=suite.detection_nodes, tx_rate=20.0, duration_s=suite.collusion_duration_s, seed=0,
                     byz_fraction=frac, byz_strategy="colluding")
        rep, out = suite.run(cfg)
        src = str(out.byzantine[0])
        ex = rep["accountability"]["exposure"].get(src)
        spread = None if ex is None else ex["spread"]
        spreads[f"spread_s@{frac}"] = spread
        if ex is not None:
            curve.append({"byz_fraction": frac, "first_s": ex["first"], "all_s": ex["all"], "spread_s": spread})
    passed = all(s is not None and s <= 10.0 for s in spreads.values())
    detail: Dict[str, object] = {k: ("never" if v is None else v) for k, v in spreads.items()}
    detail["curve"] = curve
    return Result(5, "exposure propagation", passed, detail)


# --- 6, 7, 8: performance -----------------------------------------------------


def bandwidth_ratio(suite: Suite) -> Result:
    base = dict(nodes=200, tx_rate=20.0, duration_s=suite.bandwidth_duration_s, seed=0)
    lo, _ = suite.run(Config(protocol="lo", **base))
    flood, _ = suite.run(Config(protocol="flood", **base))
    a = lo["bandwidth"]["control_kb_per_node_min"]
    b = flood["bandwidth"]["control_kb_per_node_min"]
    ratio = a / b if b else float("inf")
    return Result(6, "bandwidth ratio", ratio <= 0.25, {"lo_kb_min": a, "flood_kb_min": b, "ratio": ratio})


def discovery(suite: Suite) -> Result:
    worst = 1.0
    means = []
    for seed in range(suite.honest_runs):
        rep, _ = suite.run(suite.honest_config(seed))
        worst = min(worst, rep["discovery"]["within_8_rounds"])
        means.append(rep["discovery"]["latency_s"]["mean"])
    large, _ = suite.run(Config(nodes=suite.discovery_large_nodes, tx_rate=20.0,
                                duration_s=suite.discovery_large_duration_s, seed=0))
    big = large["discovery"]["within_8_rounds"]
    return Result(7, "discovery within 8 rounds", worst >= 0.99 and big >= 0.99,
                  {f"min@{suite.honest_nodes}": worst, f"at@{suite.discovery_large_nodes}": big,
                   "mean_latency_s": sum(means) / len(means),
                   f"mean_latency_s@{suite.discovery_large_nodes}": large["discovery"]["latency_s"]["mean"]})


def ordering(suite: Suite) -> Result:
    wins = 0
    rows = []
    for seed in range(suite.ordering_seeds):
        rep, _ = suite.run(Config(nodes=suite.ordering_nodes, tx_rate=20.0, duration_s=suite.ordering_duration_s,
                                  seed=seed))
        nat = rep["inclusion"]["natural"]
        hf = rep["inclusion"]["highest_fee"]
        wins += nat["mean"] < hf["mean"] and nat["p95"] < hf["p95"]
        rows.append({"seed": seed, "natural_mean": nat["mean"], "natural_p95": nat["p95"],
                     "highest_fee_mean": hf["mean"], "highest_fee_p95": hf["p95"]})
    return Result(8, "ordering fairness", wins == suite.ordering_seeds,
                  {"seeds_ok": f"{wins}/{suite.ordering_seeds}",
                   "natural_mean": sum(r["natural_mean"] for r in rows) / len(rows),
                   "highest_fee_mean": sum(r["highest_fee_mean"] for r in rows) / len(rows), "rows": rows})


# --- 9, 10: block building ----------------------------------------------------


def walkthrough_order(suite: Suite) -> Result:
    order, verdict, _, _ = three_node_walkthrough()
    return Result(9, "three-node walkthrough order", order == [1, 3, 4, 2, 5, 6] and verdict is None,
                  {"order": ",".join(map(str, order)), "valid": verdict is None})


def _honest_log(rng: random.Random, params: Deployment, miner, client):
    log = MempoolLog()
    head = commit_extend(None, [], miner, params)
    for _ in range(rng.randint(1, 5)):
        ids = []
        for _ in range(rng.randint(1, 6)):
            tx = make_transaction(client, 10, rng.getrandbits(64).to_bytes(8, "big"))
            e = params.short_id(tx.id)
            ids.append(e)
            log.contents[e] = tx
        head = commit_extend(head, sorted(set(ids)), miner, params)
        log.append_bundle(ids, LOCAL, head.seq)
    return log, head


def _mutate(block, miner, txs):
    return _sign_block(miner, height=block.height, prev_hash=block.prev_hash, creator=block.creator,
                       commit_ref=block.commit_ref, bundles=block.bundles, txs=tuple(txs),
                       excluded=block.excluded, missing=block.missing)


def roundtrip_mutations(suite: Suite) -> Result:
    params = Deployment(signature_scheme="mac")
    miner = make_signer("mac", b"acceptance-miner")
    client = make_signer("mac", b"acceptance-client")
    prev = sha256(b"acceptance-prev")
    rng = random.Random("acceptance-roundtrip")
    valid = 0
    hits = {"inject": 0, "omit": 0, "transpose": 0}
    tried = {"inject": 0, "omit": 0, "transpose": 0}
    expect = {"inject": EvidenceKind.INJECTION, "omit": EvidenceKind.CENSORSHIP,
              "transpose": EvidenceKind.REORDERING}
    for _ in range(suite.roundtrip_logs):
        log, head = _honest_log(rng, params, miner, client)
        block = build_block(log, head, prev, 0, miner, params)
        valid += inspect_block(block, params) is None
        txs = list(block.txs)
        variants = {name: txs[:] for name in hits}
        variants["inject"].insert(rng.randrange(len(txs) + 1),
                                  make_transaction(client, 99, rng.getrandbits(64).to_bytes(8, "big")))
        del variants["omit"][rng.randrange(len(txs))]
        if len(txs) >= 2:
            i = rng.randrange(len(txs) - 1)
            j = rng.randrange(i + 1, len(txs))
            variants["transpose"][i], variants["transpose"][j] = txs[j], txs[i]
        else:
            del variants["transpose"]
        for name, mutated in variants.items():
            tried[name] += 1
            ev = inspect_block(_mutate(block, miner, mutated), params)
            hits[name] += ev is not None and ev.kind is expect[name]
    passed = valid == suite.roundtrip_logs and all(hits[k] == tried[k] for k in hits)
    detail: Dict[str, object] = {"valid": f"{valid}/{suite.roundtrip_logs}"}
    detail.update({k: f"{hits[k]}/{tried[k]}" for k in hits})
    return Result(10, "round trip and mutation sensitivity", passed, detail)


# --- 11, 12: reports ----------------------------------------------------------


def determinism(suite: Suite) -> Result:
    configs = [suite.honest_config(0), suite.detection_config("equivocator", 0)]
    same = 0
    for cfg in configs:
        first, _ = suite.run(cfg)
        again = Simulation(cfg).run()
        same += report_json(first) == report_json(again)
    return Result(11, "determinism", same == len(configs), {"identical": f"{same}/{len(configs)}"})


def storage(suite: Suite) -> Result:
    worst = 0.0
    per_node = 0.0
    for seed in range(suite.honest_runs):
        rep, _ = suite.run(suite.honest_config(seed))
        ratio = rep["storage"]["ratio_to_analytic"]
        worst = max(worst, ratio, 1.0 / ratio if ratio else float("inf"))
        per_node = rep["storage"]["commitment_bytes_per_node"]
    full = wire_size(32, 32, 100, 80, 64)
    at_10k = 10_000 * full
    passed = worst <= 2.0 and at_10k <= 87e6
    return Result(12, "commitment storage", passed,
                  {"worst_ratio": worst, "bytes_per_node": per_node, "commitment_bytes": full,
                   "analytic_10k_nodes_mb": at_10k / 1e6})


CRITERIA: Tuple[Callable[[Suite], Result], ...] = (
    sketch_equivalence, wire_sizes, honest_accuracy, detection, exposure_propagation, bandwidth_ratio,
    discovery, ordering, walkthrough_order, roundtrip_mutations, determinism, storage,
)


def run_criterion(fn: Callable[[Suite], Result], suite: Suite) -> Result:
    t0 = time.perf_counter()
    res = fn(suite)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(suite: Optional[Suite] = None, only: Optional[List[int]] = None, echo: Callable[[str], None] = print
            ) -> List[Result]:
    suite = suite or Suite()
    out = []
    for n, fn in enumerate(CRITERIA, start=1):
        if only and n not in only:
            continue
        res = run_criterion(fn, suite)
        echo(res.line())
        out.append(res)
    return out
