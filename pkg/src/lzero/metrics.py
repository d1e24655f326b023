"""Raw event records of a run and the aggregates derived from them.

Every number in a report is computed by ``aggregate`` from a ``RunLog``, so
re-running ``aggregate`` on a reloaded events file audits the report.
"""

import json
import math
from array import array
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from lzero.txmodel import Transaction


SETTLE_S = 10.0


def highest_fee_baseline(snapshot: Iterable[Transaction], blockspace: int) -> List[Transaction]:
    """Fee-greedy block: descending fee, ties by ascending id, at most ``blockspace`` txs."""
    return sorted(snapshot, key=lambda t: (-t.fee, t.id))[:max(blockspace, 0)]


@dataclass
class RunLog:
    """Everything a report is derived from."""

    nodes: int
    correct: List[int]
    strategies: Dict[int, str]
    duration_s: float
    end_s: float
    # per injected tx, in injection order
    tx_time: array = field(default_factory=lambda: array("d"))
    tx_fee: array = field(default_factory=lambda: array("q"))
    # first-knowledge records: (tx index, node, time, hop)
    learn_tx: array = field(default_factory=lambda: array("l"))
    learn_node: array = field(default_factory=lambda: array("l"))
    learn_time: array = field(default_factory=lambda: array("d"))
    learn_hop: array = field(default_factory=lambda: array("l"))
    # inclusion time per tx index; absent when never included
    natural_incl: Dict[int, float] = field(default_factory=dict)
    highest_fee_incl: Dict[int, float] = field(default_factory=dict)
    blame: List[list] = field(default_factory=list)
    traffic: Dict[str, Dict[str, List[int]]] = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)
    storage: Dict[int, List[int]] = field(default_factory=dict)
    analytic_commitment_bytes: int = 0
    sync_period_s: float = 1.0

    def to_json(self) -> str:
        d = {
            "nodes": self.nodes, "correct": self.correct,
            "strategies": {str(k): v for k, v in sorted(self.strategies.items())},
            "duration_s": self.duration_s, "end_s": self.end_s,
            "tx_time": list(self.tx_time), "tx_fee": list(self.tx_fee),
            "learn": [list(self.learn_tx), list(self.learn_node), list(self.learn_time), list(self.learn_hop)],
            "natural_incl": {str(k): v for k, v in sorted(self.natural_incl.items())},
            "highest_fee_incl": {str(k): v for k, v in sorted(self.highest_fee_incl.items())},
            "blame": self.blame, "traffic": self.traffic, "counters": dict(sorted(self.counters.items())),
            "storage": {str(k): v for k, v in sorted(self.storage.items())},
            "analytic_commitment_bytes": self.analytic_commitment_bytes,
            "sync_period_s": self.sync_period_s,
        }
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunLog":
        d = json.loads(text)
        log = cls(d["nodes"], d["correct"], {int(k): v for k, v in d["strategies"].items()},
                  d["duration_s"], d["end_s"])
        log.tx_time = array("d", d["tx_time"])
        log.tx_fee = array("q", d["tx_fee"])
        lt, ln, ltm, lh = d["learn"]
        log.learn_tx, log.learn_node = array("l", lt), array("l", ln)
        log.learn_time, log.learn_hop = array("d", ltm), array("l", lh)
        log.natural_incl = {int(k): v for k, v in d["natural_incl"].items()}
        log.highest_fee_incl = {int(k): v for k, v in d["highest_fee_incl"].items()}
        log.blame = d["blame"]
        log.traffic = d["traffic"]
        log.counters = Counter(d["counters"])
        log.storage = {int(k): v for k, v in d["storage"].items()}
        log.analytic_commitment_bytes = d["analytic_commitment_bytes"]
        log.sync_period_s = d.get("sync_period_s", 1.0)
        return log


def _quantile(xs: Sequence[float], q: float) -> float:
    """Nearest-rank quantile of a sorted sequence."""
    if not xs:
        return 0.0
    k = max(0, min(len(xs) - 1, math.ceil(q * len(xs)) - 1))
    return xs[k]


def _stats(xs: List[float]) -> Dict[str, float]:
    xs = sorted(xs)
    n = len(xs)
    mean = sum(xs) / n if n else 0.0
    return {"count": n, "mean": mean, "p50": _quantile(xs, 0.5), "p95": _quantile(xs, 0.95),
            "p99": _quantile(xs, 0.99), "max": xs[-1] if xs else 0.0}


def _inclusion(log: RunLog, incl: Dict[int, float]) -> Dict[str, float]:
    lat = []
    censored = 0
    for i, t0 in enumerate(log.tx_time):
        t = incl.get(i)
        if t is None:
            censored += 1
            t = log.end_s
        lat.append(t - t0)
    out = _stats(lat)
    out["never_included"] = censored
    return out


def _blame_times(log: RunLog, kind: str) -> Dict[str, dict]:
    """Per target: first blame by a correct node and time all correct nodes agree."""
    correct = set(log.correct)
    first: Dict[int, float] = {}
    holders: Dict[int, Dict[int, float]] = defaultdict(dict)
    for t, k, node, target in log.blame:
        if k != kind or node not in correct:
            continue
        first.setdefault(target, t)
        holders[target].setdefault(node, t)
    out = {}
    for target in sorted(first):
        need = correct - {target}
        got = holders[target]
        done = max(got.values()) if need <= got.keys() else None
        out[str(target)] = {
            "first": first[target], "all": done,
            "spread": None if done is None else done - first[target],
            "holders": len(got), "needed": len(need),
        }
    return out


def _final_sets(log: RunLog, kind: str, undo: Optional[str]) -> Dict[int, set]:
    state: Dict[int, set] = defaultdict(set)
    for _, k, node, target in log.blame:
        if k == kind:
            state[node].add(target)
        elif undo is not None and k == undo:
            state[node].discard(target)
    return state


def aggregate(log: RunLog) -> dict:
    correct = set(log.correct)
    minutes = log.duration_s / 60.0 if log.duration_s else 0.0

    control = {}
    per_node = []
    for node in sorted(correct):
        per = log.traffic.get(str(node), {})
        b = sum(v[1] for k, v in per.items() if not k.startswith("~"))
        per_node.append(b)
        for k, v in per.items():
            if not k.startswith("~"):
                control[k] = control.get(k, 0) + v[1]
    kb_min = [b / 1024.0 / minutes for b in per_node] if minutes else [0.0 for _ in per_node]

    # transactions old enough to have spread everywhere before ticks stop
    settled = [i for i, t in enumerate(log.tx_time) if t <= log.duration_s - SETTLE_S]
    settled_set = set(settled)
    disc_lat, hops = [], Counter()
    within8 = within8_rounds = 0
    round_limit = 8 * log.sync_period_s
    for i in range(len(log.learn_tx)):
        if log.learn_node[i] in correct:
            disc_lat.append(log.learn_time[i] - log.tx_time[log.learn_tx[i]])
            hops[log.learn_hop[i]] += 1
            if log.learn_tx[i] in settled_set:
                within8 += log.learn_hop[i] <= 8
                within8_rounds += disc_lat[-1] <= round_limit
    pairs = len(log.tx_time) * len(correct)
    settled_pairs = len(settled) * len(correct)

    exposed = _final_sets(log, "expose", None)
    suspected = _final_sets(log, "suspect", "retract")
    false_exposures = sum(1 for n in correct for t in exposed.get(n, ()) if t in correct)
    persistent = sum(1 for n in correct for t in suspected.get(n, ()) if t in correct)

    storage = [sum(log.storage[n]) for n in sorted(correct) if n in log.storage]
    stored_count = [len(log.storage[n]) for n in sorted(correct) if n in log.storage]
    mean_storage = sum(storage) / len(storage) if storage else 0.0
    mean_count = sum(stored_count) / len(stored_count) if stored_count else 0.0
    analytic = mean_count * log.analytic_commitment_bytes

    recon = log.counters.get("reconciliations", 0)
    return {
        "nodes": log.nodes,
        "correct_nodes": len(correct),
        "duration_s": log.duration_s,
        "transactions": len(log.tx_time),
        "bandwidth": {
            "control_kb_per_node_min": sum(kb_min) / len(kb_min) if kb_min else 0.0,
            "control_bytes_by_type": dict(sorted(control.items())),
        },
        "discovery": {
            "latency_s": _stats(disc_lat),
            "hop_histogram": {str(h): c for h, c in sorted(hops.items())},
            "coverage": (len(disc_lat) / pairs) if pairs else 1.0,
            "within_8_hops": (within8 / settled_pairs) if settled_pairs else 1.0,
            "within_8_rounds": (within8_rounds / settled_pairs) if settled_pairs else 1.0,
        },
        "inclusion": {
            "natural": _inclusion(log, log.natural_incl),
            "highest_fee": _inclusion(log, log.highest_fee_incl),
        },
        "accountability": {
            "exposure": _blame_times(log, "expose"),
            "suspicion": _blame_times(log, "suspect"),
            "false_exposures": false_exposures,
            "persistent_suspicions_of_correct": persistent,
            "strikes_against_correct": sum(
                1 for _, k, node, target in log.blame if k == "strike" and node in correct and target in correct),
        },
        "reconciliations_per_node_min": (recon / len(correct) / minutes) if minutes and correct else 0.0,
        "bisections": log.counters.get("bisections", 0),
        "storage": {
            "commitment_bytes_per_node": mean_storage,
            "commitments_per_node": mean_count,
            "analytic_bytes_per_node": analytic,
            "ratio_to_analytic": (mean_storage / analytic) if analytic else 0.0,
            "commitment_wire_bytes": log.analytic_commitment_bytes,
        },
        "messages": {k: v for k, v in sorted(log.counters.items()) if k.startswith("msg_")},
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
