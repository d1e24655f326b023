import json

import pytest

from lzero.messages import HEADER, MempoolHashes
from lzero.metrics import report_json
from lzero.simnet import (
    Config, ConfigError, Infeasible, LatencyMatrix, Simulation, WorkloadItem, build_topology, connected,
    generate_workload, load_fees, load_workload, run, save_workload,
)


def test_config_validation():
    with pytest.raises(ConfigError):
        Config(nodes=0).validate()
    with pytest.raises(ConfigError):
        Config(byz_fraction=0.2).validate()
    with pytest.raises(ConfigError):
        Config(protocol="gossip").validate()
    with pytest.raises(ConfigError):
        Config.from_dict({"nodez": 3})
    cfg = Config.from_dict({"nodes": 5, "seed": 3})
    assert Config.from_dict(cfg.to_dict()) == cfg


def test_topology_respects_caps_and_connectivity():
    topo = build_topology(100, 8, 12, seed=4, byzantine={1, 2, 3})
    assert all(len(o) == 8 and len(set(o)) == 8 for o in topo.out)
    assert all(i not in o for i, o in enumerate(topo.out))
    assert max(topo.in_degree()) <= 12
    assert connected(topo.undirected(), set(range(100)) - {1, 2, 3})
    assert build_topology(100, 8, 12, seed=4).out == build_topology(100, 8, 12, seed=4).out


def test_topology_infeasible():
    with pytest.raises(Infeasible):
        build_topology(10, 5, 2, seed=0)


def test_bundled_latency_matrix():
    lat = LatencyMatrix.load_csv()
    assert len(lat.cities) == 32
    assert all(lat.ms[i][j] == lat.ms[j][i] for i in range(32) for j in range(32))
    assert lat.delay_s(0, 1, 0.5) == lat.ms[0][1] / 1000.0


def test_workload_roundtrip(tmp_path):
    items = generate_workload(20, 10, 250, load_fees(), seed=1)
    assert 100 < len(items) < 300
    assert all(a.arrival_s <= b.arrival_s for a, b in zip(items, items[1:]))
    path = tmp_path / "w.csv"
    save_workload(items, str(path))
    assert load_workload(str(path)) == items


def test_three_nodes_hold_content_quickly(tmp_path):
    path = tmp_path / "one.csv"
    save_workload([WorkloadItem(0.0, 5, 100)], str(path))
    lat_ms = 50.0
    horizon = 2 * 1.0 + 2 * lat_ms / 1000.0
    cfg = Config(nodes=3, out_degree=2, in_cap=2, duration_s=horizon, drain_s=0.0,
                 uniform_latency_ms=lat_ms, jitter=0.0, workload_file=str(path), block_mean_s=0)
    sim = Simulation(cfg)
    sim.run()
    assert all(len(n.log.contents) == 1 for n in sim.nodes)


def test_zero_duration():
    sim = Simulation(Config(nodes=5, duration_s=0, drain_s=0))
    report = sim.run()
    assert report["transactions"] == 0
    assert report["messages"]["msg_sent"] == 0


def test_flood_message_size():
    hashes = frozenset(bytes([i]) * 32 for i in range(7))
    assert MempoolHashes(hashes).size == HEADER + 4 + 32 * 7


def test_flood_traffic_is_hash_lists():
    report = run(Config(nodes=20, duration_s=10, tx_rate=5, protocol="flood", seed=2))
    types = report["bandwidth"]["control_bytes_by_type"]
    assert set(types) <= {"MempoolHashes", "TxRequest"}
    assert report["discovery"]["within_8_rounds"] > 0.99


def test_determinism():
    cfg = Config(nodes=30, duration_s=15, tx_rate=10, seed=9, byz_fraction=0.1, byz_strategy="equivocator")
    assert report_json(run(cfg)) == report_json(run(cfg))


def test_seed_changes_run():
    a = run(Config(nodes=20, duration_s=10, tx_rate=5, seed=1))
    b = run(Config(nodes=20, duration_s=10, tx_rate=5, seed=2))
    assert json.dumps(a, sort_keys=True) != json.dumps(b, sort_keys=True)


def test_exact_and_oracle_sketch_agree():
    base = dict(nodes=12, duration_s=12, tx_rate=4, seed=5, signatures="mac")
    exact = run(Config(sketch_mode="exact", **base))
    oracle = run(Config(sketch_mode="oracle", **base))
    for key in ("discovery", "inclusion", "accountability", "messages"):
        assert exact[key] == oracle[key]


def test_honest_run_has_no_blame():
    report = run(Config(nodes=40, duration_s=30, seed=3))
    acc = report["accountability"]
    assert acc["exposure"] == {} and acc["false_exposures"] == 0
    assert acc["persistent_suspicions_of_correct"] == 0 and acc["strikes_against_correct"] == 0
    assert report["messages"]["msg_sent"] == report["messages"]["msg_delivered"] + report["messages"]["msg_undelivered"]
