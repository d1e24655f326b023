import csv
import json

from lzero import cli

SMALL = ["--nodes", "12", "--duration-s", "15", "--tx-rate", "4", "--seed", "1"]


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_run_writes_report_figures_and_audits(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["run", *SMALL, "--out", str(out), "--audit", "--svg"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["nodes"] == 12
    assert (out / "events.log").exists()
    for name in ("fig7", "fig8", "fig9", "fig10"):
        assert (out / f"{name}.csv").exists()
        assert (out / f"{name}.svg").read_text().startswith("<svg")
    fig8 = rows(out / "fig8.csv")
    assert len(fig8) == report["transactions"]
    assert {"natural_s", "highest_fee_s"} <= set(fig8[0])


def test_run_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["run", *SMALL, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_config_file_and_set(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nodes": 10, "duration_s": 10, "tx_rate": 2}))
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(cfg), "--set", "fanout=2", "--ordering", "natural",
                     "--out", str(out)]) == 0
    written = json.loads((out / "config.json").read_text())
    assert written["nodes"] == 10 and written["fanout"] == 2
    assert "highest_fee_s" not in rows(out / "fig8.csv")[0]


def test_config_errors_exit_nonzero(tmp_path, capsys):
    assert cli.main(["run", "--nodes", "0", "--out", str(tmp_path)]) != 0
    assert cli.main(["run", "--set", "bogus=1", "--out", str(tmp_path)]) != 0
    assert cli.main(["run", "--byz-fraction", "0.2", "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_sweep_emits_fig6(tmp_path):
    out = tmp_path / "s"
    assert cli.main(["sweep", *SMALL, "--byz-strategy", "colluding", "--values", "0.2,0.3",
                     "--out", str(out)]) == 0
    fig6 = rows(out / "fig6.csv")
    assert {r["byz_fraction"] for r in fig6} == {"0.2", "0.3"}
    assert len(rows(out / "sweep.csv")) == 2


def test_compare_table(tmp_path):
    out = tmp_path / "c"
    assert cli.main(["compare", *SMALL, "--out", str(out)]) == 0
    row = rows(out / "compare.csv")[0]
    assert float(row["lo_kb_per_node_min"]) > 0 and float(row["flood_kb_per_node_min"]) > 0
    assert {r["protocol"] for r in rows(out / "fig9.csv")} == {"lo", "flood"}


def test_vectors_roundtrip(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["vectors", "--check", "--out", str(out)]) == 1
    assert cli.main(["vectors", "--out", str(out)]) == 0
    assert cli.main(["vectors", "--check", "--out", str(out)]) == 0


def test_accept_reports_and_exit_code(tmp_path, capsys):
    assert cli.main(["accept", "--quick", "--only", "2,9", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion  2" in out and "[PASS] criterion  9" in out
    assert len(json.loads((tmp_path / "acceptance.json").read_text())) == 2
