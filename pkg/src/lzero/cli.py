"""Command-line front end: run, sweep, compare, accept and vectors."""

import argparse
import dataclasses
import json
import os
import sys
from typing import List, Optional

from lzero import acceptance, figures, vectors
from lzero.metrics import RunLog, aggregate, report_json
from lzero.simnet import Config, ConfigError, Infeasible, Simulation

# flag name -> Config field
OVERRIDES = {
    "nodes": int, "seed": int, "byz_fraction": float, "byz_strategy": str, "protocol": str,
    "duration_s": float, "tx_rate": float, "sketch_mode": str, "byz_lead_at": float,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with Config fields")
    for name, typ in OVERRIDES.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    p.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                   help="any other Config field, value parsed as JSON")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--svg", action="store_true", help="also render figures as SVG")


def config_from_args(args: argparse.Namespace) -> Config:
    d = Config().to_dict()
    if args.config:
        with open(args.config) as f:
            d.update(json.load(f))
    for name in OVERRIDES:
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            d[key] = json.loads(raw)
        except json.JSONDecodeError:
            d[key] = raw
    return Config.from_dict(d)


def _emit(out: str, name: str, rows, svg: bool, x: str, y: str, title: str, bars: bool = False) -> None:
    figures.write_csv(os.path.join(out, name + ".csv"), rows)
    if svg:
        figures.write_svg(os.path.join(out, name + ".svg"), rows, x, y, title, bars)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    out = figures.ensure_dir(args.out)
    sim = Simulation(cfg)
    report = sim.run()
    with open(os.path.join(out, "report.json"), "w") as f:
        f.write(report_json(report) + "\n")
    with open(os.path.join(out, "config.json"), "w") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
    if args.events or args.audit:
        with open(os.path.join(out, "events.log"), "w") as f:
            f.write(sim.log.to_json() + "\n")
    _emit(out, "fig7", figures.fig7_rows(sim.log), args.svg, "latency_s", "count", "Discovery latency", True)
    _emit(out, "fig8", figures.fig8_rows(sim.log, args.ordering), args.svg, "tx",
          "highest_fee_s" if args.ordering == "highest_fee" else "natural_s", "Inclusion latency")
    _emit(out, "fig9", figures.fig9_rows({cfg.protocol: report}), args.svg, "message", "kb_per_node_min",
          "Control bandwidth", True)
    _emit(out, "fig10", figures.fig10_rows([{"axis": "seed", "value": cfg.seed, "tx_rate": cfg.tx_rate,
                                             "report": report}]),
          args.svg, "tx_rate", "reconciliations_per_node_min", "Reconciliations", True)
    print(_summary(report))
    if args.audit:
        with open(os.path.join(out, "events.log")) as f:
            again = aggregate(RunLog.from_json(f.read()))
        if report_json(again) != report_json(report):
            print("audit: aggregates re-derived from events.log differ from the report", file=sys.stderr)
            return 1
        print("audit: report reproduced from events.log")
    return 0


def _summary(rep: dict) -> str:
    inc = rep["inclusion"]
    acc = rep["accountability"]
    return (f"nodes={rep['nodes']} txs={rep['transactions']} "
            f"control_kb_per_node_min={rep['bandwidth']['control_kb_per_node_min']:.1f} "
            f"discovery_mean_s={rep['discovery']['latency_s']['mean']:.3f} "
            f"natural_mean_s={inc['natural']['mean']:.2f} highest_fee_mean_s={inc['highest_fee']['mean']:.2f} "
            f"exposed={len(acc['exposure'])} suspected={len(acc['suspicion'])}")


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def cmd_sweep(args: argparse.Namespace) -> int:
    base = config_from_args(args)
    if args.axis not in {f.name for f in dataclasses.fields(Config)}:
        raise ConfigError(f"unknown sweep axis {args.axis!r}")
    out = figures.ensure_dir(args.out)
    points = []
    summary = []
    for raw in args.values.split(","):
        value = _parse_value(raw.strip())
        cfg = base.replace(**{args.axis: value})
        rep = Simulation(cfg).run()
        points.append({"axis": args.axis, "value": value, "tx_rate": cfg.tx_rate, "report": rep})
        summary.append({args.axis: value,
                        "control_kb_per_node_min": rep["bandwidth"]["control_kb_per_node_min"],
                        "discovery_mean_s": rep["discovery"]["latency_s"]["mean"],
                        "within_8_rounds": rep["discovery"]["within_8_rounds"],
                        "natural_mean_s": rep["inclusion"]["natural"]["mean"],
                        "highest_fee_mean_s": rep["inclusion"]["highest_fee"]["mean"],
                        "reconciliations_per_node_min": rep["reconciliations_per_node_min"]})
        print(f"{args.axis}={value}: {_summary(rep)}")
    with open(os.path.join(out, "sweep.json"), "w") as f:
        f.write(report_json({"axis": args.axis, "points": [
            {"value": p["value"], "report": p["report"]} for p in points]}) + "\n")
    figures.write_csv(os.path.join(out, "sweep.csv"), summary)
    _emit(out, "fig6", figures.fig6_rows(points), args.svg, args.axis, "spread_s", "Exposure spread")
    _emit(out, "fig10", figures.fig10_rows(points), args.svg, args.axis, "reconciliations_per_node_min",
          "Reconciliations")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    base = config_from_args(args)
    out = figures.ensure_dir(args.out)
    reports = {p: Simulation(base.replace(protocol=p)).run() for p in ("lo", "flood")}
    lo = reports["lo"]["bandwidth"]["control_kb_per_node_min"]
    fl = reports["flood"]["bandwidth"]["control_kb_per_node_min"]
    row = {"nodes": base.nodes, "tx_rate": base.tx_rate, "duration_s": base.duration_s, "seed": base.seed,
           "lo_kb_per_node_min": lo, "flood_kb_per_node_min": fl,
           "flood_over_lo": fl / lo if lo else None, "lo_over_flood": lo / fl if fl else None}
    figures.write_csv(os.path.join(out, "compare.csv"), [row])
    with open(os.path.join(out, "compare.json"), "w") as f:
        f.write(report_json({"row": row, "reports": reports}) + "\n")
    _emit(out, "fig9", figures.fig9_rows(reports), args.svg, "message", "kb_per_node_min", "Control bandwidth",
          True)
    print(f"lo={lo:.1f} KB/node/min flood={fl:.1f} KB/node/min flood/lo={row['flood_over_lo']:.2f}")
    return 0


def cmd_accept(args: argparse.Namespace) -> int:
    suite = acceptance.Suite.quick() if args.quick else acceptance.Suite()
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = acceptance.run_all(suite, only)
    if args.out:
        figures.ensure_dir(args.out)
        with open(os.path.join(args.out, "acceptance.json"), "w") as f:
            f.write(report_json([dataclasses.asdict(r) for r in results]) + "\n")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def cmd_vectors(args: argparse.Namespace) -> int:
    if args.check:
        bad = vectors.check(args.out)
        for name in bad:
            print(f"stale or missing: {name}", file=sys.stderr)
        return 1 if bad else 0
    for path in vectors.write(args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lzero", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    _add_config_flags(p)
    p.add_argument("--ordering", choices=("natural", "highest_fee", "both"), default="both",
                   help="inclusion-latency columns written to fig8.csv")
    p.add_argument("--events", action="store_true", help="write the raw event log to events.log")
    p.add_argument("--audit", action="store_true", help="re-derive the report from events.log and compare")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary one config field")
    _add_config_flags(p)
    p.add_argument("--axis", default="byz_fraction")
    p.add_argument("--values", default="0.1,0.2,0.3,0.4,0.5")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="LO against the Flood baseline on identical seeds")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("accept", help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true", help="reduced sizes, for smoke testing only")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--out", help="directory for acceptance.json")
    p.set_defaults(func=cmd_accept)

    p = sub.add_parser("vectors", help="regenerate the sketch, clock and shuffle test vectors")
    p.add_argument("--out", default="vectors")
    p.add_argument("--check", action="store_true", help="compare instead of writing")
    p.set_defaults(func=cmd_vectors)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, Infeasible, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
