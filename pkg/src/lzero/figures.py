"""Figure data as CSV rows, with an optional dependency-free SVG rendering."""

import csv
import math
import os
from typing import Dict, List, Sequence
from xml.sax.saxutils import escape

from lzero.metrics import RunLog

Rows = List[Dict[str, object]]


def fig6_rows(points: Sequence[dict]) -> Rows:
    """Exposure and suspicion timing per adversary, one row per sweep point."""
    rows = []
    for p in points:
        acc = p["report"]["accountability"]
        for target, ex in sorted(acc["exposure"].items(), key=lambda kv: int(kv[0])):
            sus = acc["suspicion"].get(target, {})
            rows.append({p["axis"]: p["value"], "target": int(target), "first_suspicion_s": sus.get("first"),
                         "first_exposure_s": ex["first"], "all_exposed_s": ex["all"], "spread_s": ex["spread"],
                         "holders": ex["holders"], "needed": ex["needed"]})
        if not acc["exposure"]:
            rows.append({p["axis"]: p["value"], "target": None, "first_suspicion_s": None,
                         "first_exposure_s": None, "all_exposed_s": None, "spread_s": None,
                         "holders": 0, "needed": 0})
    return rows


def fig7_rows(log: RunLog, bin_s: float = 0.25) -> Rows:
    """Histogram of per (tx, correct node) discovery latency."""
    correct = set(log.correct)
    counts: Dict[int, int] = {}
    for i in range(len(log.learn_tx)):
        if log.learn_node[i] in correct:
            b = int(math.floor((log.learn_time[i] - log.tx_time[log.learn_tx[i]]) / bin_s))
            counts[b] = counts.get(b, 0) + 1
    return [{"latency_s": round(b * bin_s, 6), "count": c} for b, c in sorted(counts.items())]


def fig8_rows(log: RunLog, ordering: str = "both") -> Rows:
    """Per-tx block-inclusion latency; None when never included."""
    rows = []
    for i, t0 in enumerate(log.tx_time):
        row: Dict[str, object] = {"tx": i, "fee": log.tx_fee[i]}
        if ordering in ("natural", "both"):
            t = log.natural_incl.get(i)
            row["natural_s"] = None if t is None else t - t0
        if ordering in ("highest_fee", "both"):
            t = log.highest_fee_incl.get(i)
            row["highest_fee_s"] = None if t is None else t - t0
        rows.append(row)
    return rows


def fig9_rows(reports: Dict[str, dict]) -> Rows:
    """Control bandwidth per protocol and message type, KB per node per minute."""
    rows = []
    for proto, rep in reports.items():
        minutes = rep["duration_s"] / 60.0 or 1.0
        n = rep["correct_nodes"] or 1
        for kind, b in rep["bandwidth"]["control_bytes_by_type"].items():
            rows.append({"protocol": proto, "message": kind, "kb_per_node_min": b / 1024.0 / minutes / n})
        rows.append({"protocol": proto, "message": "total",
                     "kb_per_node_min": rep["bandwidth"]["control_kb_per_node_min"]})
    return rows


def fig10_rows(points: Sequence[dict]) -> Rows:
    return [{p["axis"]: p["value"], "tx_rate": p["tx_rate"],
             "reconciliations_per_node_min": p["report"]["reconciliations_per_node_min"]} for p in points]


def write_csv(path: str, rows: Rows) -> None:
    fields: List[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if v is None else v for k, v in r.items()})


def write_svg(path: str, rows: Rows, x: str, y: str, title: str, bars: bool = False) -> None:
    """Plain line or bar chart of numeric column ``y`` against ``x``."""
    pts = [(r[x], r[y]) for r in rows if isinstance(r.get(y), (int, float)) and r.get(x) is not None]
    w, h, pad = 640, 400, 50
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" '
             f'font-size="12"><rect width="{w}" height="{h}" fill="white"/>',
             f'<text x="{w / 2}" y="20" text-anchor="middle">{escape(title)}</text>']
    if pts:
        labels = [str(p[0]) for p in pts]
        numeric = all(isinstance(p[0], (int, float)) for p in pts)
        xs = [float(p[0]) if numeric else i for i, p in enumerate(pts)]
        ys = [float(p[1]) for p in pts]
        x0, x1 = min(xs), max(xs)
        y1 = max(ys) or 1.0
        span = (x1 - x0) or 1.0

        def px(v: float) -> float:
            return pad + (v - x0) / span * (w - 2 * pad)

        def py(v: float) -> float:
            return h - pad - v / y1 * (h - 2 * pad)

        parts.append(f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>')
        parts.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>')
        parts.append(f'<text x="{pad - 4}" y="{pad}" text-anchor="end">{y1:.3g}</text>')
        parts.append(f'<text x="{w / 2}" y="{h - 10}" text-anchor="middle">{escape(x)}</text>')
        parts.append(f'<text x="12" y="{h / 2}" transform="rotate(-90 12 {h / 2})" '
                     f'text-anchor="middle">{escape(y)}</text>')
        if bars:
            bw = max(1.0, (w - 2 * pad) / max(len(pts), 1) * 0.8)
            for (xv, yv), lab in zip(zip(xs, ys), labels):
                parts.append(f'<rect x="{px(xv) - bw / 2:.1f}" y="{py(yv):.1f}" width="{bw:.1f}" '
                             f'height="{h - pad - py(yv):.1f}" fill="steelblue"><title>{escape(lab)}</title></rect>')
        else:
            line = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(xs, ys))
            parts.append(f'<polyline points="{line}" fill="none" stroke="steelblue" stroke-width="2"/>')
        parts.append(f'<text x="{pad}" y="{h - pad + 16}">{escape(labels[0])}</text>')
        parts.append(f'<text x="{w - pad}" y="{h - pad + 16}" text-anchor="end">{escape(labels[-1])}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
