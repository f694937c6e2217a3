"""Post-run reporting: a delimited per-node table on stdout plus matplotlib
figures rendered to files alongside it.

Works entirely from the artifact directory a run produced (readings.csv,
events.jsonl, summary.json); it never needs the live simulation.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000


def load_readings(path) -> dict[int, list[tuple[int, float, float, float]]]:
    """readings.csv -> node id -> [(timestamp, temp, humidity, intensity)]."""
    out: dict[int, list] = defaultdict(list)
    with open(path) as fh:
        for row in csv.DictReader(fh):
            out[int(row["id"])].append(
                (int(row["timestamp"]), float(row["temperature"]),
                 float(row["humidity"]), float(row["intensity"])))
    return dict(out)


def load_events(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def node_table(readings, summary, day_start_hour=8, day_end_hour=20):
    """Per-node rows: count, day/night mean temperature, delivery ratio."""
    lo = day_start_hour * MS_PER_HOUR
    hi = day_end_hour * MS_PER_HOUR
    rows = []
    per_origin = summary.get("delivery_per_origin", {})
    for node in sorted(readings):
        series = readings[node]
        day = [t for ts, t, _, _ in series if lo <= ts % MS_PER_DAY < hi]
        night = [t for ts, t, _, _ in series if not lo <= ts % MS_PER_DAY < hi]
        rows.append({
            "node": node,
            "count": len(series),
            "day_mean_c": sum(day) / len(day) if day else None,
            "night_mean_c": sum(night) / len(night) if night else None,
            "delivery": per_origin.get(str(node)),
        })
    return rows


def format_table(rows, delimiter: str = "\t") -> str:
    header = ["node", "count", "day_mean_c", "night_mean_c", "delivery"]
    lines = [delimiter.join(header)]
    for r in rows:
        lines.append(delimiter.join(
            "" if r[k] is None else
            (f"{r[k]:.3f}" if isinstance(r[k], float) else str(r[k]))
            for k in header))
    return "\n".join(lines)


def render_figures(out_dir, readings, events, summary) -> list[Path]:
    """Render the report figures next to the delimited output files."""
    out = Path(out_dir)
    made = []

    fig, ax = plt.subplots(figsize=(10, 5))
    for node in sorted(readings):
        ts = [r[0] / MS_PER_HOUR for r in readings[node]]
        temps = [r[1] for r in readings[node]]
        ax.plot(ts, temps, label=f"node {node}", linewidth=0.8)
    ax.set_xlabel("time (h)")
    ax.set_ylabel("temperature (°C)")
    ax.set_title("Per-node temperature")
    ax.legend(loc="best", fontsize=8)
    path = out / "temperature.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    made.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    per_origin = summary.get("delivery_per_origin", {})
    if per_origin:
        nodes = sorted(per_origin, key=int)
        ax.bar(nodes, [per_origin[n] for n in nodes])
        ax.set_ylim(0, 1.05)
    ax.set_xlabel("origin node")
    ax.set_ylabel("delivery ratio")
    ax.set_title("End-to-end delivery ratio")
    path = out / "delivery.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    made.append(path)

    fig, ax = plt.subplots(figsize=(10, 3))
    kinds = sorted({ev["kind"] for ev in events if ev["kind"] != "reading"})
    for i, kind in enumerate(kinds):
        ts = [ev["t"] / MS_PER_HOUR for ev in events if ev["kind"] == kind]
        ax.scatter(ts, [i] * len(ts), s=12, label=kind)
    ax.set_yticks(range(len(kinds)))
    ax.set_yticklabels(kinds, fontsize=8)
    ax.set_xlabel("time (h)")
    ax.set_title("Events")
    path = out / "events.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    made.append(path)

    return made


def report(artifact_dir, delimiter: str = "\t") -> str:
    """Build the delimited table and render figures into artifact_dir."""
    d = Path(artifact_dir)
    readings = load_readings(d / "readings.csv")
    with open(d / "summary.json") as fh:
        summary = json.load(fh)
    events = load_events(d / "events.jsonl")
    rows = node_table(readings, summary)
    render_figures(d, readings, events, summary)
    return format_table(rows, delimiter)
