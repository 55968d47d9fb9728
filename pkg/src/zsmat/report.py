"""Plot-data tables from finished runs.

A run directory is what ``track`` writes (threshold.json, events.jsonl) plus
an ``eval.json`` produced by ``eval``.  The report renders per-run score
histograms with cluster assignment and the threshold marker, and a
comparison table with one metrics row per run, ready for plotting or diffing
ablation variants.
"""

from __future__ import annotations

import json
from pathlib import Path

REQUIRED_FILES = ("threshold.json", "events.jsonl", "eval.json")
METRIC_COLUMNS = ("hota", "deta", "assa", "detre", "loca", "mota", "idf1", "idsw")


def check_run_dirs(run_dirs: list[Path]) -> None:
    missing = []
    for run in run_dirs:
        for name in REQUIRED_FILES:
            if not (run / name).exists():
                missing.append(str(run / name))
    if missing:
        raise FileNotFoundError("missing report inputs: " + ", ".join(missing))


def histogram_rows(run_dirs: list[Path]) -> list[dict]:
    rows = []
    for run in run_dirs:
        data = json.loads((run / "threshold.json").read_text())
        for entry in data["histogram"]:
            rows.append(
                {
                    "run": run.name,
                    "lo": entry["lo"],
                    "hi": entry["hi"],
                    "count": entry["count"],
                    "cluster": entry["cluster"],
                    "tau": data["tau"],
                }
            )
    return rows


def comparison_rows(run_dirs: list[Path]) -> list[dict]:
    rows = []
    for run in run_dirs:
        data = json.loads((run / "eval.json").read_text())
        pooled = data["pooled"] if "pooled" in data else data
        row = {"run": run.name}
        row.update({k: pooled[k] for k in METRIC_COLUMNS})
        events = [json.loads(line) for line in (run / "events.jsonl").read_text().splitlines() if line]
        counts: dict[str, int] = {}
        for e in events:
            counts[e["event"]] = counts.get(e["event"], 0) + 1
        for kind in ("Created", "Reprompted", "MemoryDropped", "Suppressed", "Terminated"):
            row[f"n_{kind.lower()}"] = counts.get(kind, 0)
        rows.append(row)
    return rows


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    columns = list(rows[0].keys())
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def build_report(run_dirs: list[Path], out_dir: Path) -> list[Path]:
    check_run_dirs(run_dirs)
    out_dir.mkdir(parents=True, exist_ok=True)
    hist_path = out_dir / "histograms.csv"
    cmp_path = out_dir / "comparison.csv"
    write_csv(hist_path, histogram_rows(run_dirs))
    write_csv(cmp_path, comparison_rows(run_dirs))
    return [hist_path, cmp_path]
