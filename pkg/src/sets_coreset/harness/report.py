"""Report rows and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FIELDS = ("method", "sigma", "trial", "cost", "approx_error", "wall_time_seconds", "seed")


@dataclass
class ReportRow:
    method: str
    sigma: int
    trial: int
    cost: float
    approx_error: float
    wall_time_seconds: float
    seed: int
    centers: list | None = field(default=None, compare=False)

    def sort_key(self):
        return (self.trial, self.sigma, self.method)


def sort_rows(rows):
    return sorted(rows, key=ReportRow.sort_key)


def emit_report(rows, path, fmt: str = "csv") -> None:
    """Write rows trial-major, then by sigma, then by method name."""
    rows = sort_rows(rows)
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(FIELDS)
            for r in rows:
                writer.writerow([r.method, r.sigma, r.trial, repr(float(r.cost)), repr(float(r.approx_error)),
                                 repr(float(r.wall_time_seconds)), r.seed])
    elif fmt == "json":
        payload = []
        for r in rows:
            obj = {k: getattr(r, k) for k in FIELDS}
            if r.centers is not None:
                obj["centers"] = np.asarray(r.centers, dtype=float).tolist()
            payload.append(obj)
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path, fmt: str | None = None) -> list[ReportRow]:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        return [ReportRow(**obj) for obj in json.loads(path.read_text(encoding="utf-8"))]
    with path.open(newline="", encoding="utf-8") as fh:
        return [ReportRow(r["method"], int(r["sigma"]), int(r["trial"]), float(r["cost"]),
                          float(r["approx_error"]), float(r["wall_time_seconds"]), int(r["seed"]))
                for r in csv.DictReader(fh)]


def summarize(rows) -> list[dict]:
    """Mean / standard error of the approximation error and the relative time per (method, sigma).

    Relative time divides each row's wall time by the same trial's ``full`` row.
    """
    full_time = {r.trial: r.wall_time_seconds for r in rows if r.method == "full"}
    groups: dict[tuple, list[ReportRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.sigma), []).append(r)
    out = []
    for (method, sigma), rs in sorted(groups.items()):
        err = np.array([r.approx_error for r in rs])
        rel = [r.wall_time_seconds / full_time[r.trial] for r in rs
               if full_time.get(r.trial, 0) > 0]
        out.append({
            "method": method,
            "sigma": sigma,
            "trials": len(rs),
            "mean_error": float(err.mean()),
            "stderr": float(err.std(ddof=1) / math.sqrt(len(err))) if len(err) > 1 else 0.0,
            "mean_cost": float(np.mean([r.cost for r in rs])),
            "relative_time": float(np.mean(rel)) if rel else float("nan"),
        })
    return out


