"""Result tables: per-run samples, transmission-bucket aggregates, CSV output."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..engine import Trace

RUNS_HEADER = "algorithm,graph_id,run_id,k,tx,rel_err"
AGG_HEADER = "algorithm,tx_bucket,mean_rel_err,stderr"


def fmt(v) -> str:
    """Integers as-is, reals with 17 significant digits."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def bucket_edges(budget: int, width: int) -> np.ndarray:
    return np.arange(0, math.ceil(budget / width) + 1, dtype=np.int64) * width


def sample_trace(trace: Trace, width: int, budget: int) -> Trace:
    """Keep only the rows needed to evaluate the run at every bucket edge.

    That is, for each edge the last row with ``tx <= edge``, plus the initial
    and final rows.
    """
    edges = bucket_edges(budget, width)
    idx = np.searchsorted(trace.tx, edges, side="right") - 1
    keep = np.unique(np.concatenate(([0, len(trace.tx) - 1], idx[idx >= 0])))
    return Trace(trace.k[keep], trace.tx[keep], trace.rel_err[keep], dict(trace.meta))


def values_at(trace: Trace, edges: np.ndarray) -> np.ndarray:
    """Relative error after the last step with ``tx <= edge`` (initial error if none)."""
    idx = np.searchsorted(trace.tx, edges, side="right") - 1
    return trace.rel_err[np.maximum(idx, 0)]


@dataclass
class Curve:
    algorithm: str
    tx: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray

    def tx_to_reach(self, level: float) -> int | None:
        hit = np.flatnonzero(self.mean <= level)
        return int(self.tx[hit[0]]) if hit.size else None

    def at(self, tx: int) -> float:
        return float(self.mean[np.searchsorted(self.tx, tx)])


@dataclass
class ResultTable:
    """Sampled runs keyed by ``(algorithm, graph_id, run_id)``."""

    budget: int
    width: int
    runs: dict[tuple[str, int, int], Trace] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, algorithm: str, graph_id: int, run_id: int, trace: Trace):
        self.runs[(algorithm, graph_id, run_id)] = sample_trace(trace, self.width, self.budget)

    def keys(self) -> list[tuple[str, int, int]]:
        return sorted(self.runs)

    def algorithms(self) -> list[str]:
        return sorted({k[0] for k in self.runs})

    def curve(self, algorithm: str) -> Curve:
        edges = bucket_edges(self.budget, self.width)
        vals = np.array([values_at(self.runs[k], edges) for k in self.keys()
                         if k[0] == algorithm])
        if vals.size == 0:
            raise KeyError(algorithm)
        mean = np.array([math.fsum(c) for c in vals.T]) / len(vals)
        if len(vals) > 1:
            se = np.std(vals, axis=0, ddof=1) / math.sqrt(len(vals))
        else:
            se = np.zeros_like(mean)
        return Curve(algorithm, edges, mean, se)

    def curves(self) -> dict[str, Curve]:
        return {a: self.curve(a) for a in self.algorithms()}

    def raw_rows(self):
        for key in self.keys():
            tr = self.runs[key]
            for k, tx, e in zip(tr.k.tolist(), tr.tx.tolist(), tr.rel_err.tolist()):
                yield (*key, k, tx, e)

    def aggregate_rows(self):
        for alg, c in self.curves().items():
            for tx, m, s in zip(c.tx.tolist(), c.mean.tolist(), c.stderr.tolist()):
                yield alg, tx, m, s

    def write(self, out_dir, prefix: str = "") -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "runs": out_dir / f"{prefix}runs.csv",
            "aggregate": out_dir / f"{prefix}aggregate.csv",
            "metadata": out_dir / f"{prefix}metadata.txt",
        }
        write_csv(paths["runs"], RUNS_HEADER, self.raw_rows())
        write_csv(paths["aggregate"], AGG_HEADER, self.aggregate_rows())
        meta = {"budget": self.budget, "bucket_width": self.width, **self.meta}
        write_kv(paths["metadata"], meta)
        return paths


def write_csv(path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_kv(path, items: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {fmt(v)}\n")


def read_runs_csv(path) -> list[tuple[str, int, int, int, int, float]]:
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != RUNS_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            a, g, r, k, tx, e = line.rstrip("\n").split(",")
            rows.append((a, int(g), int(r), int(k), int(tx), float(e)))
    return rows
