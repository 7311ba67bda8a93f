"""Experiment orchestration: graphs x runs x algorithms with derived seeds."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..analysis import BoundsReport, bounds_report, estimate_tave
from ..engine import EngineConfig, run_trial
from ..fields import synthesize
from ..topology import Graph, generate_grid, generate_rgg, write_edge_list
from .config import AlgorithmSpec, ExperimentConfig
from .results import ResultTable, fmt, write_csv, write_kv
from .seeds import derive_seed

log = logging.getLogger(__name__)


class ExperimentError(RuntimeError):
    pass


def realize_graph(cfg: ExperimentConfig, graph_id: int, size: int | None = None) -> Graph:
    """Graph ``graph_id`` of the experiment; ``size`` overrides n (rgg) or side (grid)."""
    if cfg.topology == "grid":
        return generate_grid(size or cfg.side)
    n = size or cfg.n
    return generate_rgg(n, derive_seed(cfg.seed, "graph", n, graph_id))


def realize_graphs(cfg: ExperimentConfig, size: int | None = None) -> list[Graph]:
    count = 1 if cfg.topology == "grid" else cfg.graphs
    return [realize_graph(cfg, gid, size) for gid in range(count)]


def initial_values(cfg: ExperimentConfig, g: Graph, graph_id: int) -> np.ndarray:
    spec = replace(cfg.field, seed=derive_seed(cfg.seed, "field", graph_id, cfg.field.seed))
    return synthesize(spec, g)


def run_seed(cfg: ExperimentConfig, graph_id: int, run_id: int, engine: EngineConfig) -> int:
    # keyed by algorithm kind so that variants of one algorithm share streams
    return derive_seed(cfg.seed, "run", graph_id, run_id, engine.algorithm)


def _task(args):
    label, gid, rid, g, x0, engine, budget, seed, width = args
    table = ResultTable(budget, width)
    try:
        trace = run_trial(g, x0, engine, budget, seed=seed)
    except Exception as e:
        raise ExperimentError(f"{label}, graph {gid}, run {rid}: {e}") from e
    table.add(label, gid, rid, trace)
    return (label, gid, rid), table.runs[(label, gid, rid)]


def _map(fn, tasks, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(fn, tasks, chunksize=16)
    else:
        yield from map(fn, tasks)


def simulate(cfg: ExperimentConfig, algorithms=None, workers: int = 1) -> ResultTable:
    """Run every (graph, run, algorithm) combination and collect sampled traces."""
    algorithms = tuple(algorithms or cfg.algorithms)
    graphs = realize_graphs(cfg)
    table = ResultTable(cfg.budget, cfg.bucket)
    table.meta.update(topology=cfg.topology, n=graphs[0].n, graphs=len(graphs), runs=cfg.runs,
                      seed=cfg.seed, field=cfg.field.kind,
                      algorithms=" ".join(a.label for a in algorithms))
    for gid, g in enumerate(graphs):
        table.meta[f"graph{gid}_redraws"] = g.meta.get("redraws", 0)
    tasks = []
    for gid, g in enumerate(graphs):
        x0 = initial_values(cfg, g, gid)
        for rid in range(cfg.runs):
            for a in algorithms:
                tasks.append((a.label, gid, rid, g, x0, a.engine, cfg.budget,
                              run_seed(cfg, gid, rid, a.engine), cfg.bucket))
    for key, trace in _map(_task, tasks, workers):
        table.runs[key] = trace
    table.runs = dict(sorted(table.runs.items()))
    return table


def _finish(table: ResultTable, out, plot: bool, title: str) -> ResultTable:
    if out is not None:
        paths = table.write(out)
        if plot:
            from .plots import plot_curves
            plot_curves(table.curves(), Path(out) / "convergence.png", title)
        log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return table


def cmd_run(cfg: ExperimentConfig, out=None, workers: int = 1, plot: bool = False) -> ResultTable:
    return _finish(simulate(cfg, workers=workers), out, plot,
                   f"{cfg.field.kind} field, {cfg.topology} n={cfg.size}")


def _base_gge(cfg: ExperimentConfig) -> EngineConfig:
    for a in cfg.algorithms:
        if a.engine.algorithm == "gge":
            return a.engine
    return EngineConfig("gge")


def stale_algorithms(cfg: ExperimentConfig) -> list[AlgorithmSpec]:
    base = _base_gge(cfg)
    algos = [AlgorithmSpec(f"gge_p{p:g}", replace(base, miss_prob=float(p)))
             for p in cfg.miss_probs]
    return algos + [AlgorithmSpec("rg", EngineConfig("rg"))]


def cmd_stale(cfg: ExperimentConfig, out=None, workers: int = 1, plot: bool = False) -> ResultTable:
    return _finish(simulate(cfg, stale_algorithms(cfg), workers), out, plot,
                   "GGE with missed broadcasts")


def multihop_algorithms(cfg: ExperimentConfig) -> list[AlgorithmSpec]:
    base = _base_gge(cfg)
    return ([AlgorithmSpec("rg", EngineConfig("rg"))]
            + [AlgorithmSpec(f"gge_{h}hop", replace(base, hops=h)) for h in (1, 2, 3)]
            + [AlgorithmSpec("geographic", EngineConfig("geographic"))])


def cmd_multihop(cfg: ExperimentConfig, out=None, workers: int = 1,
                 plot: bool = False) -> ResultTable:
    return _finish(simulate(cfg, multihop_algorithms(cfg), workers), out, plot,
                   "multi-hop GGE")


BOUNDS_HEADER = "graph_id," + ",".join(BoundsReport.FIELDS)


def cmd_bounds(cfg: ExperimentConfig, out=None) -> list[BoundsReport]:
    reports = []
    for gid, g in enumerate(realize_graphs(cfg)):
        rep, _ = bounds_report(g, cfg.epsilon, cfg.restarts, cfg.iters,
                               seed=derive_seed(cfg.seed, "A", g.n, gid))
        reports.append(rep)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "bounds.csv", BOUNDS_HEADER,
                  ([gid, *r.as_dict().values()] for gid, r in enumerate(reports)))
        with open(out / "bounds.txt", "w", newline="\n") as fh:
            for gid, r in enumerate(reports):
                fh.write(f"[graph {gid}]\n{r.to_kv()}\n")
    return reports


@dataclass
class SweepRow:
    topology: str
    n: int
    graphs: int
    A_min: float
    A_mean: float
    A_max: float
    tave_min: float
    tave_mean: float
    tave_max: float
    tave_worst_mean: float
    bound_mean: float
    ref_rgg: float
    ref_grid: float

    FIELDS = ("topology", "n", "graphs", "A_min", "A_mean", "A_max", "tave_min", "tave_mean",
              "tave_max", "tave_worst_mean", "bound_mean", "ref_rgg", "ref_grid")


def cmd_sweep(cfg: ExperimentConfig, out=None, plot: bool = False) -> list[SweepRow]:
    """A(G) and empirical averaging time (iterations per node) against network size.

    Averaging times use GGE with exact initial neighbour knowledge, both for
    the configured field and for the x found by the A(G) search.
    """
    sizes = cfg.sizes or ((cfg.n,) if cfg.topology == "rgg" else (cfg.side,))
    engine = EngineConfig("gge", init_mode="ideal")
    rows = []
    for size in sizes:
        a_vals, t_vals, t_worst, bounds = [], [], [], []
        graphs = realize_graphs(cfg, size)
        for gid, g in enumerate(graphs):
            rep, est = bounds_report(g, cfg.epsilon, cfg.restarts, cfg.iters,
                                     seed=derive_seed(cfg.seed, "A", g.n, gid))
            x0 = initial_values(cfg, g, gid)
            tseed = derive_seed(cfg.seed, "tave", g.n, gid)
            a_vals.append(rep.A_estimate)
            t_vals.append(estimate_tave(g, engine, x0, cfg.epsilon, cfg.tave_runs, tseed) / g.n)
            t_worst.append(estimate_tave(g, engine, est.x, cfg.epsilon, cfg.tave_runs,
                                         tseed) / g.n)
            bounds.append(rep.tave_bound_gge / g.n)
            log.info("sweep n=%d graph %d: A=%.6f T/n=%.3f", g.n, gid, a_vals[-1], t_vals[-1])
        n = graphs[0].n
        rows.append(SweepRow(cfg.topology, n, len(graphs), min(a_vals), float(np.mean(a_vals)),
                             max(a_vals), min(t_vals), float(np.mean(t_vals)), max(t_vals),
                             float(np.mean(t_worst)), float(np.mean(bounds)),
                             1.5 * n / math.log(n), 2.5 * n))
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sweep.csv", ",".join(SweepRow.FIELDS),
                  ([getattr(r, f) for f in SweepRow.FIELDS] for r in rows))
        write_kv(out / "sweep_metadata.txt",
                 {"epsilon": cfg.epsilon, "tave_runs": cfg.tave_runs, "restarts": cfg.restarts,
                  "iters": cfg.iters, "seed": cfg.seed, "field": cfg.field.kind,
                  "tave_units": "iterations per node"})
        if plot:
            from .plots import plot_sweep
            plot_sweep(rows, out / "sweep.png")
    return rows


def cmd_topology(cfg: ExperimentConfig, out=None) -> list[str]:
    texts = [write_edge_list(g) for g in realize_graphs(cfg)]
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for gid, text in enumerate(texts):
            with open(out / f"graph_{gid}.txt", "w", newline="\n") as fh:
                fh.write(text)
    return texts


__all__ = ["ExperimentError", "SweepRow", "cmd_bounds", "cmd_multihop", "cmd_run", "cmd_stale",
           "cmd_sweep", "cmd_topology", "fmt", "initial_values", "multihop_algorithms",
           "realize_graph", "realize_graphs", "run_seed", "simulate", "stale_algorithms"]
