"""Gossip protocol state machine: GGE, randomized gossip and geographic gossip."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..topology import Graph
from . import kernels

ALGORITHMS = {"rg": kernels.ALG_RG, "gge": kernels.ALG_GGE, "geographic": kernels.ALG_GEO}
INIT_MODES = ("proposed", "broadcast", "ideal")
TX_MODES = ("three", "two")

NO_BUDGET = np.iinfo(np.int64).max // 4


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Algorithm choice and its knobs.

    ``hops``, ``miss_prob``, ``init_mode`` and ``tx_mode`` only affect GGE.
    The step size is the pairwise-averaging value 1/2; nothing else is supported.
    """

    algorithm: str = "gge"
    hops: int = 1
    miss_prob: float = 0.0
    init_mode: str = "proposed"
    tx_mode: str = "three"
    step_size: float = 0.5

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise EngineError(f"unknown algorithm {self.algorithm!r}")
        if int(self.hops) != self.hops or self.hops < 1:
            raise EngineError("hops must be an integer >= 1")
        if not 0.0 <= self.miss_prob < 1.0:
            raise EngineError("miss_prob must lie in [0, 1)")
        if self.init_mode not in INIT_MODES:
            raise EngineError(f"unknown init_mode {self.init_mode!r}")
        if self.tx_mode not in TX_MODES:
            raise EngineError(f"unknown tx_mode {self.tx_mode!r}")
        if self.step_size != 0.5:
            raise EngineError("only step_size = 0.5 (pairwise averaging) is supported")


@dataclass(frozen=True)
class StepReport:
    s: int
    partner: int
    chain: tuple[int, ...]
    tx_used: int
    misses: tuple[tuple[int, int], ...] = ()
    was_init_step: bool = False


@dataclass
class Trace:
    """Per-step ``(k, tx, rel_err)`` series of one run; row 0 is the initial state."""

    k: np.ndarray
    tx: np.ndarray
    rel_err: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.k)

    @property
    def steps(self) -> int:
        return int(self.k[-1])

    def tx_to_reach(self, level: float) -> int | None:
        """Cumulative transmissions at the first step with ``rel_err <= level``."""
        hit = np.flatnonzero(self.rel_err <= level)
        return int(self.tx[hit[0]]) if hit.size else None


class GossipState:
    """Live protocol state for one trial.

    ``cache`` and ``heard`` are aligned with the graph's CSR slots: for
    ``k in range(indptr[i], indptr[i+1])``, ``cache[k]`` is what node i last
    received from node ``indices[k]``.
    """

    def __init__(self, g: Graph, x0, rng: np.random.Generator):
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (g.n,):
            raise EngineError(f"x0 has length {x0.size}, graph has {g.n} nodes")
        self.graph = g
        self.indptr, self.indices, self.rev = g.csr
        self.x = x0.copy()
        m = len(self.indices)
        self.cache = np.zeros(m)
        self.heard = np.zeros(m, dtype=np.bool_)
        self.unheard = g.degrees.copy()
        self.k = 0
        self.tx = 0
        self.rng = rng
        self.loc = (np.zeros((g.n, 2)) if g.locations is None
                    else np.ascontiguousarray(g.locations, dtype=float))
        self._chain = np.empty(g.n + 1, dtype=np.int64)
        self._misses = np.empty((2 * int(self.unheard.max(initial=1)) + 2, 2), dtype=np.int64)

    def _slot(self, i: int, j: int) -> int:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = lo + int(np.searchsorted(self.indices[lo:hi], j))
        if pos >= hi or self.indices[pos] != j:
            raise EngineError(f"{j} is not a neighbour of {i}")
        return pos

    def fill_caches(self):
        """Give every node exact knowledge of its neighbours' current values."""
        self.cache[:] = self.x[self.indices]
        self.heard[:] = True
        self.unheard[:] = 0

    def cache_of(self, i: int) -> dict[int, float]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {int(self.indices[k]): float(self.cache[k])
                for k in range(lo, hi) if self.heard[k]}

    def heard_from(self, i: int) -> set[int]:
        return set(self.cache_of(i))

    def set_cache(self, i: int, j: int, value: float):
        k = self._slot(i, j)
        if not self.heard[k]:
            self.heard[k] = True
            self.unheard[i] -= 1
        self.cache[k] = value

    def initialized(self, i: int) -> bool:
        return self.unheard[i] == 0


def init_state(g: Graph, x0, cfg: EngineConfig, seed=None) -> GossipState:
    """Fresh state; caches and transmission count depend on ``cfg.init_mode``.

    ``seed`` may be an int, a SeedSequence-compatible value or a Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state = GossipState(g, x0, rng)
    if cfg.algorithm == "gge" and cfg.init_mode in ("ideal", "broadcast"):
        state.fill_caches()
        if cfg.init_mode == "broadcast":
            state.tx = g.n
    return state


def greedy_select(state: GossipState, s: int, hops: int = 1) -> list[int]:
    """Greedy hop chain from ``s`` (excluding s itself) using cached values."""
    if not state.initialized(s):
        raise EngineError(f"node {s} has not heard from all of its neighbours yet")
    if hops < 1:
        raise EngineError("hops must be >= 1")
    chain = state._chain
    clen = kernels.greedy_chain(state.rng, s, hops, state.x, state.indptr, state.indices,
                                state.cache, state.heard, chain)
    return [int(c) for c in chain[1:clen]]


def _step(state: GossipState, algo: int, cfg: EngineConfig, initiator, target) -> StepReport:
    s_forced = -1 if initiator is None else int(initiator)
    t_forced = -1 if target is None else int(target)
    if not -1 <= s_forced < state.graph.n or not -1 <= t_forced < state.graph.n:
        raise EngineError("node id out of range")
    s, clen, tx, nmiss, was_init, _ = kernels.step(
        state.rng, algo, cfg.hops, cfg.miss_prob, cfg.tx_mode == "three", s_forced, t_forced,
        state.x, state.indptr, state.indices, state.rev, state.loc, state.cache,
        state.heard, state.unheard, state._chain, state._misses, True)
    state.k += 1
    state.tx += int(tx)
    chain = tuple(int(c) for c in state._chain[:clen])
    nrec = min(int(nmiss), len(state._misses))
    misses = tuple((int(a), int(b)) for a, b in state._misses[:nrec])
    return StepReport(int(s), chain[-1], chain, int(tx), misses, bool(was_init))


def step_gge(state: GossipState, cfg: EngineConfig, initiator: int | None = None) -> StepReport:
    """One GGE iteration.

    The initiator picks a partner greedily from its cache (or uniformly among
    unheard neighbours while still initializing), the pair averages its true
    values and both endpoints broadcast the result to eavesdropping neighbours.
    """
    return _step(state, kernels.ALG_GGE, cfg, initiator, None)


def step_rg(state: GossipState, cfg: EngineConfig | None = None,
            initiator: int | None = None) -> StepReport:
    return _step(state, kernels.ALG_RG, cfg or EngineConfig("rg"), initiator, None)


def step_geographic(state: GossipState, cfg: EngineConfig | None = None,
                    initiator: int | None = None, target: int | None = None) -> StepReport:
    if state.graph.locations is None:
        raise EngineError("geographic gossip needs node locations")
    return _step(state, kernels.ALG_GEO, cfg or EngineConfig("geographic"), initiator, target)


def step(state: GossipState, cfg: EngineConfig, initiator: int | None = None) -> StepReport:
    if cfg.algorithm == "gge":
        return step_gge(state, cfg, initiator)
    if cfg.algorithm == "rg":
        return step_rg(state, cfg, initiator)
    return step_geographic(state, cfg, initiator)


def run_state(state: GossipState, cfg: EngineConfig, budget: int = NO_BUDGET,
              max_steps: int | None = None, tol: float = 0.0) -> Trace:
    """Advance an existing state; see :func:`run_trial`."""
    if budget <= 0:
        raise EngineError("budget must be positive")
    if cfg.algorithm == "geographic" and state.graph.locations is None:
        raise EngineError("geographic gossip needs node locations")
    if max_steps is None:
        if budget >= NO_BUDGET:
            raise EngineError("give a transmission budget or max_steps")
        max_steps = NO_BUDGET
    cap = min(max_steps, max(0, budget - state.tx) // 2 + 1) + 1
    out_k = np.empty(cap, dtype=np.int64)
    out_tx = np.empty(cap, dtype=np.int64)
    out_err = np.empty(cap, dtype=np.float64)
    rows = kernels.run(state.rng, ALGORITHMS[cfg.algorithm], cfg.hops, cfg.miss_prob,
                       cfg.tx_mode == "three", state.x, state.indptr, state.indices,
                       state.rev, state.loc, state.cache, state.heard, state.unheard,
                       state.tx, budget, max_steps, tol, out_k, out_tx, out_err)
    state.k += int(out_k[rows - 1])
    state.tx = int(out_tx[rows - 1])
    return Trace(out_k[:rows].copy(), out_tx[:rows].copy(), out_err[:rows].copy())


def run_trial(g: Graph, x0, cfg: EngineConfig, budget: int = NO_BUDGET, seed=None,
              max_steps: int | None = None, tol: float = 0.0) -> Trace:
    """Run one trial until ``tx >= budget`` (or ``max_steps`` iterations, or
    relative error ``<= tol`` when ``tol > 0``).

    Relative error is measured against the average of ``x0`` and is 0 for a
    constant ``x0``.  Deterministic given ``seed``.
    """
    state = init_state(g, x0, cfg, seed)
    trace = run_state(state, cfg, budget, max_steps, tol)
    trace.meta.update(algorithm=cfg.algorithm, hops=cfg.hops, miss_prob=cfg.miss_prob,
                      init_mode=cfg.init_mode, tx_mode=cfg.tx_mode)
    return trace
