"""Convergence metrics and bound machinery for GGE.

Covers the subgradient view of a GGE step, the per-iteration improvement
terms over randomized gossip, the topology constant A(G) (worst-case expected
one-step contraction), its max-degree lower bound, and averaging-time
estimates and bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .engine import NO_BUDGET, EngineConfig, run_trial
from .engine import kernels
from .topology import (Graph, expected_gossip_matrix, lambda2, max_degree,
                       second_eigenvector)


class AnalysisError(ValueError):
    pass


class NonConvergence(RuntimeError):
    """An estimator did not converge within its iteration cap."""


# -- elementary quantities --------------------------------------------------

def _is_constant(x: np.ndarray) -> bool:
    return x.size == 0 or bool(np.all(x == x[0]))


def relative_error(x, x0) -> float:
    """``||x - xbar|| / ||x0 - xbar||`` with ``xbar`` the mean of ``x0``; 0 if x0 is constant."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x.shape != x0.shape:
        raise AnalysisError("x and x0 differ in length")
    if _is_constant(x0):
        return 0.0
    xbar = x0.mean()
    return float(np.linalg.norm(x - xbar) / np.linalg.norm(x0 - xbar))


def subgradient(x, s: int, t: int, g: Graph | None = None) -> np.ndarray:
    """Subgradient of the initiator's cost term at ``x`` for the pair (s, t)."""
    x = np.asarray(x, dtype=float)
    if g is not None and t not in g.neighbors[s]:
        raise AnalysisError(f"{t} is not a neighbour of {s}")
    if s == t:
        raise AnalysisError("s and t must differ")
    out = np.zeros_like(x)
    d = x[s] - x[t]
    out[s] = d
    out[t] = -d
    return out


def _neighbor_sq_diffs(x: np.ndarray, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    indptr, indices, _ = g.csr
    rows = np.repeat(np.arange(g.n), np.diff(indptr))
    return (x[rows] - x[indices]) ** 2, indptr


def gge_cost(x, g: Graph) -> float:
    """``sum_i max_{j in N_i} (x_i - x_j)^2 / 2``."""
    d2, indptr = _neighbor_sq_diffs(np.asarray(x, dtype=float), g)
    return 0.5 * float(np.maximum.reduceat(d2, indptr[:-1]).sum())


def rg_bound(lambda2_value: float, k: int, e0: float) -> float:
    """Squared-error bound ``e0^2 * lambda2^k`` for randomized gossip."""
    if not 0.0 <= lambda2_value < 1.0:
        raise AnalysisError("lambda2 must lie in [0, 1)")
    return e0 * e0 * lambda2_value ** k


# -- improvement terms over randomized gossip -------------------------------

@dataclass(frozen=True)
class XiEstimate:
    i: int
    xi: float
    stderr: float
    trials: int


@njit(cache=True)
def _greedy_gap(x, indptr, indices):
    """sum_s max_t (x_s-x_t)^2 - sum_s mean_t (x_s-x_t)^2."""
    acc = 0.0
    for s in range(x.shape[0]):
        mx = 0.0
        tot = 0.0
        for k in range(indptr[s], indptr[s + 1]):
            d = x[s] - x[indices[k]]
            d = d * d
            tot += d
            if d > mx:
                mx = d
        acc += mx - tot / (indptr[s + 1] - indptr[s])
    return acc


@njit(cache=True)
def _xi_samples(rng, x0, indptr, indices, rev, loc, trials, kmax, gap, sqerr):
    n = x0.shape[0]
    xbar = x0.mean()
    chain = np.empty(n + 1, dtype=np.int64)
    misses = np.empty((0, 2), dtype=np.int64)
    heard = np.ones(indices.shape[0], dtype=np.bool_)
    unheard = np.zeros(n, dtype=np.int64)
    cache = np.empty(indices.shape[0])
    for r in range(trials):
        x = x0.copy()
        for k in range(indices.shape[0]):
            cache[k] = x[indices[k]]
        for i in range(kmax):
            gap[r, i] = _greedy_gap(x, indptr, indices)
            sqerr[r, i] = kernels.sq_error(x, xbar)
            kernels.step(rng, kernels.ALG_GGE, 1, 0.0, True, -1, -1, x, indptr, indices,
                         rev, loc, cache, heard, unheard, chain, misses, False)


def _column_mean(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) for col in a.T]) / a.shape[0]


def estimate_xi_sequence(g: Graph, x0, kmax: int, trials: int, seed=0) -> list[XiEstimate]:
    """Monte Carlo estimates of the improvement terms for iterations 1..kmax.

    Uses GGE with exact neighbour knowledge and reliable broadcasts; the
    expectation is over initiator sequences, ties in the greedy choice are
    broken at random.  Iteration i uses the state after i-1 steps.
    """
    if kmax < 1 or trials < 1:
        raise AnalysisError("kmax and trials must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (g.n,):
        raise AnalysisError("x0 length does not match the graph")
    indptr, indices, rev = g.csr
    gap = np.empty((trials, kmax))
    sqerr = np.empty((trials, kmax))
    _xi_samples(np.random.default_rng(seed), x0, indptr, indices, rev, np.zeros((g.n, 2)),
                trials, kmax, gap, sqerr)
    out = []
    mg = _column_mean(gap)
    me = _column_mean(sqerr)
    for i in range(kmax):
        if me[i] <= 0.0 or _is_constant(x0):
            out.append(XiEstimate(i + 1, 0.0, 0.0, trials))
            continue
        ratio = mg[i] / me[i]
        xi = ratio / (2 * g.n)
        if trials > 1:
            # delta-method standard error of a ratio of means
            resid = gap[:, i] - ratio * sqerr[:, i]
            se = float(np.std(resid, ddof=1) / math.sqrt(trials) / me[i] / (2 * g.n))
        else:
            se = 0.0
        out.append(XiEstimate(i + 1, float(xi), se, trials))
    return out


def estimate_xi(g: Graph, x0, i: int, trials: int, seed=0) -> XiEstimate:
    if i < 1:
        raise AnalysisError("i must be >= 1")
    return estimate_xi_sequence(g, x0, i, trials, seed)[-1]


@dataclass(frozen=True)
class BoundCurve:
    """Squared-error bounds for k = 1..kmax."""

    gge: np.ndarray
    rg: np.ndarray
    xi: list[XiEstimate]
    lambda2: float


def gge_bound_curve(g: Graph, x0, kmax: int, trials: int, seed=0,
                    xi: list[XiEstimate] | None = None) -> BoundCurve:
    """``||x0 - xbar||^2 * prod_{i<=k} (lambda2 - xi_i)`` next to ``||x0 - xbar||^2 * lambda2^k``."""
    x0 = np.asarray(x0, dtype=float)
    lam = lambda2(expected_gossip_matrix(g))
    if xi is None:
        xi = estimate_xi_sequence(g, x0, kmax, trials, seed)
    e0sq = 0.0 if _is_constant(x0) else float(np.sum((x0 - x0.mean()) ** 2))
    factors = np.array([lam - e.xi for e in xi[:kmax]])
    gge = e0sq * np.cumprod(factors)
    rg = e0sq * lam ** np.arange(1, kmax + 1)
    return BoundCurve(gge, rg, list(xi[:kmax]), lam)


# -- worst-case contraction constant -----------------------------------------

def contraction_factor(x, g: Graph) -> float:
    """Expected one-step GGE contraction of the squared error at ``x``.

    Equals ``(1/n) sum_s (1 - ||g_s||^2 / (4 ||x - xbar||^2))`` where g_s is the
    subgradient for initiator s and its greedy partner.
    """
    x = np.asarray(x, dtype=float)
    if _is_constant(x):
        raise AnalysisError("contraction factor is undefined for a constant vector")
    e2 = float(np.sum((x - x.mean()) ** 2))
    d2, indptr = _neighbor_sq_diffs(x, g)
    gsq = 2.0 * np.maximum.reduceat(d2, indptr[:-1])
    return float(np.mean(1.0 - gsq / (4.0 * e2)))


@njit(cache=True)
def _objective(x, indptr, indices):
    # contraction factor for a zero-mean unit vector
    acc = 0.0
    for s in range(x.shape[0]):
        mx = 0.0
        for k in range(indptr[s], indptr[s + 1]):
            d = x[s] - x[indices[k]]
            d = d * d
            if d > mx:
                mx = d
        acc += mx
    return 1.0 - acc / (2.0 * x.shape[0])


@njit(cache=True)
def _project(x):
    x -= x.mean()
    nrm = math.sqrt(np.sum(x * x))
    if nrm > 0.0:
        x /= nrm
    return nrm


@njit(cache=True)
def _ascend(rng, x, indptr, indices, iters, step_hi, step_lo):
    """Projected incremental subgradient search from ``x`` (modified in place).

    Each iteration picks a random node s and takes a step against the
    subgradient of its term ``max_t (x_s - x_t)^2``, then projects back onto
    the zero-mean unit sphere.  Returns the best objective and its iterate.
    """
    n = x.shape[0]
    _project(x)
    best = _objective(x, indptr, indices)
    bestx = x.copy()
    half = iters // 2
    for it in range(iters):
        a = step_hi if it < half else step_lo
        s = rng.integers(0, n)
        t = -1
        mx = -1.0
        for k in range(indptr[s], indptr[s + 1]):
            d = x[s] - x[indices[k]]
            if d * d > mx:
                mx = d * d
                t = indices[k]
        d = x[s] - x[t]
        x[s] -= a * 2.0 * d
        x[t] += a * 2.0 * d
        if _project(x) == 0.0:
            break
        f = _objective(x, indptr, indices)
        if f > best:
            best = f
            bestx[:] = x
    return best, bestx


@dataclass
class AEstimate:
    value: float
    x: np.ndarray
    restarts: int
    iterations: int
    per_restart: list[float] = field(default_factory=list)


def maximize_contraction(g: Graph, restarts: int = 50, iters: int = 5000,
                         steps: tuple[float, float] = (0.1, 0.01), seed=0) -> AEstimate:
    """Search for the x maximizing the one-step contraction (the constant A(G)).

    Restart 0 starts from the second eigenvector of the expected gossip
    matrix; the others from Gaussian draws.  Restart r is seeded from
    ``(seed, r)``, so adding restarts never lowers the best value.
    """
    if restarts < 1 or iters < 1:
        raise AnalysisError("restarts and iters must be >= 1")
    indptr, indices, _ = g.csr
    best = -np.inf
    bestx = None
    vals = []
    for r in range(restarts):
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, r])
        if r == 0:
            x = second_eigenvector(expected_gossip_matrix(g))
        else:
            x = rng.standard_normal(g.n)
        if np.all(x == x[0]):
            x = np.arange(g.n, dtype=float)
        val, xr = _ascend(rng, x, indptr, indices, iters, steps[0], steps[1])
        vals.append(float(val))
        if val > best:
            best, bestx = float(val), xr
    return AEstimate(best, bestx, restarts, iters, vals)


def estimate_A(g: Graph, restarts: int = 50, iters: int = 5000,
               steps: tuple[float, float] = (0.1, 0.01), seed=0) -> float:
    return maximize_contraction(g, restarts, iters, steps, seed).value


def a_lower_bound(g: Graph) -> float:
    """``1 - d_max (1 - lambda2)``; may be negative."""
    return 1.0 - max_degree(g) * (1.0 - lambda2(expected_gossip_matrix(g)))


def tave_bound(contraction: float, epsilon: float) -> float:
    """``3 log(1/eps) / log(1/contraction)`` iterations."""
    if not 0.0 < epsilon < 1.0:
        raise AnalysisError("epsilon must lie in (0, 1)")
    if not 0.0 <= contraction < 1.0:
        raise AnalysisError("contraction must lie in [0, 1)")
    if contraction == 0.0:
        return 0.0
    return 3.0 * math.log(1.0 / epsilon) / math.log(1.0 / contraction)


def estimate_tave(g: Graph, cfg: EngineConfig, x0, epsilon: float, runs: int, seed=0,
                  max_iters: int = 10_000_000, start_iters: int | None = None) -> int:
    """Empirical epsilon-averaging time in iterations.

    The smallest k at which at most a fraction epsilon of the runs still has
    relative error >= epsilon, and the same holds at every iteration up to 2k.
    """
    if not 0.0 < epsilon < 1.0:
        raise AnalysisError("epsilon must lie in (0, 1)")
    if epsilon * runs < 1.0:
        raise AnalysisError("need runs >= 1/epsilon")
    x0 = np.asarray(x0, dtype=float)
    cap = start_iters or 64 * g.n
    allowed = epsilon * runs + 1e-9
    while True:
        counts = np.zeros(cap + 1, dtype=np.int64)
        for r in range(runs):
            tr = run_trial(g, x0, cfg, NO_BUDGET, seed=[int(seed) & 0xFFFFFFFFFFFFFFFF, r],
                           max_steps=cap)
            counts[: len(tr.rel_err)] += tr.rel_err >= epsilon
        ok = counts <= allowed
        # next_bad[k] = first index >= k that violates the fraction condition
        idx = np.where(ok, cap + 1, np.arange(cap + 1))
        next_bad = np.minimum.accumulate(idx[::-1])[::-1]
        ks = np.arange(cap // 2 + 1)
        good = next_bad[ks] > 2 * ks
        if good.any():
            return int(ks[np.argmax(good)])
        if cap >= max_iters:
            raise NonConvergence(f"no averaging time found within {max_iters} iterations")
        cap = min(2 * cap, max_iters)


# -- per-graph bound summary -------------------------------------------------

@dataclass
class BoundsReport:
    n: int
    d_max: int
    lambda2: float
    A_estimate: float
    A_lower: float
    tave_bound_gge: float
    tave_bound_rg: float
    epsilon: float
    restarts: int
    iterations: int
    best_objective: float

    FIELDS = ("n", "d_max", "lambda2", "A_estimate", "A_lower", "tave_bound_gge",
              "tave_bound_rg", "epsilon", "restarts", "iterations", "best_objective")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_kv(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def bounds_report(g: Graph, epsilon: float = 0.01, restarts: int = 50, iters: int = 5000,
                  seed=0) -> tuple[BoundsReport, AEstimate]:
    lam = lambda2(expected_gossip_matrix(g))
    est = maximize_contraction(g, restarts, iters, seed=seed)
    rep = BoundsReport(
        n=g.n, d_max=max_degree(g), lambda2=lam, A_estimate=est.value,
        A_lower=1.0 - max_degree(g) * (1.0 - lam),
        tave_bound_gge=tave_bound(max(est.value, 0.0), epsilon),
        tave_bound_rg=tave_bound(max(lam, 0.0), epsilon),
        epsilon=epsilon, restarts=restarts, iterations=iters, best_objective=est.value)
    return rep, est
