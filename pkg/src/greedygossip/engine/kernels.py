"""Compiled gossip step kernels.

All per-node neighbour data lives in CSR slots: slot ``k`` in
``indptr[i]:indptr[i+1]`` is the directed edge ``i -> indices[k]``, so
``cache[k]`` is node i's last received value of ``indices[k]`` and
``heard[k]`` says whether i has received anything from it yet.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ALG_RG = 0
ALG_GGE = 1
ALG_GEO = 2


@njit(cache=True)
def _in_chain(chain, clen, j):
    for c in range(clen):
        if chain[c] == j:
            return True
    return False


@njit(cache=True)
def pick_unheard(rng, s, indptr, heard, unheard):
    """Slot of a neighbour of ``s`` drawn uniformly from those not yet heard."""
    c = rng.integers(0, unheard[s])
    for k in range(indptr[s], indptr[s + 1]):
        if not heard[k]:
            if c == 0:
                return k
            c -= 1
    return -1


@njit(cache=True)
def best_cached(rng, node, ref, indptr, indices, cache, heard, chain, clen):
    """Among heard neighbours of ``node`` outside the chain, the slot whose
    cached value maximizes ``(ref - cache)**2``.  Ties are uniform."""
    best = -1.0
    bestk = -1
    ties = 0
    for k in range(indptr[node], indptr[node + 1]):
        if not heard[k] or _in_chain(chain, clen, indices[k]):
            continue
        d = ref - cache[k]
        d = d * d
        if d > best:
            best = d
            bestk = k
            ties = 1
        elif d == best:
            ties += 1
            if rng.integers(0, ties) == 0:
                bestk = k
    return bestk, best


@njit(cache=True)
def greedy_chain(rng, s, hops, x, indptr, indices, cache, heard, chain):
    """Fill ``chain`` with s followed by the greedy hop sequence; return its length."""
    chain[0] = s
    k, _ = best_cached(rng, s, x[s], indptr, indices, cache, heard, chain, 1)
    chain[1] = indices[k]
    clen = 2
    xs = x[s]
    for _h in range(1, hops):
        cur = chain[clen - 1]
        k, d = best_cached(rng, cur, xs, indptr, indices, cache, heard, chain, clen)
        if k < 0:
            break
        own = xs - x[cur]
        if d > own * own:
            chain[clen] = indices[k]
            clen += 1
        else:
            break
    return clen


@njit(cache=True)
def broadcast(rng, src, v, p, indptr, indices, rev, cache, heard, unheard,
              chain, clen, misses, nmiss, record):
    """Deliver ``src``'s new value ``v`` to its neighbours.

    Chain members get it reliably; everyone else misses it with probability p.
    """
    for k in range(indptr[src], indptr[src + 1]):
        j = indices[k]
        rk = rev[k]
        if _in_chain(chain, clen, j) or p == 0.0 or rng.random() >= p:
            cache[rk] = v
            if not heard[rk]:
                heard[rk] = True
                unheard[j] -= 1
        else:
            if record and nmiss < misses.shape[0]:
                misses[nmiss, 0] = src
                misses[nmiss, 1] = j
            nmiss += 1
    return nmiss


@njit(cache=True)
def geographic_route(s, target, indptr, indices, loc, chain):
    """Greedy Euclidean route from s towards ``target``; return chain length.

    The first hop always goes to the neighbour closest to the target so that
    every exchange involves two distinct nodes; later hops need strict progress.
    """
    tx_ = loc[target, 0]
    ty_ = loc[target, 1]
    chain[0] = s
    clen = 1
    cur = s
    dx = loc[s, 0] - tx_
    dy = loc[s, 1] - ty_
    dcur = dx * dx + dy * dy
    while cur != target:
        bestj = -1
        bestd = np.inf
        for k in range(indptr[cur], indptr[cur + 1]):
            j = indices[k]
            dx = loc[j, 0] - tx_
            dy = loc[j, 1] - ty_
            d = dx * dx + dy * dy
            if d < bestd:
                bestd = d
                bestj = j
        if bestj < 0 or (clen > 1 and not bestd < dcur):
            break
        chain[clen] = bestj
        clen += 1
        cur = bestj
        if not bestd < dcur:
            break
        dcur = bestd
    return clen


@njit(cache=True)
def step(rng, algo, hops, p, tx_three, s_forced, target_forced, x,
         indptr, indices, rev, loc, cache, heard, unheard, chain, misses, record):
    """One gossip iteration in place.

    Returns ``(s, chain_len, tx_used, n_missed, was_init, d2)`` where
    ``d2 = (x_s - x_w)**2`` for the pair that averaged, taken before the update.
    """
    n = x.shape[0]
    s = s_forced if s_forced >= 0 else rng.integers(0, n)
    was_init = False
    nmiss = 0
    if algo == ALG_RG:
        deg = indptr[s + 1] - indptr[s]
        chain[0] = s
        chain[1] = indices[indptr[s] + rng.integers(0, deg)]
        clen = 2
        tx = 2
    elif algo == ALG_GEO:
        if target_forced >= 0:
            target = target_forced
        else:
            target = rng.integers(0, n - 1)
            if target >= s:
                target += 1
        clen = geographic_route(s, target, indptr, indices, loc, chain)
        tx = 2 * (clen - 1)
    else:
        if unheard[s] > 0:
            k = pick_unheard(rng, s, indptr, heard, unheard)
            chain[0] = s
            chain[1] = indices[k]
            clen = 2
            was_init = True
        else:
            clen = greedy_chain(rng, s, hops, x, indptr, indices, cache, heard, chain)
        h = clen - 1
        if h == 1:
            tx = 3 if tx_three else 2
        else:
            tx = 2 * h + 1
    w = chain[clen - 1]
    d = x[s] - x[w]
    v = 0.5 * (x[s] + x[w])
    x[s] = v
    x[w] = v
    if algo == ALG_GGE:
        nmiss = broadcast(rng, s, v, p, indptr, indices, rev, cache, heard, unheard,
                          chain, clen, misses, nmiss, record)
        nmiss = broadcast(rng, w, v, p, indptr, indices, rev, cache, heard, unheard,
                          chain, clen, misses, nmiss, record)
    return s, clen, tx, nmiss, was_init, d * d


@njit(cache=True)
def sq_error(x, xbar):
    acc = 0.0
    for i in range(x.shape[0]):
        d = x[i] - xbar
        acc += d * d
    return acc


@njit(cache=True)
def run(rng, algo, hops, p, tx_three, x, indptr, indices, rev, loc, cache, heard,
        unheard, tx0, budget, max_steps, tol, out_k, out_tx, out_err):
    """Step until ``tx >= budget``, ``max_steps`` iterations, or rel. error <= tol.

    Writes (k, tx, rel_err) after every step (row 0 is the initial state) and
    returns the number of rows written.  The squared error is tracked through
    the per-step decrease ``d2 / 2`` and recomputed exactly every n steps.
    """
    n = x.shape[0]
    xbar = 0.0
    for i in range(n):
        xbar += x[i]
    xbar /= n
    err0 = sq_error(x, xbar)
    if x.max() == x.min():
        err0 = 0.0
    err2 = err0
    chain = np.empty(n + 1, dtype=np.int64)
    misses = np.empty((0, 2), dtype=np.int64)
    out_k[0] = 0
    out_tx[0] = tx0
    out_err[0] = 1.0 if err0 > 0.0 else 0.0
    rows = 1
    k = 0
    tx = tx0
    while tx < budget and k < max_steps and rows < out_k.shape[0]:
        res = step(rng, algo, hops, p, tx_three, -1, -1, x, indptr, indices, rev, loc,
                   cache, heard, unheard, chain, misses, False)
        k += 1
        tx += res[2]
        err2 -= 0.5 * res[5]
        if k % n == 0 or err2 <= 0.0:
            err2 = sq_error(x, xbar)
        rel = math.sqrt(err2 / err0) if err0 > 0.0 else 0.0
        if tol > 0.0 and rel <= tol:
            err2 = sq_error(x, xbar)
            rel = math.sqrt(err2 / err0) if err0 > 0.0 else 0.0
        out_k[rows] = k
        out_tx[rows] = tx
        out_err[rows] = rel
        rows += 1
        if tol > 0.0 and rel <= tol:
            break
    return rows
