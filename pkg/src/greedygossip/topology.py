"""Communication graphs for gossip: random geometric graphs, grids, and the
expected randomized-gossip update matrix.

Graphs are undirected, unweighted and immutable.  Node ids are ``0..n-1``.
"""

from __future__ import annotations

import io
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_REDRAW_LIMIT = 1000
MAX_DENSE_NODES = 2000
EIG_TOL = 1e-9


class TopologyError(ValueError):
    """Raised for invalid graphs or graph generation failures."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with optional planar node locations.

    Attributes:
        n: node count.
        neighbors: per-node sorted tuple of adjacent node ids.
        locations: ``(n, 2)`` array of coordinates in the unit square, or None.
        meta: generation metadata (kind, seed, redraws, ...).
    """

    n: int
    neighbors: tuple[tuple[int, ...], ...]
    locations: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.neighbors) != self.n:
            raise TopologyError(f"expected {self.n} neighbor lists, got {len(self.neighbors)}")
        for i, nbrs in enumerate(self.neighbors):
            if list(nbrs) != sorted(set(nbrs)):
                raise TopologyError(f"neighbors of {i} must be sorted and unique")
            for j in nbrs:
                if j == i:
                    raise TopologyError(f"self-loop at node {i}")
                if not 0 <= j < self.n:
                    raise TopologyError(f"node {i} has out-of-range neighbor {j}")
                if i not in self.neighbors[j]:
                    raise TopologyError(f"asymmetric adjacency between {i} and {j}")
        if self.locations is not None:
            loc = np.asarray(self.locations, dtype=float)
            if loc.shape != (self.n, 2):
                raise TopologyError(f"locations must have shape ({self.n}, 2)")
            loc.setflags(write=False)
            object.__setattr__(self, "locations", loc)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   locations=None, meta: dict | None = None) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise TopologyError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise TopologyError(f"edge ({i}, {j}) out of range for {n} nodes")
            adj[i].add(j)
            adj[j].add(i)
        nbrs = tuple(tuple(sorted(a)) for a in adj)
        return cls(n, nbrs, None if locations is None else np.asarray(locations, float),
                   dict(meta or {}))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(i, j)`` with ``i < j`` in lexicographic order."""
        return [(i, j) for i in range(self.n) for j in self.neighbors[i] if i < j]

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, indices, rev)`` adjacency arrays.

        Slot ``k`` in ``indptr[i]:indptr[i+1]`` is the directed edge
        ``i -> indices[k]``; ``rev[k]`` is the slot of the reverse edge.
        """
        deg = self.degrees
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.fromiter((j for nb in self.neighbors for j in nb),
                              dtype=np.int64, count=int(indptr[-1]))
        slot = {}
        for i in range(self.n):
            for k in range(indptr[i], indptr[i + 1]):
                slot[(i, int(indices[k]))] = k
        rev = np.array([slot[(int(indices[k]), i)]
                        for i in range(self.n) for k in range(indptr[i], indptr[i + 1])],
                       dtype=np.int64)
        for a in (indptr, indices, rev):
            a.setflags(write=False)
        return indptr, indices, rev


def connectivity_radius(n: int) -> float:
    """Standard RGG radius ``sqrt(2 ln n / n)``."""
    return math.sqrt(2.0 * math.log(n) / n)


def _rgg_edges(points: np.ndarray, r: float) -> list[tuple[int, int]]:
    pairs = cKDTree(points).query_pairs(r, output_type="ndarray")
    if len(pairs) == 0:
        return []
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    return [tuple(p) for p in pairs[d < r].tolist()]


def generate_rgg(n: int, seed: int, redraw_limit: int = DEFAULT_REDRAW_LIMIT,
                 radius: float | None = None) -> Graph:
    """Connected random geometric graph on ``n`` uniform points in the unit square.

    Nodes closer than ``radius`` (default ``connectivity_radius(n)``) are joined.
    Disconnected draws are rejected and redrawn from the next derived seed;
    the number of redraws is stored in ``meta["redraws"]``.
    """
    if n < 2:
        raise TopologyError("an RGG needs n >= 2")
    r = connectivity_radius(n) if radius is None else float(radius)
    for attempt in range(redraw_limit + 1):
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, attempt])
        pts = rng.random((n, 2))
        g = Graph.from_edges(n, _rgg_edges(pts, r), pts,
                             meta={"kind": "rgg", "seed": int(seed), "radius": r,
                                   "redraws": attempt})
        if is_connected(g):
            return g
    raise TopologyError(f"could not realize connected RGG with n={n} after "
                        f"{redraw_limit} redraws")


def generate_grid(side: int) -> Graph:
    """``side x side`` 4-connected lattice with locations scaled into [0, 1]^2."""
    if side < 2:
        raise TopologyError("grid side must be >= 2")
    idx = lambda r, c: r * side + c  # noqa: E731
    edges = []
    for r in range(side):
        for c in range(side):
            if c + 1 < side:
                edges.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < side:
                edges.append((idx(r, c), idx(r + 1, c)))
    loc = np.array([(c / (side - 1), r / (side - 1))
                    for r in range(side) for c in range(side)])
    return Graph.from_edges(side * side, edges, loc, meta={"kind": "grid", "side": side})


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        i = queue.popleft()
        for j in g.neighbors[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                queue.append(j)
    return count == g.n


def max_degree(g: Graph) -> int:
    return max((len(nb) for nb in g.neighbors), default=0)


def expected_gossip_matrix(g: Graph) -> np.ndarray:
    """Expected one-step randomized gossip matrix for the natural random walk.

    One iteration activates ``s`` uniformly and picks ``t`` uniformly from
    ``N_s``, then replaces both values by their mean, i.e. applies
    ``W_st = I - (e_s - e_t)(e_s - e_t)^T / 2``.  The unordered pair {i, j}
    is chosen with probability ``p_ij = (1/n)(1/|N_i| + 1/|N_j|)``, so

        E[W] = I - 1/2 * sum_{i<j, (i,j) in E} p_ij (e_i - e_j)(e_i - e_j)^T.
    """
    if not is_connected(g):
        raise TopologyError("expected gossip matrix requires a connected graph")
    if g.n > MAX_DENSE_NODES:
        raise TopologyError(f"dense spectra are limited to n <= {MAX_DENSE_NODES}")
    deg = g.degrees.astype(float)
    w = np.eye(g.n)
    for i, j in g.edges():
        half_p = 0.5 * (1.0 / deg[i] + 1.0 / deg[j]) / g.n
        w[i, i] -= half_p
        w[j, j] -= half_p
        w[i, j] += half_p
        w[j, i] += half_p
    return w


def lambda2(m: np.ndarray) -> float:
    """Second-largest eigenvalue of a symmetric stochastic matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise TopologyError("lambda2 needs a square matrix")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
        raise TopologyError("lambda2 needs a symmetric matrix")
    if m.shape[0] < 2:
        raise TopologyError("lambda2 needs at least two nodes")
    return float(np.linalg.eigvalsh(m)[-2])


def second_eigenvector(m: np.ndarray) -> np.ndarray:
    """Unit eigenvector for ``lambda2(m)``."""
    _, vecs = np.linalg.eigh(np.asarray(m, dtype=float))
    return vecs[:, -2].copy()


# -- edge-list serialization -------------------------------------------------

def write_edge_list(g: Graph) -> str:
    """Serialize as ``n <count>``, then ``i j`` lines (i < j), then ``loc i x y``."""
    out = io.StringIO()
    out.write(f"n {g.n}\n")
    for i, j in g.edges():
        out.write(f"{i} {j}\n")
    if g.locations is not None:
        for i, (x, y) in enumerate(g.locations):
            out.write(f"loc {i} {x:.17g} {y:.17g}\n")
    return out.getvalue()


def read_edge_list(text: str | Sequence[str]) -> Graph:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    n = None
    edges = []
    locs: dict[int, tuple[float, float]] = {}
    for lineno, raw in enumerate(lines, 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "n" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "loc" and len(parts) == 4:
                locs[int(parts[1])] = (float(parts[2]), float(parts[3]))
            elif len(parts) == 2:
                edges.append((int(parts[0]), int(parts[1])))
            else:
                raise ValueError(raw)
        except ValueError:
            raise TopologyError(f"line {lineno}: cannot parse {raw!r}") from None
    if n is None:
        raise TopologyError("missing 'n <count>' header")
    loc = None
    if locs:
        if sorted(locs) != list(range(n)):
            raise TopologyError("loc section must cover every node exactly once")
        loc = np.array([locs[i] for i in range(n)])
    return Graph.from_edges(n, edges, loc)
