"""Undirected simple graphs in offset-indexed (CSR) form.

Generators, edge-list ingestion, degree-preserving rewiring and the
summary statistics used throughout the package live here.  A `Graph` is
immutable once built and may be shared freely between simulation runs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Raised for invalid graph input or impossible graph operations."""


class EdgeListError(GraphError):
    """Malformed edge-list text; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class Graph:
    """Immutable undirected simple graph.

    Neighbors of node ``v`` are ``indices[indptr[v]:indptr[v + 1]]``, sorted.
    Node ids are dense ``0..N-1``; ``labels`` optionally maps them back to the
    ids of the source data.
    """

    def __init__(self, indptr: np.ndarray, indices: np.ndarray,
                 labels: np.ndarray | None = None):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if labels is not None:
            labels = np.asarray(labels)
            labels.setflags(write=False)
        self.labels = labels
        self._check()

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> "Graph":
        """Build a simple graph on ``n`` nodes, dropping loops and repeats."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint outside 0..n-1")
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        if len(e):
            e = np.unique(e, axis=0)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst, labels)

    def _check(self) -> None:
        n = len(self.indptr) - 1
        if n < 0 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise GraphError("inconsistent offset array")
        deg = np.diff(self.indptr)
        if (deg < 0).any():
            raise GraphError("offsets must be non-decreasing")
        if len(self.indices) % 2:
            raise GraphError("degree sum must be even")
        src = np.repeat(np.arange(n), deg)
        if (src == self.indices).any():
            raise GraphError("self-loop present")
        fwd = src * n + self.indices
        if len(np.unique(fwd)) != len(fwd):
            raise GraphError("duplicate neighbor entry")
        if not np.array_equal(np.sort(fwd), np.sort(self.indices * n + src)):
            raise GraphError("adjacency is not symmetric")

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.setflags(write=False)
        return d

    @cached_property
    def adj(self) -> list[list[int]]:
        """Neighbor lists as plain Python ints, for tight simulation loops."""
        flat = self.indices.tolist()
        ptr = self.indptr.tolist()
        return [flat[ptr[v]:ptr[v + 1]] for v in range(self.node_count)]

    @cached_property
    def degree_list(self) -> list[int]:
        return self.degrees.tolist()

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """Each undirected edge once, as ``(u, v)`` rows with ``u < v``."""
        src = np.repeat(np.arange(self.node_count), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def to_sparse(self) -> sparse.csr_matrix:
        n = self.node_count
        data = np.ones(len(self.indices), dtype=np.int64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return False
        ncomp, _ = connected_components(self.to_sparse(), directed=False)
        return ncomp == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Graph(N={self.node_count}, M={self.edge_count})"


@dataclass(frozen=True)
class DegreeDistribution:
    """Normalized degree mass over ``k >= 1``.

    ``ks`` holds the support in increasing order and ``probs`` the matching
    probabilities.  ``node_count`` is the network size the mass refers to.
    """

    ks: np.ndarray
    probs: np.ndarray
    node_count: int

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        if ks.shape != probs.shape or ks.ndim != 1 or len(ks) == 0:
            raise ValueError("ks and probs must be equal-length 1-d arrays")
        if (ks < 1).any():
            raise ValueError("degree support must be >= 1")
        if (probs < 0).any():
            raise ValueError("negative probability")
        order = np.argsort(ks)
        ks, probs = ks[order], probs[order]
        if len(np.unique(ks)) != len(ks):
            raise ValueError("repeated degree in support")
        total = probs.sum()
        if total <= 0:
            raise ValueError("empty mass")
        probs = probs / total
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mass(cls, mass: dict[int, float], node_count: int) -> "DegreeDistribution":
        ks = np.fromiter(mass.keys(), dtype=np.int64)
        ps = np.fromiter(mass.values(), dtype=float)
        return cls(ks, ps, node_count)

    @classmethod
    def binomial(cls, n: int, q: float) -> "DegreeDistribution":
        """Degree law of G(n, q), conditioned on ``k >= 1``."""
        from scipy.stats import binom
        ks = np.arange(1, n)
        return cls(ks, binom.pmf(ks, n - 1, q), n)

    @classmethod
    def powerlaw(cls, tau: float, n: int, kmax: int | None = None,
                 kmin: int = 1) -> "DegreeDistribution":
        kmax = kmax or max(kmin, int(math.isqrt(n)))
        ks = np.arange(kmin, kmax + 1)
        return cls(ks, ks.astype(float) ** -tau, n)

    @property
    def mass(self) -> dict[int, float]:
        return dict(zip(self.ks.tolist(), self.probs.tolist()))

    @property
    def mean(self) -> float:
        return float(np.dot(self.ks, self.probs))

    @property
    def second_moment(self) -> float:
        return float(np.dot(self.ks.astype(float) ** 2, self.probs))


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    mean_degree: float
    second_moment: float
    clustering: float

    def as_lines(self) -> list[str]:
        return [
            f"N={self.node_count}",
            f"M={self.edge_count}",
            f"mean_degree={self.mean_degree:.6g}",
            f"second_moment={self.second_moment:.6g}",
            f"clustering={self.clustering:.6g}",
        ]


# --- ingestion ---------------------------------------------------------------

def load_edge_list(text: str | Iterable[str]) -> Graph:
    """Parse whitespace-separated ``u v`` lines; ``#`` starts a comment line.

    Node ids are compacted to ``0..N-1`` in order of first appearance; the
    original ids are kept in ``Graph.labels``.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    ids: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EdgeListError(f"expected two node ids, got {line!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"non-integer node id in {line!r}", lineno) from None
        pairs.append((ids.setdefault(a, len(ids)), ids.setdefault(b, len(ids))))
    if not ids:
        raise EdgeListError("edge list is empty")
    labels = np.fromiter(ids.keys(), dtype=np.int64, count=len(ids))
    return Graph.from_edges(len(ids), pairs, labels=labels)


def read_edge_list(path) -> Graph:
    try:
        with open(path) as fh:
            return load_edge_list(fh)
    except OSError as exc:
        raise GraphError(f"cannot read {path}: {exc.strerror}") from exc


def format_edge_list(g: Graph) -> str:
    rows = g.edges()
    if g.labels is not None:
        rows = g.labels[rows]
    return "".join(f"{u} {v}\n" for u, v in rows.tolist())


# --- structure ---------------------------------------------------------------

def induced_subgraph(g: Graph, nodes: np.ndarray) -> Graph:
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges()
    e = remap[e]
    e = e[(e >= 0).all(axis=1)]
    labels = g.labels[nodes] if g.labels is not None else nodes
    return Graph.from_edges(len(nodes), e, labels=labels)


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest connected component.

    Equal-size components are ranked by their smallest node id.
    """
    if g.node_count == 0:
        raise GraphError("empty graph")
    ncomp, comp = connected_components(g.to_sparse(), directed=False)
    if ncomp == 1:
        return g
    sizes = np.bincount(comp)
    # components are numbered in order of their smallest member
    best = int(np.flatnonzero(sizes == sizes.max())[0])
    return induced_subgraph(g, np.flatnonzero(comp == best))


# --- generators --------------------------------------------------------------

def configuration_model(degrees: Sequence[int], seed=None) -> Graph:
    """Erased configuration model: random stub matching, then loops and
    multi-edges are discarded."""
    deg = np.asarray(degrees, dtype=np.int64)
    if (deg < 1).any():
        raise GraphError("degrees must be >= 1")
    if deg.sum() % 2:
        raise GraphError("degree sum must be even")
    rng = np.random.default_rng(seed)
    stubs = rng.permutation(np.repeat(np.arange(len(deg)), deg))
    return Graph.from_edges(len(deg), stubs.reshape(-1, 2))


def powerlaw_degrees(n: int, tau: float, seed=None, kmin: int = 1,
                     kmax: int | None = None) -> np.ndarray:
    """Draw ``n`` degrees with ``P[k] ~ k**-tau`` on ``kmin..kmax``.

    ``kmax`` defaults to ``floor(sqrt(n))``.  If the sum is odd one node's
    degree is bumped by one so the sequence is graphical for stub matching.
    """
    dd = DegreeDistribution.powerlaw(tau, n, kmax=kmax, kmin=kmin)
    rng = np.random.default_rng(seed)
    deg = rng.choice(dd.ks, size=n, p=dd.probs)
    if deg.sum() % 2:
        deg[rng.integers(n)] += 1
    return deg


def powerlaw_graph(n: int, tau: float, seed=None, kmin: int = 1,
                   kmax: int | None = None) -> Graph:
    """Largest component of a power-law configuration-model graph."""
    rng = np.random.default_rng(seed)
    deg = powerlaw_degrees(n, tau, rng, kmin=kmin, kmax=kmax)
    return largest_component(configuration_model(deg, rng))


def erdos_renyi(n: int, q: float, seed=None) -> Graph:
    """G(n, q): every unordered pair is an edge independently w.p. ``q``."""
    if not 0 < q < 1:
        raise GraphError("q must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    pairs = n * (n - 1) // 2
    m = rng.binomial(pairs, q)
    idx = rng.choice(pairs, size=m, replace=False) if m else np.empty(0, np.int64)
    # row i of the strict lower triangle holds pair indices i(i-1)/2 .. i(i+1)/2-1
    i = ((1 + np.sqrt(1 + 8 * idx.astype(float))) // 2).astype(np.int64)
    i[i * (i - 1) // 2 > idx] -= 1
    i[i * (i + 1) // 2 <= idx] += 1
    j = idx - i * (i - 1) // 2
    return Graph.from_edges(n, np.column_stack([i, j]))


def lattice(dims: Sequence[int], periodic: bool = True) -> Graph:
    dims = [int(s) for s in dims]
    if not 2 <= len(dims) <= 3:
        raise GraphError("lattice needs 2 or 3 dimensions")
    if min(dims) < 3:
        raise GraphError("lattice sides must be >= 3")
    n = math.prod(dims)
    coords = np.indices(dims).reshape(len(dims), -1)
    strides = np.array([math.prod(dims[a + 1:]) for a in range(len(dims))])
    node = strides @ coords
    edges = []
    for axis, side in enumerate(dims):
        nxt = coords.copy()
        nxt[axis] += 1
        if periodic:
            nxt[axis] %= side
            ok = np.ones(n, dtype=bool)
        else:
            ok = nxt[axis] < side
        edges.append(np.column_stack([node[ok], (strides @ nxt)[ok]]))
    return Graph.from_edges(n, np.concatenate(edges))


def ring(n: int) -> Graph:
    if n < 3:
        raise GraphError("ring needs n >= 3")
    v = np.arange(n)
    return Graph.from_edges(n, np.column_stack([v, (v + 1) % n]))


def star(leaves: int) -> Graph:
    """Hub ``0`` joined to leaves ``1..leaves``."""
    if leaves < 1:
        raise GraphError("star needs at least one leaf")
    leaf = np.arange(1, leaves + 1)
    return Graph.from_edges(leaves + 1, np.column_stack([np.zeros_like(leaf), leaf]))


def path(n: int) -> Graph:
    if n < 2:
        raise GraphError("path needs n >= 2")
    v = np.arange(n - 1)
    return Graph.from_edges(n, np.column_stack([v, v + 1]))


def complete(n: int) -> Graph:
    i, j = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.column_stack([i, j]))


# --- rewiring ----------------------------------------------------------------

def rewire(g: Graph, seed=None, swaps_per_edge: int = 10) -> Graph:
    """Degree-preserving randomization by connected double edge swaps.

    Swaps ``(a,b),(c,d) -> (a,d),(c,b)`` are applied in windows; a window that
    disconnects the graph is undone and the window halved, a connected one
    doubles the next window.  At least ``swaps_per_edge * M`` swaps are kept.
    A graph admitting no simple swap at all (e.g. a star) comes back as is.
    """
    if not g.is_connected():
        raise GraphError("rewire requires a connected graph")
    m, n = g.edge_count, g.node_count
    target = swaps_per_edge * m
    max_trials = 10_000 * m
    if m < 2:
        return g
    rnd = random.Random(seed)
    e = g.edges()
    us, vs = e[:, 0].tolist(), e[:, 1].tolist()
    nbrs = [set(a) for a in g.adj]

    def swap(i, j, a, b, c, d):
        nbrs[a].discard(b); nbrs[b].discard(a)
        nbrs[c].discard(d); nbrs[d].discard(c)
        nbrs[a].add(d); nbrs[d].add(a)
        nbrs[c].add(b); nbrs[b].add(c)
        us[i], vs[i] = a, d
        us[j], vs[j] = c, b

    def connected():
        src = np.fromiter(us, dtype=np.int64, count=m)
        dst = np.fromiter(vs, dtype=np.int64, count=m)
        mat = sparse.coo_matrix((np.ones(m), (src, dst)), shape=(n, n))
        return connected_components(mat, directed=False)[0] == 1

    done = trials = 0
    window = 1
    while done < target:
        log = []
        while len(log) < window and trials < max_trials:
            trials += 1
            i, j = rnd.randrange(m), rnd.randrange(m)
            if i == j:
                continue
            a, b = us[i], vs[i]
            c, d = (us[j], vs[j]) if rnd.random() < 0.5 else (vs[j], us[j])
            if a == d or c == b or d in nbrs[a] or b in nbrs[c]:
                continue
            swap(i, j, a, b, c, d)
            log.append((i, j, a, b, c, d))
        if not log:
            if done == 0:
                return g
            raise GraphError(
                f"rewire stalled after {trials} trials ({done}/{target} swaps)")
        if connected():
            done += len(log)
            window *= 2
        else:
            for i, j, a, b, c, d in reversed(log):
                # (a,d),(c,b) back to (a,b),(c,d)
                swap(i, j, a, d, c, b)
            window = max(1, window // 2)
        if trials >= max_trials and done < target:
            raise GraphError(
                f"rewire stalled after {trials} trials ({done}/{target} swaps)")
    return Graph.from_edges(n, np.column_stack([us, vs]), labels=g.labels)


# --- statistics --------------------------------------------------------------

def degree_distribution(g: Graph) -> DegreeDistribution:
    if g.node_count == 0:
        raise GraphError("empty graph")
    deg = g.degrees[g.degrees > 0]
    ks, counts = np.unique(deg, return_counts=True)
    return DegreeDistribution(ks, counts / g.node_count, g.node_count)


def triangle_count(g: Graph) -> int:
    a = g.to_sparse()
    return int((a @ a).multiply(a).sum()) // 6


def stats(g: Graph) -> GraphStats:
    if g.node_count == 0:
        raise GraphError("empty graph")
    k = g.degrees.astype(float)
    wedges = float((k * (k - 1) / 2).sum())
    c = 3 * triangle_count(g) / wedges if wedges else 0.0
    return GraphStats(
        node_count=g.node_count,
        edge_count=g.edge_count,
        mean_degree=float(k.mean()),
        second_moment=float((k ** 2).mean()),
        clustering=c,
    )
