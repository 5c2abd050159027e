"""Recruited / observed / uncovered bookkeeping for one covering run."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph

UNCOVERED, OBSERVED, RECRUITED = 0, 1, 2


class CoverError(RuntimeError):
    """A recruitment that breaks the cover-state contract."""


class CoverState:
    """Partition of the nodes into recruited, frontier and uncovered sets.

    ``observed[v]`` is the number of recruited neighbors of ``v``.  Mutation
    goes through `recruit` (link tracing, target must be on the frontier) or
    `visit` (any node; revisits only cost a payment).
    """

    def __init__(self, g: Graph, start: int):
        n = g.node_count
        if not 0 <= start < n:
            raise CoverError(f"start node {start} outside 0..{n - 1}")
        self.graph = g
        self._adj = g.adj
        self.status = [UNCOVERED] * n
        self.observed = [0] * n
        self.frontier: set[int] = set()
        self.recruited_count = 0
        self.uncovered_count = n
        self.t = 0
        self.payments = 0
        self.check = True
        self._take(start)

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def frontier_count(self) -> int:
        return len(self.frontier)

    def cover_size(self) -> int:
        return self.recruited_count + len(self.frontier)

    def frontier_view(self) -> dict[int, int]:
        """Snapshot ``{v: d(v, t)}`` ordered by node id."""
        obs = self.observed
        return {v: obs[v] for v in sorted(self.frontier)}

    def recruited(self) -> list[int]:
        return [v for v, s in enumerate(self.status) if s == RECRUITED]

    def recruit(self, v: int) -> list[int]:
        """Recruit frontier node ``v``; returns the nodes it newly exposed."""
        if self.status[v] != OBSERVED:
            raise CoverError(f"node {v} is not on the frontier")
        return self._take(v)

    def visit(self, v: int) -> list[int]:
        """Pay for ``v`` whatever its status; recruits it if it is new."""
        if self.status[v] == RECRUITED:
            self.payments += 1
            if self.check:
                self.assert_partition()
            return []
        return self._take(v)

    def _take(self, v: int) -> list[int]:
        status, obs, frontier = self.status, self.observed, self.frontier
        if status[v] == OBSERVED:
            frontier.discard(v)
        else:
            self.uncovered_count -= 1
        status[v] = RECRUITED
        self.recruited_count += 1
        self.t += 1
        self.payments += 1
        fresh = []
        for u in self._adj[v]:
            s = status[u]
            if s == RECRUITED:
                continue
            obs[u] += 1
            if s == UNCOVERED:
                status[u] = OBSERVED
                frontier.add(u)
                fresh.append(u)
        self.uncovered_count -= len(fresh)
        if self.check:
            self.assert_partition()
        return fresh

    def assert_partition(self) -> None:
        if self.recruited_count + len(self.frontier) + self.uncovered_count != self.node_count:
            raise CoverError("B + N(B) + W != N")
        if self.uncovered_count < 0 or self.recruited_count > self.payments:
            raise CoverError("negative uncovered count or unpaid recruit")

    def brute_force(self) -> tuple[set[int], dict[int, int]]:
        """Frontier and observed degrees recomputed from the recruited set."""
        rec = set(self.recruited())
        obs: dict[int, int] = {}
        for v in rec:
            for u in self._adj[v]:
                if u not in rec:
                    obs[u] = obs.get(u, 0) + 1
        return set(obs), obs


@dataclass
class Trace:
    """Per-payment record of one run.

    Row ``i`` describes the state after ``i + 1`` payments.  For policies
    without revisits ``recruited[i] == i + 1``.
    """

    node_count: int
    recruited: list[int] = field(default_factory=list)
    frontier: list[int] = field(default_factory=list)
    paid_degree: list[int] = field(default_factory=list)
    order: list[int] = field(default_factory=list)

    def record(self, state: CoverState, node: int, new: bool = True) -> None:
        if new:
            self.order.append(node)
        self.recruited.append(state.recruited_count)
        self.frontier.append(len(state.frontier))
        self.paid_degree.append(state.graph.degree_list[node])

    @property
    def steps(self) -> int:
        return len(self.recruited)

    @property
    def cover(self) -> np.ndarray:
        return np.asarray(self.recruited) + np.asarray(self.frontier)

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "t": np.arange(1, self.steps + 1),
            "recruited": np.asarray(self.recruited),
            "frontier": np.asarray(self.frontier),
            "cover": self.cover,
            "paid_degree": np.asarray(self.paid_degree),
        }
