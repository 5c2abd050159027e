"""Next-node selection policies and the single-run driver.

Every policy sees the graph only through the cover state (recruited nodes,
frontier, observed degrees) except the two test baselines, ``oracle`` and
``maxdeg``, which peek at true degrees.  Ties are broken uniformly at random
with the run's seeded generator.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass


from .cover import OBSERVED, RECRUITED, CoverState, Trace
from .excess import excess_recursion
from .graph import DegreeDistribution, Graph
from .predictors import MeanFieldState

MAX_HOPS = 10 ** 8

POLICY_NAMES = ("bfs", "dfs", "rw", "rwnr", "si", "mod", "meed", "oracle",
                "maxdeg", "uniform", "uniform-nr")


class Exhausted(Exception):
    """No node is left to select."""


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    """A policy by name plus optional degree-distribution side info (MEED)."""

    kind: str
    side_info: DegreeDistribution | None = None

    def __post_init__(self):
        if self.kind not in POLICY_NAMES:
            raise PolicyError(
                f"unknown policy {self.kind!r}; choose from {', '.join(POLICY_NAMES)}")
        if self.kind == "meed" and self.side_info is None:
            raise PolicyError("meed needs a degree distribution as side info")


class Policy:
    """Base class.  ``select`` proposes the next node to pay for; ``update``
    is told which node was paid and which nodes it exposed."""

    name = ""
    link_tracing = True
    revisits = False

    def __init__(self, state: CoverState, rnd: random.Random):
        self.state = state
        self.rnd = rnd
        self.adj = state.graph.adj

    def update(self, v: int, fresh: list[int]) -> None:
        pass

    def select(self) -> int:
        raise NotImplementedError


class QueuePolicy(Policy):
    """Nodes are queued once, at first observation, in shuffled order."""

    lifo = False

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.queue: deque[int] = deque()

    def update(self, v, fresh):
        if fresh:
            fresh = list(fresh)
            self.rnd.shuffle(fresh)
            self.queue.extend(fresh)

    def select(self):
        q, status = self.queue, self.state.status
        pop = q.pop if self.lifo else q.popleft
        while q:
            v = pop()
            if status[v] == OBSERVED:
                return v
        raise Exhausted


class BFS(QueuePolicy):
    name = "bfs"


class DFS(QueuePolicy):
    name = "dfs"
    lifo = True


class RandomWalk(Policy):
    """Walker steps to a uniform neighbor; revisits are paid for."""

    name = "rw"
    revisits = True

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.pos = None

    def update(self, v, fresh):
        self.pos = v

    def select(self):
        nb = self.adj[self.pos]
        if not nb:
            raise Exhausted
        return nb[int(self.rnd.random() * len(nb))]


class RandomWalkNoRevisit(RandomWalk):
    """Walks through recruited nodes for free until it hits a new node."""

    name = "rwnr"
    revisits = False

    def select(self):
        if not self.state.frontier:
            raise Exhausted
        adj, status, rand = self.adj, self.state.status, self.rnd.random
        v = self.pos
        for _ in range(MAX_HOPS):
            nb = adj[v]
            v = nb[int(rand() * len(nb))]
            if status[v] != RECRUITED:
                return v
        raise RuntimeError(f"walk exceeded {MAX_HOPS} hops without a new node")


class SI(Policy):
    """Picks a uniform boundary edge, i.e. frontier node ``v`` with
    probability ``d(v) / sum d``.

    ``stubs`` holds one entry per (recruited, unrecruited) edge; entries whose
    node has since been recruited are dropped lazily.
    """

    name = "si"

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.stubs: list[int] = []

    def update(self, v, fresh):
        status = self.state.status
        self.stubs.extend(u for u in self.adj[v] if status[u] != RECRUITED)

    def select(self):
        stubs, status, rand = self.stubs, self.state.status, self.rnd.random
        while stubs:
            i = int(rand() * len(stubs))
            v = stubs[i]
            if status[v] == OBSERVED:
                return v
            stubs[i] = stubs[-1]
            stubs.pop()
        raise Exhausted


class BucketPolicy(Policy):
    """Argmax over an integer score with lazy buckets.

    A node is pushed into ``buckets[s]`` whenever its score becomes ``s``;
    entries that no longer match are discarded when drawn.  Drawing a
    uniform entry from the top bucket by rejection gives uniform ties.
    """

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.buckets: list[list[int]] = [[]]
        self.top = -1

    def score(self, v: int) -> int:
        raise NotImplementedError

    def push(self, v: int) -> None:
        s = self.score(v)
        b = self.buckets
        while len(b) <= s:
            b.append([])
        b[s].append(v)
        if s > self.top:
            self.top = s

    def draw(self, s: int) -> int | None:
        """Uniform valid entry of bucket ``s``, or None if it has none."""
        bucket, status, rand = self.buckets[s], self.state.status, self.rnd.random
        while bucket:
            i = int(rand() * len(bucket))
            v = bucket[i]
            if status[v] == OBSERVED and self.score(v) == s:
                return v
            bucket[i] = bucket[-1]
            bucket.pop()
        return None

    def select(self):
        while self.top >= 0:
            v = self.draw(self.top)
            if v is not None:
                return v
            self.top -= 1
        raise Exhausted


class MOD(BucketPolicy):
    """Maximum observed degree."""

    name = "mod"

    def score(self, v):
        return self.state.observed[v]

    def update(self, v, fresh):
        status = self.state.status
        for u in self.adj[v]:
            if status[u] == OBSERVED:
                self.push(u)


class Oracle(BucketPolicy):
    """Maximum true excess degree ``k_v - d(v)`` (needs two-hop knowledge)."""

    name = "oracle"

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.deg = state.graph.degree_list

    def score(self, v):
        return self.deg[v] - self.state.observed[v]

    def update(self, v, fresh):
        status = self.state.status
        for u in self.adj[v]:
            if status[u] == OBSERVED:
                self.push(u)


class MaxDegree(BucketPolicy):
    """Maximum true degree among frontier nodes."""

    name = "maxdeg"

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.deg = state.graph.degree_list

    def score(self, v):
        return self.deg[v]

    def update(self, v, fresh):
        for u in fresh:
            self.push(u)


class MEED(MOD):
    """Maximum expected excess degree under degree-distribution side info.

    The law of unrecruited degrees is ``zeta_k ~ p_k (1 - b_k(t))`` with
    ``b_k`` advanced by the SI mean-field recursion once per recruit; the
    score of observed degree ``d`` is the mean excess under ``zeta^(d)``.
    Non-positive excesses are clamped to zero and counted in ``clamped``.
    """

    name = "meed"

    def __init__(self, state, rnd, side_info: DegreeDistribution):
        super().__init__(state, rnd)
        self.mf = MeanFieldState.initial(side_info, side_info.node_count)
        self.count: dict[int, int] = {}
        self.clamped = 0

    def update(self, v, fresh):
        obs, status, count = self.state.observed, self.state.status, self.count
        if obs[v]:
            # v left the frontier; only the initial recruit has obs 0
            count[obs[v]] -= 1
            self.mf.step()
        for u in self.adj[v]:
            if status[u] == OBSERVED:
                d = obs[u]
                if d > 1:
                    count[d - 1] -= 1
                count[d] = count.get(d, 0) + 1
                self.push(u)

    def excess_by_degree(self, ds: list[int]) -> dict[int, float]:
        zeta = self.mf.probs * (1 - self.mf.b)
        if zeta.sum() <= 0:
            return {d: 0.0 for d in ds}
        table = excess_recursion((self.mf.ks, zeta), max(max(ds), 1))
        out = {}
        for d in ds:
            e = table.excess[d] if d < len(table.excess) else 0.0
            if e <= 0:
                self.clamped += 1
                e = 0.0
            out[d] = e
        return out

    def select(self):
        ds = [d for d, c in self.count.items() if c > 0]
        if not ds:
            raise Exhausted
        ex = self.excess_by_degree(ds)
        best = max(ex.values())
        tied = [d for d in ds if ex[d] >= best - 1e-12 * max(1.0, abs(best))]
        weights = [self.count[d] for d in tied]
        d = self.rnd.choices(tied, weights)[0] if len(tied) > 1 else tied[0]
        v = self.draw(d)
        if v is None:  # pragma: no cover - counts and buckets disagree
            raise RuntimeError(f"no frontier node with observed degree {d}")
        return v


class UniformSampling(Policy):
    """Uniform node sampling, with replacement; not link tracing."""

    name = "uniform"
    link_tracing = False
    revisits = True

    def select(self):
        return int(self.rnd.random() * self.state.node_count)


class UniformNoReplace(Policy):
    name = "uniform-nr"
    link_tracing = False

    def __init__(self, state, rnd):
        super().__init__(state, rnd)
        self.pool = list(range(state.node_count))
        rnd.shuffle(self.pool)

    def select(self):
        pool, status = self.pool, self.state.status
        while pool:
            v = pool.pop()
            if status[v] != RECRUITED:
                return v
        raise Exhausted


_CLASSES = {cls.name: cls for cls in (BFS, DFS, RandomWalk, RandomWalkNoRevisit, SI,
                                      MOD, MEED, Oracle, MaxDegree, UniformSampling,
                                      UniformNoReplace)}


def make_policy(spec: PolicySpec | str, state: CoverState, rnd: random.Random) -> Policy:
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    cls = _CLASSES[spec.kind]
    if cls is MEED:
        return MEED(state, rnd, spec.side_info)
    return cls(state, rnd)


def run_policy(g: Graph, policy: PolicySpec | str, budget: int, seed=None,
               start: int | None = None) -> Trace:
    """One covering run of ``budget`` payments (fewer if the policy runs out).

    The initial recruit is drawn uniformly from all nodes unless ``start`` is
    given, and counts as the first payment.
    """
    if budget < 1:
        raise PolicyError("budget must be >= 1")
    spec = PolicySpec(policy) if isinstance(policy, str) else policy
    rnd = random.Random(seed)
    if start is None:
        start = int(rnd.random() * g.node_count)
    state = CoverState(g, start)
    pol = make_policy(spec, state, rnd)
    trace = Trace(g.node_count)
    trace.record(state, start)
    pol.update(start, list(g.adj[start]))
    take = state.visit if not pol.link_tracing or pol.revisits else state.recruit
    while state.payments < budget:
        try:
            v = pol.select()
        except Exhausted:
            break
        before = state.recruited_count
        fresh = take(v)
        pol.update(v, fresh)
        trace.record(state, v, state.recruited_count > before)
    return trace
