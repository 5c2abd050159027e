import math
import random
from collections import Counter

import numpy as np
import pytest

from netcover import graph as gr
from netcover.cover import CoverState
from netcover.excess import truncated_powerlaw
from netcover.graph import DegreeDistribution
from netcover.policies import (MEED, MOD, SI, Exhausted, MaxDegree, Oracle, PolicyError,
                               PolicySpec, RandomWalk, RandomWalkNoRevisit, make_policy,
                               run_policy, BFS, DFS, POLICY_NAMES)


class NoShuffle(random.Random):
    def shuffle(self, x):
        pass


def frozen(g, recruits, policy, rnd=None, **kw):
    """Cover state after recruiting ``recruits`` in order, with ``policy``
    told about each step the way `run_policy` does."""
    rnd = rnd or random.Random(0)
    s = CoverState(g, recruits[0])
    pol = policy(s, rnd, **kw)
    pol.update(recruits[0], list(g.adj[recruits[0]]))
    for v in recruits[1:]:
        pol.update(v, s.recruit(v))
    return s, pol


def freq(draw, reps):
    return Counter(draw() for _ in range(reps))


def within_3_sigma(count, reps, p):
    return abs(count / reps - p) <= 3 * math.sqrt(p * (1 - p) / reps)


# --- queues ------------------------------------------------------------------

def test_fifo_lifo_on_path():
    g = gr.path(4)  # a-b-c-d = 0-1-2-3
    s, pol = frozen(g, [1], BFS, NoShuffle())
    assert pol.select() == 0
    s, pol = frozen(g, [1], DFS, NoShuffle())
    assert pol.select() == 2


@pytest.mark.parametrize("cls", [BFS, DFS])
def test_queue_star_leaf_pops_hub(cls):
    s, pol = frozen(gr.star(5), [3], cls)
    assert pol.select() == 0


def test_bfs_ring6_is_layered():
    for seed in range(30):
        tr = run_policy(gr.ring(6), "bfs", 6, seed=seed, start=0)
        dist = [min(v, 6 - v) for v in tr.order]
        assert dist == sorted(dist)
        assert dist == [0, 1, 1, 2, 2, 3]


def test_queue_exhaustion():
    s, pol = frozen(gr.path(2), [0, 1], BFS)
    with pytest.raises(Exhausted):
        pol.select()


# --- walks -------------------------------------------------------------------

def test_rw_triangle_uniform():
    s, pol = frozen(gr.complete(3), [0], RandomWalk, random.Random(5))
    c = freq(pol.select, 20_000)
    assert set(c) == {1, 2}
    assert within_3_sigma(c[1], 20_000, 0.5)


def test_rw_path3_center():
    s, pol = frozen(gr.path(3), [1], RandomWalk, random.Random(6))
    reps = 100_000
    c = freq(pol.select, reps)
    assert within_3_sigma(c[0], reps, 0.5)


def test_rw_k2_alternates():
    tr = run_policy(gr.path(2), "rw", 10, seed=3, start=0)
    assert tr.recruited == [1] + [2] * 9
    # positions alternate, so paid degrees are all 1 and the walker is at 1 after odd steps
    s, pol = frozen(gr.path(2), [0], RandomWalk)
    assert [pol.select() for _ in range(3)] == [1, 1, 1]


def test_rwnr_path3_center_recruited():
    g = gr.path(3)
    s, pol = frozen(g, [1], RandomWalkNoRevisit, random.Random(2))
    c = freq(pol.select, 20_000)
    assert set(c) == {0, 2} and within_3_sigma(c[0], 20_000, 0.5)


def test_rwnr_ring4_walk_tree():
    # from 1: hop to 2 (1/2), or to 0 and then 3 (1/4) or back to 1;
    # p = 1/2 + p/4 gives P[2] = 2/3
    g = gr.ring(4)
    s, pol = frozen(g, [0, 1], RandomWalkNoRevisit, random.Random(9))
    assert pol.pos == 1
    reps = 60_000
    c = freq(pol.select, reps)
    assert set(c) == {2, 3}
    assert within_3_sigma(c[2], reps, 2 / 3)


def test_rwnr_star_hub_uniform_over_new_leaves():
    g = gr.star(6)
    s, pol = frozen(g, [1, 0], RandomWalkNoRevisit, random.Random(4))
    c = freq(pol.select, 50_000)
    assert set(c) == {2, 3, 4, 5, 6}
    for leaf in range(2, 7):
        assert within_3_sigma(c[leaf], 50_000, 0.2)


def test_rwnr_one_payment_per_new_node():
    tr = run_policy(gr.lattice([6, 6]), "rwnr", 36, seed=1)
    assert tr.recruited == list(range(1, 37))


# --- SI ----------------------------------------------------------------------

def _si_graph():
    # recruited r1=0, r2=1; frontier u=2 (d=2), w=3 (d=1), x=4 (d=1)
    return gr.Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (0, 3), (1, 4)])


def test_si_edge_proportional():
    s, pol = frozen(_si_graph(), [0, 1], SI, random.Random(1))
    assert s.frontier_view() == {2: 2, 3: 1, 4: 1}
    reps = 100_000
    c = freq(pol.select, reps)
    for v, p in {2: 0.5, 3: 0.25, 4: 0.25}.items():
        assert within_3_sigma(c[v], reps, p)


def test_si_triangle_uniform_and_singleton():
    s, pol = frozen(gr.complete(3), [0], SI, random.Random(2))
    c = freq(pol.select, 20_000)
    assert within_3_sigma(c[1], 20_000, 0.5)
    s, pol = frozen(gr.path(3), [0], SI)
    assert {pol.select() for _ in range(50)} == {1}


def test_si_multinomial_on_random_frozen_state():
    g = gr.powerlaw_graph(400, 2.3, seed=5)
    tr = run_policy(g, "si", 40, seed=8)
    s, pol = frozen(g, tr.order, SI, random.Random(11))
    view = s.frontier_view()
    total = sum(view.values())
    reps = 100_000
    c = freq(pol.select, reps)
    bad = [v for v, d in view.items() if not within_3_sigma(c[v], reps, d / total)]
    # 3-sigma per node; allow the expected handful of 0.27% misses
    assert len(bad) <= max(2, int(0.01 * len(view)))


# --- greedy ------------------------------------------------------------------

def _two_frontier(d1, d2, extra=0):
    """Recruited 0..r-1 on a path; v1 = r sees d1 of them, v2 = r+1 sees d2."""
    r = max(d1, d2)
    edges = [(i, i + 1) for i in range(r - 1)]
    edges += [(i, r) for i in range(d1)] + [(i, r + 1) for i in range(d2)]
    edges += [(r, r + 2 + j) for j in range(extra)]
    return gr.Graph.from_edges(r + 2 + extra, edges), list(range(r)), r, r + 1


def test_mod_unique_argmax():
    g, rec, v1, v2 = _two_frontier(3, 1)
    s, pol = frozen(g, rec, MOD)
    assert s.frontier_view() == {v1: 3, v2: 1}
    assert pol.select() == v1


def test_mod_ties_uniform():
    g = gr.complete(4)
    s, pol = frozen(g, [0, 1], MOD, random.Random(3))
    c = freq(pol.select, 20_000)
    assert set(c) == {2, 3} and within_3_sigma(c[2], 20_000, 0.5)
    s, pol = frozen(gr.star(4), [0], MOD, random.Random(4))
    c = freq(pol.select, 40_000)
    assert all(within_3_sigma(c[v], 40_000, 0.25) for v in range(1, 5))


def test_oracle_star_leaf_picks_hub():
    s, pol = frozen(gr.star(5), [2], Oracle)
    assert pol.select() == 0


def test_oracle_vs_maxdeg():
    # v1: k=5, d=4 (excess 1); v2: k=3, d=1 (excess 2)
    edges = [(0, 1), (1, 2), (2, 3)]
    edges += [(i, 4) for i in range(4)] + [(4, 6)]
    edges += [(0, 5), (5, 7), (5, 8)]
    g = gr.Graph.from_edges(9, edges)
    s, pol = frozen(g, [0, 1, 2, 3], Oracle)
    assert s.frontier_view()[4] == 4 and s.frontier_view()[5] == 1
    assert (g.degrees[4], g.degrees[5]) == (5, 3)
    assert pol.select() == 5
    s, pol = frozen(g, [0, 1, 2, 3], MaxDegree)
    assert pol.select() == 4


def test_oracle_zero_excess_ties_uniform():
    s, pol = frozen(gr.star(4), [0], Oracle, random.Random(7))
    c = freq(pol.select, 40_000)
    assert all(within_3_sigma(c[v], 40_000, 0.25) for v in range(1, 5))


def test_meed_two_point_prefers_low_degree():
    # a sees one recruit, b sees two; excess 2/3 at d=1 beats 0 at d=2
    g, rec, b, a = _two_frontier(2, 1)
    side = DegreeDistribution.from_mass({1: 0.5, 2: 0.5}, 1000)
    s, pol = frozen(g, rec, MEED, side_info=side)
    assert s.frontier_view() == {b: 2, a: 1}
    ex = pol.excess_by_degree([1, 2])
    assert ex[1] == pytest.approx(2 / 3, abs=1e-3)
    assert ex[2] == 0.0
    assert pol.select() == a


def test_meed_tau1_prefers_high_degree():
    tp = truncated_powerlaw(0.5, 1.0)
    side = DegreeDistribution(tp.ks, tp.probs, 10_000)
    g, rec, v1, v2 = _two_frontier(3, 1)
    s, pol = frozen(g, rec, MEED, side_info=side)
    ex = pol.excess_by_degree([1, 3])
    assert ex[3] > ex[1]
    assert ex[3] == pytest.approx(0.5 * 3 / 0.5, rel=1e-3)
    assert pol.select() == v1


def test_meed_er_side_info_is_degree_agnostic():
    n, q = 2000, 0.005
    side = DegreeDistribution.binomial(n, q)
    g, rec, v1, v2 = _two_frontier(3, 1)
    s, pol = frozen(g, rec, MEED, side_info=side)
    ex = pol.excess_by_degree([1, 2, 3])
    # (N - d - 1) q: differences of q per unit of d, i.e. flat up to O(q)
    assert max(ex.values()) - min(ex.values()) < 3 * q
    assert ex[1] == pytest.approx((n - 2) * q, rel=1e-3)


def test_meed_matches_mod_when_excess_increases():
    tp = truncated_powerlaw(0.7, 1.0)
    side = DegreeDistribution(tp.ks, tp.probs, 10_000)
    g = gr.powerlaw_graph(2000, 2.5, seed=3)
    for seed in range(15):
        tr = run_policy(g, "mod", 60, seed=seed)
        s, meed = frozen(g, tr.order, MEED, random.Random(seed), side_info=side)
        _, mod = frozen(g, tr.order, MOD, random.Random(seed))
        top = max(s.frontier_view().values())
        assert s.observed[meed.select()] == top
        assert s.observed[mod.select()] == top


def test_policy_spec_validation():
    with pytest.raises(PolicyError):
        PolicySpec("greedy")
    with pytest.raises(PolicyError):
        PolicySpec("meed")
    assert PolicySpec("meed", DegreeDistribution.from_mass({2: 1.0}, 10)).kind == "meed"


# --- uniform sampling --------------------------------------------------------

def test_uniform_single_sample_covers():
    for seed in range(10):
        assert run_policy(gr.complete(3), "uniform", 1, seed=seed).cover.tolist() == [3]
        assert run_policy(gr.ring(5), "uniform", 1, seed=seed).cover.tolist() == [3]


def test_uniform_noreplace_samples_each_node_once():
    g = gr.ring(30)
    tr = run_policy(g, "uniform-nr", 30, seed=2)
    assert sorted(tr.order) == list(range(30))
    assert tr.recruited == list(range(1, 31))
    assert run_policy(g, "uniform-nr", 40, seed=2).steps == 30


# --- driver ------------------------------------------------------------------

LINK_TRACING = ["bfs", "dfs", "rw", "rwnr", "si", "mod", "meed", "oracle", "maxdeg"]


def _spec(name, g):
    return PolicySpec(name, gr.degree_distribution(g) if name == "meed" else None)


@pytest.mark.parametrize("name", LINK_TRACING)
def test_recruited_subgraph_connected(name):
    g = gr.powerlaw_graph(600, 2.5, seed=1)
    for seed in range(3):
        tr = run_policy(g, _spec(name, g), 200, seed=seed)
        seen = {tr.order[0]}
        for v in tr.order[1:]:
            assert seen.intersection(g.adj[v]), f"{name} recruited {v} off the frontier"
            seen.add(v)


@pytest.mark.parametrize("name", [p for p in POLICY_NAMES if p not in ("rw", "uniform")])
def test_full_run_covers_everything(name):
    g = gr.lattice([5, 6], periodic=False)
    tr = run_policy(g, _spec(name, g), g.node_count, seed=4)
    assert tr.cover[-1] == g.node_count
    assert tr.recruited == list(range(1, tr.steps + 1))


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_run_policy_deterministic(name):
    g = gr.powerlaw_graph(500, 2.5, seed=2)
    a = run_policy(g, _spec(name, g), 150, seed=17)
    b = run_policy(g, _spec(name, g), 150, seed=17)
    assert a == b


def test_rw_ring_pays_for_revisits():
    tr = run_policy(gr.ring(100), "rw", 50, seed=0)
    assert tr.steps == 50
    assert tr.recruited[-1] <= 50
    assert all(b <= t for t, b in enumerate(tr.recruited, 1))
    revisit = sum(run_policy(gr.ring(100), "rw", 50, seed=s).recruited[-1] < 50 for s in range(20))
    assert revisit == 20


def test_budget_validation():
    with pytest.raises(PolicyError):
        run_policy(gr.ring(5), "bfs", 0)


def test_dfs_recruits_lower_degrees_than_bfs():
    g = gr.powerlaw_graph(10_000, 2.5, seed=1)
    t = math.ceil(0.1 * g.node_count)
    mean_deg = {}
    for name in ("bfs", "dfs"):
        mean_deg[name] = np.mean([np.mean(run_policy(g, name, t, seed=s).paid_degree)
                                  for s in range(100)])
    assert mean_deg["bfs"] > mean_deg["dfs"]


def test_make_policy_by_name():
    s = CoverState(gr.ring(5), 0)
    assert make_policy("bfs", s, random.Random()).name == "bfs"
