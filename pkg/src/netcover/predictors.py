"""Analytical cover-size curves.

Every curve is indexed by payments ``t = 0..T`` on the same axis as the
simulation traces: ``t`` counts paid samples (the initial recruit is payment
1), so ``values[0]`` is the empty-budget state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import DegreeDistribution, Graph, degree_distribution

TABOO_MAX_NODES = 500


class PredictorError(ValueError):
    pass


@dataclass
class PredictorCurve:
    model: str
    values: np.ndarray
    quantity: str = "cover"
    node_count: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.values))

    def __getitem__(self, t):
        return self.values[t]

    def __len__(self) -> int:
        return len(self.values)


# --- uniform node sampling ---------------------------------------------------

def _check_dd(dd: DegreeDistribution, n: int) -> None:
    if (dd.ks + 1 > n).any():
        raise PredictorError("degree k with k + 1 > N is inconsistent with N")


def uniform_replace_curve(dd: DegreeDistribution, n: int, horizon: int) -> PredictorCurve:
    """Uniform sampling with replacement: ``<W(t)> = N sum_k p_k (1-(k+1)/N)^t``."""
    if horizon < 1:
        raise PredictorError("horizon must be >= 1")
    _check_dd(dd, n)
    t = np.arange(horizon + 1)[:, None]
    w = n * (dd.probs * (1 - (dd.ks + 1) / n) ** t).sum(axis=1)
    return PredictorCurve("uniform", np.clip(n - w, 0.0, n), node_count=n)


def uniform_replace_linear(dd: DegreeDistribution, n: int, t: float) -> float:
    """First-order cover ``(<k> + 1) t``, i.e. ``<W(t)> ~ N - (<k>+1) t``."""
    return (dd.mean + 1) * t


def uniform_noreplace_curve(dd: DegreeDistribution, n: int, horizon: int) -> PredictorCurve:
    """Without replacement, each step's hit probability is ``(k+1)/<W(h)>``.

    Factors are clamped into [0, 1]; the curve ends once ``<W>`` drops
    below one node.
    """
    if horizon > n:
        raise PredictorError("horizon must not exceed N")
    _check_dd(dd, n)
    surv = np.ones_like(dd.probs)
    w = float(n)
    covers = [0.0]
    for _ in range(horizon):
        if w < 1:
            break
        surv = surv * np.clip(1 - (dd.ks + 1) / w, 0.0, 1.0)
        w = n * float(np.dot(dd.probs, surv))
        covers.append(n - w)
    return PredictorCurve("uniform-nr", np.array(covers), node_count=n)


# --- random walks ------------------------------------------------------------

def second_neighbor_degree(g: Graph) -> np.ndarray:
    """``k_v + sum_{j ~ v} k_j`` for every node."""
    k = g.degrees.astype(float)
    src = np.repeat(np.arange(g.node_count), g.degrees)
    return k + np.bincount(src, weights=k[g.indices], minlength=g.node_count)


def rw_exact_taboo(g: Graph, horizon: int) -> PredictorCurve:
    """Exact expected RW cover from a stationary start, via taboo matrices.

    Node ``v`` is uncovered after ``t`` payments iff the walk positions
    ``X_0..X_{t-1}`` all avoid ``v`` and its neighbors, which has
    probability ``q_v P_v^{t-1} 1`` with ``P_v`` the transition matrix with
    those rows and columns removed.  All ``N`` taboo chains are advanced
    together.
    """
    n = g.node_count
    if n > TABOO_MAX_NODES:
        raise PredictorError(
            f"N={n} exceeds {TABOO_MAX_NODES}; use rw_steady_curve instead")
    k = g.degrees.astype(float)
    a = g.to_sparse().astype(float)
    p = sparse.diags(1 / k) @ a
    allowed = np.ones((n, n), dtype=bool)  # allowed[v, u]: u outside N_a(v)
    allowed[np.arange(n), np.arange(n)] = False
    src = np.repeat(np.arange(n), g.degrees)
    allowed[src, g.indices] = False
    x = allowed * (k / k.sum())[None, :]
    covers = [0.0]
    for t in range(1, horizon + 1):
        if t > 1:
            x = np.asarray((p.T @ x.T).T) * allowed
        covers.append(n - x.sum())
    return PredictorCurve("rw-exact", np.array(covers), node_count=n)


def rw_steady_curve(g: Graph, horizon: int) -> PredictorCurve:
    """I.i.d. stationary sampling: ``N - sum_v (1 - alpha_v)^t`` with
    ``alpha_v = (k_v + sum_{j~v} k_j) / 2M``."""
    alpha = np.minimum(second_neighbor_degree(g) / (2 * g.edge_count), 1.0)
    t = np.arange(horizon + 1)[:, None]
    values = g.node_count - ((1 - alpha) ** t).sum(axis=1)
    return PredictorCurve("rw-steady", values, node_count=g.node_count)


def rw_linear(g: Graph, t: float) -> float:
    k = g.degrees.astype(float)
    return t * (np.mean(k ** 2) + k.mean()) / k.mean()


def rwnr_curve(g: Graph, horizon: int) -> tuple[PredictorCurve, PredictorCurve]:
    """Cover and undiscovered-edge curves of the random walk that pays only
    for new recruits.

    ``<Z(t)>`` is fed back into its own product recursion starting from
    ``Z(0) = M``; iteration stops once ``<Z>`` falls below one edge.
    """
    n, m = g.node_count, g.edge_count
    k = g.degrees.astype(float)
    s = second_neighbor_degree(g)
    e = g.edges()
    ke = k[e[:, 0]] + k[e[:, 1]]
    node_surv = np.ones(n)
    edge_surv = np.ones(m)
    z = float(m)
    covers, zs = [0.0], [z]
    for _ in range(horizon):
        if z < 1:
            break
        node_surv *= np.clip(1 - s / (2 * z), 0.0, 1.0)
        edge_surv *= np.clip(1 - ke / (2 * z), 0.0, 1.0)
        z = float(edge_surv.sum())
        covers.append(n - node_surv.sum())
        zs.append(z)
    return (PredictorCurve("rwnr", np.array(covers), node_count=n),
            PredictorCurve("rwnr", np.array(zs), quantity="undiscovered_edges",
                           node_count=n))


# --- SI mean field -----------------------------------------------------------

@dataclass
class MeanFieldState:
    """Fraction ``b[i]`` of degree-``ks[i]`` nodes recruited after ``t``
    mean-field steps; ``t = 0`` is the single uniformly drawn initial recruit."""

    ks: np.ndarray
    probs: np.ndarray
    node_count: int
    b: np.ndarray
    t: int = 0
    halted: bool = False
    _pkh: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, dd: DegreeDistribution, n: int | None = None) -> "MeanFieldState":
        n = n or dd.node_count
        return cls(dd.ks.astype(float), dd.probs, n, np.full(len(dd.ks), 1.0 / n))

    @property
    def recruited(self) -> float:
        return float(self.node_count * np.dot(self.probs, self.b))

    def edge_weight(self) -> float:
        return float(np.dot(self.ks * self.probs, 1 - self.b))

    def step(self) -> "MeanFieldState":
        """``b_k += k (1 - b_k) / (N sum_h h p_h (1 - b_h))``; in place.

        One node's worth of mass is recruited per step.  If a degree class
        would be pushed past ``b_k = 1`` it is filled exactly and the surplus
        is shared among the other classes with the same ``k (1 - b_k)``
        weights, so ``<B>`` still grows by exactly one.
        """
        n = self.node_count
        left = n * self.probs * (1 - self.b)  # unrecruited mass per class
        if self.edge_weight() < 1e-12 or left.sum() < 1 - 1e-9:
            self.halted = True
            return self
        delta = np.zeros_like(self.b)
        open_ = left > 0
        need = 1.0
        while need > 1e-15 and open_.any():
            w = np.where(open_, self.ks * left, 0.0)
            share = need * w / w.sum()
            room = left - delta
            full = open_ & (share >= room)
            if not full.any():
                delta += share
                break
            delta[full] = left[full]
            need = 1.0 - delta.sum()
            open_ &= ~full
        with np.errstate(invalid="ignore", divide="ignore"):
            db = np.where(self.probs > 0, delta / (n * self.probs), 0.0)
        self.b = np.where(delta >= left, 1.0, self.b + db)
        self.t += 1
        return self

    def link_probability(self) -> np.ndarray:
        """``p_kh = 1 - (1 - h/2M)^k`` as a ``[k, h]`` matrix."""
        if self._pkh is None:
            two_m = self.node_count * float(np.dot(self.ks, self.probs))
            base = np.clip(1 - self.ks / two_m, 0.0, 1.0)
            self._pkh = 1 - base[None, :] ** self.ks[:, None]
        return self._pkh

    def upsilon(self) -> np.ndarray:
        """Probability that a degree-k node is on the frontier."""
        pkh = self.link_probability()
        logs = np.log1p(-np.minimum(self.b[None, :] * pkh, 1 - 1e-300))
        none_recruited = np.exp(logs @ (self.node_count * self.probs))
        return (1 - self.b) * (1 - none_recruited)

    def frontier(self) -> float:
        return float(self.node_count * np.dot(self.probs, self.upsilon()))


def si_meanfield(dd: DegreeDistribution, n: int, horizon: int, lag: bool = True):
    """Mean-field SI recruitment.

    Returns ``(states, frontier, cover)``: the ``b`` trajectory (one copy per
    mean-field step, ``states[j].recruited == 1 + j``) and curves on the
    payment axis, where payment ``t`` holds state ``j = t - 1``.  The
    frontier recursion produces the frontier of state ``j + 1`` from
    ``Upsilon(j)``, so by default cover at state ``j`` is ``<B(j)>`` plus the
    frontier computed from ``Upsilon(j - 1)`` (``Upsilon(0)`` for ``j = 0``).
    ``lag=False`` evaluates ``Upsilon`` on the same state instead.  The
    frontier is capped at the unrecruited mass ``N - <B>``.
    """
    if horizon > n - 1:
        raise PredictorError("horizon must be <= N - 1")
    state = MeanFieldState.initial(dd, n)
    states, fronts = [], []
    for _ in range(horizon):
        states.append(MeanFieldState(state.ks, state.probs, n, state.b.copy(), state.t))
        fronts.append(state.frontier())
        state.step()
        if state.halted:
            break
    fronts = np.array(fronts)
    if lag:
        fronts = np.concatenate([fronts[:1], fronts[:-1]])
    recruited = np.array([0.0] + [s.recruited for s in states])
    # a lagged frontier still counts the node recruited since; cap at W
    frontier = np.minimum(np.concatenate([[0.0], fronts]), n - recruited)
    return (states,
            PredictorCurve("si", frontier, quantity="frontier", node_count=n),
            PredictorCurve("si", recruited + frontier, node_count=n))


# --- grids -------------------------------------------------------------------

def grid_bfs_yield(dim: int, t: float) -> float:
    """New nodes per boundary node when BFS sweeps the ring at distance ``t``
    on an infinite lattice."""
    if t < 1:
        raise PredictorError("t must be >= 1")
    if dim == 2:
        return 1 + 1 / t
    if dim == 3:
        return (1 + 2 * (t + 1) ** 2) / (1 + 2 * t ** 2)
    raise PredictorError("dim must be 2 or 3")


MODELS = ("uniform", "uniform-nr", "rw-exact", "rw-steady", "rwnr", "si")


def predict(model: str, g: Graph, horizon: int, quantity: str = "cover") -> PredictorCurve:
    """Dispatch a predictor by name; ``quantity`` picks the SI/RWnr side curve."""
    n = g.node_count
    if model == "uniform":
        return uniform_replace_curve(degree_distribution(g), n, horizon)
    if model == "uniform-nr":
        return uniform_noreplace_curve(degree_distribution(g), n, min(horizon, n))
    if model == "rw-exact":
        return rw_exact_taboo(g, horizon)
    if model == "rw-steady":
        return rw_steady_curve(g, horizon)
    if model == "rwnr":
        cover, z = rwnr_curve(g, horizon)
        return z if quantity == "undiscovered_edges" else cover
    if model == "si":
        _, frontier, cover = si_meanfield(degree_distribution(g), n, min(horizon, n - 1))
        return frontier if quantity == "frontier" else cover
    raise PredictorError(f"unknown predictor {model!r}; choose from {', '.join(MODELS)}")
