"""Seeded Monte Carlo experiments, aggregation and curve comparison."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cover import Trace
from .graph import Graph
from .policies import PolicySpec, run_policy
from .predictors import PredictorCurve

log = logging.getLogger(__name__)

STATS_HEADER = ("t", "mean_cover", "std_cover", "mean_frontier", "mean_recruited_degree")


class HarnessError(RuntimeError):
    pass


@dataclass
class TraceStats:
    """Per-payment aggregates over ``runs`` runs; row ``i`` is ``t = i + 1``."""

    mean_cover: np.ndarray
    std_cover: np.ndarray
    mean_frontier: np.ndarray
    mean_recruited_degree: np.ndarray
    mean_recruited: np.ndarray | None = None
    runs: int = 1
    base_seed: int = 0
    node_count: int | None = None
    policy: str = ""

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.mean_cover) + 1)

    @property
    def std_error(self) -> np.ndarray:
        return self.std_cover / np.sqrt(self.runs)

    def at(self, t: int) -> tuple[float, float]:
        """Mean cover and its standard error after ``t`` payments."""
        return float(self.mean_cover[t - 1]), float(self.std_error[t - 1])

    def column(self, quantity: str) -> np.ndarray:
        if quantity == "cover":
            return self.mean_cover
        if quantity == "frontier":
            return self.mean_frontier
        raise HarnessError(f"no empirical column for {quantity!r}")


@dataclass
class ErrorReport:
    t: np.ndarray
    empirical: np.ndarray
    predicted: np.ndarray
    node_count: int | None

    @property
    def residuals(self) -> np.ndarray:
        return self.predicted - self.empirical

    @property
    def max_relative_error(self) -> float:
        """Largest absolute residual divided by ``N`` (NaN when ``N`` is unknown)."""
        if not self.node_count:
            return float("nan")
        return float(np.abs(self.residuals).max() / self.node_count)

    @property
    def max_pointwise_relative_error(self) -> float:
        """Largest ``|residual| / empirical`` over the compared range."""
        return float((np.abs(self.residuals) / np.abs(self.empirical)).max())

    @property
    def rmse(self) -> float:
        return float(np.sqrt(np.mean(self.residuals ** 2)))

    @property
    def t_range(self) -> tuple[int, int]:
        return int(self.t[0]), int(self.t[-1])

    def summary(self) -> str:
        lo, hi = self.t_range
        return (f"t={lo}..{hi} max_rel_error={self.max_relative_error:.6g} "
                f"max_pointwise_rel_error={self.max_pointwise_relative_error:.6g} "
                f"rmse={self.rmse:.6g}")


def _pad(values: list[int], length: int) -> list[int]:
    if len(values) < length:
        values = values + [values[-1]] * (length - len(values))
    return values


def _one_run(args) -> tuple[int, Trace]:
    g, policy, budget, seed, index = args
    try:
        return index, run_policy(g, policy, budget, seed)
    except Exception as exc:
        raise HarnessError(f"run {index} (seed {seed}) failed: {exc}") from exc


def iter_traces(g: Graph, policy: PolicySpec | str, budget: int, runs: int,
                base_seed: int = 0, jobs: int | None = 1):
    """Yield ``(index, trace)`` for runs seeded ``base_seed + index``, in
    index order regardless of ``jobs``."""
    tasks = ((g, policy, budget, base_seed + i, i) for i in range(runs))
    if not jobs or jobs <= 1 or runs == 1:
        yield from map(_one_run, tasks)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_one_run, tasks, chunksize=max(1, runs // (4 * jobs)))


def run_experiment(g: Graph, policy: PolicySpec | str, budget: int, runs: int,
                   base_seed: int = 0, jobs: int | None = 1) -> TraceStats:
    """Aggregate ``runs`` independent runs.

    Runs that exhaust the graph early are padded with their terminal
    values so every ``t`` up to ``budget`` has ``runs`` samples.  The
    sample standard deviation uses ``runs - 1`` (zero for a single run).
    """
    if runs < 1:
        raise HarnessError("runs must be >= 1")
    if jobs is None:
        jobs = os.cpu_count() or 1
    cover = np.empty((runs, budget))
    front = np.empty((runs, budget))
    deg = np.empty((runs, budget))
    rec = np.empty((runs, budget))
    for i, tr in iter_traces(g, policy, budget, runs, base_seed, jobs):
        cover[i] = _pad(tr.cover.tolist(), budget)
        front[i] = _pad(tr.frontier, budget)
        deg[i] = _pad(tr.paid_degree, budget)
        rec[i] = _pad(tr.recruited, budget)
    std = cover.std(axis=0, ddof=1) if runs > 1 else np.zeros(budget)
    name = policy if isinstance(policy, str) else policy.kind
    return TraceStats(cover.mean(axis=0), std, front.mean(axis=0), deg.mean(axis=0),
                      rec.mean(axis=0), runs, base_seed, g.node_count, name)


def compare_curves(empirical: TraceStats, predicted: PredictorCurve,
                   t_range: tuple[int, int] | None = None,
                   quantity: str | None = None) -> ErrorReport:
    """Residuals of ``predicted`` against the empirical means on the
    overlapping payments (optionally clipped to ``t_range``, inclusive)."""
    quantity = quantity or predicted.quantity
    emp = empirical.column(quantity)
    lo, hi = 1, min(len(emp), predicted.horizon)
    if t_range is not None:
        lo, hi = max(lo, t_range[0]), min(hi, t_range[1])
    if hi < lo:
        raise HarnessError("empirical and predicted curves do not overlap")
    t = np.arange(lo, hi + 1)
    n = empirical.node_count or predicted.node_count
    return ErrorReport(t, emp[t - 1], predicted.values[t], n)


# --- CSV ---------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.6g}"


def _write(rows: list[list[str]], destination) -> None:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    text = buf.getvalue()
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessError(f"cannot write {destination}: {exc.strerror}") from exc


def export_csv(obj, destination) -> None:
    """Write stats, a curve or an error report as CSV (6 significant digits)."""
    if isinstance(obj, TraceStats):
        rows = [list(STATS_HEADER)]
        for i, t in enumerate(obj.t):
            rows.append([str(t), _fmt(obj.mean_cover[i]), _fmt(obj.std_cover[i]),
                         _fmt(obj.mean_frontier[i]), _fmt(obj.mean_recruited_degree[i])])
    elif isinstance(obj, PredictorCurve):
        rows = [["t", "value"]]
        rows += [[str(t), _fmt(v)] for t, v in zip(obj.t, obj.values)]
    elif isinstance(obj, ErrorReport):
        rows = [["t", "empirical", "predicted", "residual"]]
        rows += [[str(t), _fmt(e), _fmt(p), _fmt(r)] for t, e, p, r in
                 zip(obj.t, obj.empirical, obj.predicted, obj.residuals)]
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    _write(rows, destination)


def _read_rows(source) -> tuple[list[str], np.ndarray]:
    try:
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise HarnessError(f"cannot read {source}: {exc.strerror}") from exc
    if not rows:
        raise HarnessError(f"{source}: empty CSV")
    data = np.array([[float(x) for x in r] for r in rows[1:]]).reshape(-1, len(rows[0]))
    return rows[0], data


def read_stats_csv(source, node_count: int | None = None, runs: int = 1) -> TraceStats:
    header, data = _read_rows(source)
    if tuple(header) != STATS_HEADER:
        raise HarnessError(f"{source}: not a stats CSV (header {header})")
    return TraceStats(data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                      runs=runs, node_count=node_count)


def read_curve_csv(source, model: str = "", quantity: str = "cover",
                   node_count: int | None = None) -> PredictorCurve:
    header, data = _read_rows(source)
    if header != ["t", "value"]:
        raise HarnessError(f"{source}: not a curve CSV (header {header})")
    return PredictorCurve(model, data[:, 1], quantity=quantity, node_count=node_count)
