"""Expected d-excess degree of frontier nodes.

Two independent routes give ``<k - d>`` under the size-biased laws
``zeta^(d)``: the step-by-step recursion (`excess_recursion`) and the ratio of
falling-factorial moments ``F_{d+1} / F_d`` (`excess_moment_ratio`).  The
power-law and Erdos-Renyi special cases are closed forms or series.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DegreeDistribution

log = logging.getLogger(__name__)

SERIES_TOL = 1e-10
SERIES_CAP = 1_000_000


class SeriesError(ArithmeticError):
    """An infinite series failed to converge within the term cap."""


class UndefinedExcess(ArithmeticError):
    """``F_d == 0``: no node can have ``d`` recruited neighbors."""


def _as_arrays(zeta) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(zeta, DegreeDistribution):
        return zeta.ks.astype(float), zeta.probs
    if isinstance(zeta, dict):
        ks = np.fromiter(zeta.keys(), dtype=float)
        ps = np.fromiter(zeta.values(), dtype=float)
    else:
        ks, ps = (np.asarray(a, dtype=float) for a in zeta)
    return ks, ps / ps.sum()


@dataclass
class ExcessTable:
    """``zetas[d]`` is the law ``zeta^(d)`` over ``ks``; ``excess[d]`` its
    mean d-excess ``<k>_{zeta^(d)} - d``.  ``truncated_at`` is set when the
    recursion stopped early because that excess hit zero."""

    ks: np.ndarray
    zetas: list[np.ndarray] = field(default_factory=list)
    means: list[float] = field(default_factory=list)
    excess: list[float] = field(default_factory=list)
    truncated_at: int | None = None

    @property
    def d_max(self) -> int:
        return len(self.zetas) - 1

    def excess_at(self, d: int) -> float:
        """Excess for ``d``, clamped to zero past the truncation point."""
        if d < len(self.excess):
            return max(self.excess[d], 0.0)
        return 0.0

    def corrected_mean_degree(self, d: int, n_d: int, n_next: int) -> float:
        """``<k|d>`` from nested-set volumes, fed with observed frontier
        counts ``N_d`` and ``N_{d+1}``.  Diagnostic only."""
        if n_d <= n_next:
            raise ValueError("need N_d > N_{d+1}")
        if d + 1 >= len(self.means):
            return self.means[d] if d < len(self.means) else float(d)
        w = n_d / (n_d - n_next)
        return w * self.means[d] - (w - 1) * self.means[d + 1]


def excess_recursion(zeta, d_max: int, eps: float = 1e-12) -> ExcessTable:
    """Build ``zeta^(0..d_max)`` by
    ``zeta^(d+1)_k = (k - d) zeta^(d)_k / (<k>_{zeta^(d)} - d)``."""
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    ks, z = _as_arrays(zeta)
    table = ExcessTable(ks=ks)
    for d in range(d_max + 1):
        mean = float(np.dot(ks, z))
        table.zetas.append(z)
        table.means.append(mean)
        table.excess.append(mean - d)
        if d == d_max:
            break
        denom = mean - d
        if denom <= eps:
            table.truncated_at = d
            log.debug("excess recursion truncated at d=%d (excess %.3g)", d, denom)
            break
        nxt = (ks - d) * z / denom
        nxt[ks < d + 1] = 0.0
        err = abs(nxt.sum() - 1.0)
        if err > 1e-9:
            raise ArithmeticError(f"zeta^({d + 1}) mass off by {err:.3g}")
        z = nxt / nxt.sum()
    return table


def falling_factorial_moments(zeta, d_max: int) -> np.ndarray:
    """``F_d = sum_k k (k-1) ... (k-d+1) zeta_k`` for ``d = 0..d_max``.

    Accumulated in log space so large supports do not overflow; only the
    ratios of consecutive entries are meaningful when they do.
    """
    ks, ps = _as_arrays(zeta)
    out = np.zeros(d_max + 1)
    logff = np.zeros_like(ks)
    alive = ps > 0
    logp = np.where(alive, np.log(np.where(alive, ps, 1.0)), -np.inf)
    logs = []
    for d in range(d_max + 1):
        if d:
            factor = ks - (d - 1)
            alive &= factor > 0
            logff = logff + np.log(np.where(factor > 0, factor, 1.0))
        terms = np.where(alive, logff + logp, -np.inf)
        logs.append(terms)
    top = max((t.max() for t in logs if np.isfinite(t).any()), default=0.0)
    for d, terms in enumerate(logs):
        out[d] = np.exp(terms - top).sum() if np.isfinite(terms).any() else 0.0
    return out * math.exp(top) if math.isfinite(math.exp(top)) else out


def excess_moment_ratio(zeta, d: int) -> float:
    """``<k - d>_{zeta^(d)}`` as ``F_{d+1} / F_d``."""
    f = falling_factorial_moments(zeta, d + 1)
    if f[d] == 0:
        raise UndefinedExcess(f"F_{d} = 0")
    return float(f[d + 1] / f[d])


def er_excess(n: int, q: float, d: int) -> float:
    """Erdos-Renyi G(n, q): the expected d-excess is ``(n - d - 1) q``."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if not 0 <= d < n - 1:
        raise ValueError("need 0 <= d < n - 1")
    return (n - d - 1) * q


def polylog(s: float, x: float) -> float:
    """``Li_s(x) = sum_{k>=1} x**k / k**s`` for ``0 <= x < 1``."""
    if not 0 <= x < 1:
        raise ValueError("polylog needs 0 <= x < 1")
    if s == 1:
        return -math.log1p(-x)
    total = 0.0
    xk = 1.0
    for k in range(1, SERIES_CAP + 1):
        xk *= x
        term = xk / k ** s
        total += term
        if term < SERIES_TOL * max(1.0, total):
            return total
    raise SeriesError(f"Li_{s}({x}) did not converge in {SERIES_CAP} terms")


def truncated_powerlaw(c: float, tau: float, tol: float = 1e-14,
                       moment: int = 0) -> DegreeDistribution:
    """``zeta_k ~ k**-tau * c**k`` cut where ``k**moment`` times the term
    falls below ``tol`` of the running ``moment``-th moment, so that moments
    up to that order keep their tail."""
    if not 0 < c < 1:
        raise ValueError("C_t must lie in (0, 1)")
    logc = math.log(c)
    # weighted terms peak near k = (moment - tau) / -log(c); cut only past it
    peak = max(tau, moment - tau, 1.0) / -logc
    ks = []
    ws = []
    total = 0.0
    for k in range(1, SERIES_CAP + 1):
        w = math.exp(k * logc - tau * math.log(k))
        ks.append(k)
        ws.append(w)
        wm = w * k ** moment
        total += wm
        if k > peak and wm < tol * total:
            break
    else:
        raise SeriesError("power-law truncation did not converge")
    return DegreeDistribution(np.array(ks), np.array(ws), len(ks))


def gamma_d_tau2(c: float, d: int) -> float:
    """Series ratio ``Gamma_d`` for ``tau = 2``:

        sum_m c^(m+1) (m+d+1)! / ((m+d+2) m!)
        -------------------------------------
        sum_m c^m     (m+d)!   / ((m+d+1) m!)

    Terms are generated by ``a_{m+1} = a_m * c * (m+d+1) / (m+1)`` with
    ``a_0 = 1`` (the common ``d!`` cancels).
    """
    if not 0 < c < 1:
        raise ValueError("C_t must lie in (0, 1)")
    if d < 0:
        raise ValueError("d must be >= 0")
    a = 1.0
    num = den = 0.0
    for m in range(SERIES_CAP):
        tn = c * a * (m + d + 1) / (m + d + 2)
        td = a / (m + d + 1)
        num += tn
        den += td
        past_peak = c * (m + d + 1) / (m + 1) < 1
        if past_peak and tn < SERIES_TOL * num and td < SERIES_TOL * den:
            return num / den
        a *= c * (m + d + 1) / (m + 1)
    raise SeriesError(f"Gamma_{d}({c}) did not converge in {SERIES_CAP} terms")


def powerlaw_excess(c: float, tau: float, d: int) -> float:
    """``<k - d>`` for ``zeta_k ~ k**-tau c**k``.

    ``tau == 1`` uses ``c d / (1 - c)``.  ``tau == 2`` uses the series ratio,
    which in ``gamma_d_tau2`` is shifted by one: ``Gamma_{d-1}`` is the
    excess at ``d``.  Other exponents fall back to the moment ratio of the
    truncated series.
    """
    if c >= 1:
        raise ValueError("C_t >= 1: the excess diverges for d >= ceil(tau)")
    if not 0 < c:
        raise ValueError("C_t must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    if tau == 1:
        return c * d / (1 - c)
    if tau == 2:
        return gamma_d_tau2(c, d - 1)
    return excess_moment_ratio(truncated_powerlaw(c, tau, moment=d + 1), d)


def pure_powerlaw_excess_diverges(tau: float, d: int) -> bool:
    """For ``C_t -> 1`` (``zeta_k ~ k**-tau``), whether ``<k - d>`` is
    infinite, i.e. whether ``F_{d+1} = sum_k k^(d+1) k**-tau`` diverges.

    Holds for every ``d >= ceil(tau)``.
    """
    return d + 1 >= tau - 1
