"""Speed fits, doubling ratios and two standalone numeric side-checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from .kernel import _check_alpha

MIN_POINTS = 8


@dataclass
class SpeedFit:
    slope: float
    intercept: float
    stderr: float
    window: tuple
    n_points: int
    # a quadratic explains the data far better than the line
    curvature: bool = False

    def to_json(self) -> dict:
        return asdict(self)


def ols_fit(t: Sequence[float], y: Sequence[float], window: Optional[tuple] = None) -> SpeedFit:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy t_lo < t_hi")
    m = (t >= lo) & (t <= hi)
    tt, yy = t[m], y[m]
    if tt.size < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points in the window, got {tt.size}")
    res = stats.linregress(tt, yy)
    resid = yy - (res.intercept + res.slope * tt)
    rss1 = float(np.dot(resid, resid))
    q = np.polyfit(tt, yy, 2)
    r2 = yy - np.polyval(q, tt)
    rss2 = float(np.dot(r2, r2))
    scale = float(np.dot(yy - yy.mean(), yy - yy.mean())) or 1.0
    curved = rss1 > 1e-18 * scale and rss2 < 0.1 * rss1
    return SpeedFit(float(res.slope), float(res.intercept), float(res.stderr), (float(lo), float(hi)), int(tt.size), bool(curved))


def fit_linear_speed(traj, window: Optional[tuple] = None) -> SpeedFit:
    """OLS of ``|left_tip|`` against ``t``; default window is the second half."""
    return ols_fit(traj.times, np.abs(traj.column("left_tip")), window)


def fit_exponential_rate(trace, window: Optional[tuple] = None, side: str = "right") -> SpeedFit:
    """OLS of ``log x_front`` against ``t`` over the records where the front exists."""
    pts = trace.defined(side)
    t = np.array([p[0] for p in pts], dtype=float)
    x = np.array([p[1] for p in pts], dtype=float)
    if side == "left":
        x = -x
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
    else:
        keep = np.ones_like(t, dtype=bool)
    if np.any(x[keep] <= 0):
        raise ValueError("front position must be positive to take its logarithm")
    return ols_fit(t[keep], np.log(x[keep]), window)


def spread_at(traj, t: float) -> float:
    """``|left_tip|`` at the last sample no later than ``t``."""
    times = np.asarray(traj.times)
    i = int(np.searchsorted(times, t + 1e-9, side="right")) - 1
    if i < 0:
        raise ValueError(f"no sample at or before t={t}")
    return abs(traj.samples[i].left_tip)


def doubling_checkpoints(t_final: float, t_min: float) -> list[float]:
    """``t_final / 2^k`` for ``k >= 1`` down to ``t_min``, ascending."""
    out = []
    t = t_final / 2.0
    while t >= t_min:
        out.append(t)
        t /= 2.0
    return out[::-1]


def superlinearity_statistic(traj, t_min: float = 1.0, t_final: Optional[float] = None) -> list[tuple[float, float]]:
    """``(t_i, |tip(2 t_i)| / |tip(t_i)|)`` over geometric checkpoints ending at ``t_final``.

    Checkpoints where the tip is still at the origin are skipped.
    """
    t_final = traj.t_final if t_final is None else t_final
    out = []
    for t in doubling_checkpoints(t_final, t_min):
        a = spread_at(traj, t)
        if a == 0:
            continue
        out.append((t, spread_at(traj, 2.0 * t) / a))
    return out


# -- the heuristic series -----------------------------------------------------------


def inner_sum(m):
    """``sum_{k=1}^m k (m - k) = (m^3 - m) / 6``."""
    m = np.asarray(m, dtype=float)
    return (m**3 - m) / 6.0


def inner_sum_brute(m: int) -> int:
    return sum(k * (m - k) for k in range(1, m + 1))


@dataclass
class SeriesResult:
    alpha: float
    M: int
    partial_sum: float
    tail_bound: float
    verdict: str


def heuristic_series(alpha: float, M: int) -> SeriesResult:
    """Partial sum of ``sum_m m^(-2 alpha) (m^3 - m)/6`` with an integral bound on the rest.

    The terms behave like ``m^(3 - 2 alpha) / 6``: the tail beyond ``M`` is at
    most ``M^(4 - 2 alpha) / (6 (2 alpha - 4))`` when ``alpha > 2`` and infinite
    otherwise.
    """
    alpha = _check_alpha(alpha)
    if M < 100:
        raise ValueError("M must be at least 100")
    m = np.arange(2, M + 1, dtype=float)
    terms = m ** (-2.0 * alpha) * inner_sum(m)
    partial = math.fsum(terms[::-1].tolist())
    p = 2.0 * alpha - 4.0
    tail = M ** (-p) / (6.0 * p) if p > 0 else math.inf
    return SeriesResult(alpha, int(M), partial, tail, "converges" if math.isfinite(tail) else "diverges")


def series_limit(alpha: float) -> float:
    """Closed form ``(zeta(2a - 3) - zeta(2a - 1)) / 6`` for ``alpha > 2``."""
    s = 2.0 * alpha
    return float((special.zeta(s - 3.0) - special.zeta(s - 1.0)) / 6.0)


# -- Poisson large deviations --------------------------------------------------------


@dataclass
class LDPResult:
    lam: float
    exact_prob: float
    bound: float
    holds: bool


def poisson_ldp_check(lam: float) -> LDPResult:
    """``P(Poisson(lam) <= lam/3)`` summed in log space against ``exp(-lam/6)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    k = np.arange(0, int(math.floor(lam / 3.0)) + 1)
    log_p = float(special.logsumexp(stats.poisson.logpmf(k, lam)))
    exact = math.exp(log_p)
    bound = math.exp(-lam / 6.0)
    return LDPResult(float(lam), exact, bound, log_p <= -lam / 6.0)
