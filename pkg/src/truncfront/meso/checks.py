"""Numerical checks of the analytic properties of the nonlocal equation."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from ..kernel import _check_alpha, kernel_continuous, kernel_tail_integral, normalization_constant
from .solver import Convolver, GridSpec, MesoField, solve

QUAD_TOL = 1e-12


# -- quadrature ------------------------------------------------------------------


def _breakpoints(centres: Sequence[float], reach: float) -> list[float]:
    """Geometric breakpoints around each centre out to ``reach``."""
    pts = set()
    for c in centres:
        pts.add(c)
        d = 0.5
        while d < reach:
            pts.add(c - d)
            pts.add(c + d)
            d *= 2.0
    return sorted(pts)


def integrate_line(fn: Callable[[float], float], centres: Sequence[float], lo=-math.inf, hi=math.inf) -> float:
    """``int_lo^hi fn`` for integrands with features of unit scale near ``centres``."""
    reach = 4.0 * max(1.0, max(abs(c) for c in centres))
    pts = [p for p in _breakpoints(centres, reach) if lo < p < hi]
    edges = [lo] + pts + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        with warnings.catch_warnings():
            # far tail pieces are tiny; quad's roundoff warnings there are noise
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _err = integrate.quad(fn, a, b, epsabs=QUAD_TOL, epsrel=1e-11, limit=200)
        total += val
    return total


def kernel_convolution(fn: Callable[[float], float], x: float, alpha: float, centres=(0.0,), lo=-math.inf, hi=math.inf) -> float:
    """``(a * fn)(x) = int a(x - z) fn(z) dz`` over ``z`` in ``[lo, hi]``."""
    c = normalization_constant(alpha)

    def integrand(z):
        return c * (1.0 + (x - z) ** 2) ** (-alpha) * fn(z)

    return integrate_line(integrand, list(centres) + [x], lo, hi)


# -- sub-solutions ---------------------------------------------------------------


def _front_radius(which: str, alpha: float, eps: float, t: float) -> float:
    p = 2.0 * alpha if which == "g" else 2.0 * alpha - 1.0
    return math.exp((1.0 - eps) * t / p)


def subsolution_profile(which: str, x, t: float, alpha: float, eps: float):
    """``g(x,t) = min(1, |x|^-2a e^((1-eps)t))`` or ``h`` (1 on the left half-line, ``x^(1-2a)`` tail)."""
    x = np.asarray(x, dtype=float)
    e = math.exp((1.0 - eps) * t)
    with np.errstate(divide="ignore"):
        if which == "g":
            out = np.minimum(1.0, np.abs(x) ** (-2.0 * alpha) * e)
        elif which == "h":
            out = np.where(x <= 0, 1.0, np.minimum(1.0, np.abs(x) ** (1.0 - 2.0 * alpha) * e))
        else:
            raise ValueError("which must be 'g' or 'h'")
    return float(out) if out.ndim == 0 else out


def _conv_profile(which: str, x: float, t: float, alpha: float, eps: float) -> float:
    """``(a * g)(x, t)`` or ``(a * h)(x, t)``: exact on the plateau, quadrature on the tails."""
    r = _front_radius(which, alpha, eps, t)
    e = math.exp((1.0 - eps) * t)
    if which == "g":
        flat = kernel_tail_integral(x - r, alpha) - kernel_tail_integral(x + r, alpha)
        p = -2.0 * alpha

        def tail(z):
            return e * abs(z) ** p

        right = kernel_convolution(tail, x, alpha, centres=(r,), lo=r)
        left = kernel_convolution(tail, x, alpha, centres=(-r,), hi=-r)
        return flat + right + left
    flat = kernel_tail_integral(x - r, alpha)
    p = 1.0 - 2.0 * alpha
    right = kernel_convolution(lambda z: e * z**p, x, alpha, centres=(r,), lo=r)
    return flat + right


def subsolution_violation(which: str, x: float, t: float, alpha: float, eps: float, lag: float = 0.5, nodes: int = 8) -> float:
    """``dG/dt - a * G`` at ``(x, t)`` for the time average over ``[t, t + lag]``."""
    dt = (subsolution_profile(which, x, t + lag, alpha, eps) - subsolution_profile(which, x, t, alpha, eps)) / lag
    s, w = np.polynomial.legendre.leggauss(nodes)
    times = t + 0.5 * lag * (s + 1.0)
    avg = 0.5 * float(np.dot(w, [_conv_profile(which, x, ti, alpha, eps) for ti in times]))
    return dt - avg


DEFAULT_PROBES = (0.25, 0.5, 0.8, 0.95, 1.0, 1.02, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0)


@dataclass
class SubsolutionReport:
    which: str
    alpha: float
    eps: float
    onset: Optional[float]
    max_violation: float
    window: tuple
    scan: list = field(default_factory=list)  # (t, max violation over probes)

    @property
    def passed(self) -> bool:
        return self.onset is not None and self.max_violation <= 1e-6

    def to_json(self) -> dict:
        return {
            "check": f"subsolution_{self.which}",
            "params": {"alpha": self.alpha, "eps": self.eps, "onset": self.onset, "window": list(self.window)},
            "max_violation": self.max_violation,
            "pass": self.passed,
        }


DEFAULT_LAGS = (0.05, 0.5, 2.0)


def max_violation_at(which, t, alpha, eps, probes=DEFAULT_PROBES, absolute=(-5.0, -1.0, 0.0, 0.5, 1.0), lags=DEFAULT_LAGS) -> float:
    """Worst ``dG/dt - a * G`` over the probes and averaging lags at time ``t``."""
    r = _front_radius(which, alpha, eps, t)
    xs = [m * r for m in probes] + list(absolute)
    return max(subsolution_violation(which, x, t, alpha, eps, lag) for x in xs for lag in lags)


def check_subsolution(
    which: str,
    alpha: float,
    eps: float,
    probes=DEFAULT_PROBES,
    scan_times=None,
    window: float = 5.0,
    n_window: int = 11,
    tol: float = 1e-6,
    lags=DEFAULT_LAGS,
) -> SubsolutionReport:
    """Scan for the onset time, then take the worst violation on ``[onset, onset + window]``.

    Probes sit at multiples of the radius where the profile leaves the value 1,
    plus a few fixed points (including the half-line where ``h = 1``).
    """
    alpha = _check_alpha(alpha)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    scan_times = scan_times if scan_times is not None else np.arange(0.0, 40.0 + 1e-9, 0.5)
    scan = []
    onset = None
    for t in scan_times:
        v = max_violation_at(which, float(t), alpha, eps, probes, lags=lags)
        scan.append((float(t), v))
        if v <= tol:
            onset = float(t)
            break
    if onset is None:
        return SubsolutionReport(which, alpha, eps, None, math.inf, (), scan)
    times = np.linspace(onset, onset + window, n_window)
    worst = max(max_violation_at(which, float(t), alpha, eps, probes, lags=lags) for t in times)
    return SubsolutionReport(which, alpha, eps, onset, worst, (onset, onset + window), scan)


# -- kernel ratio and the capped weight --------------------------------------------


def kernel_power(x, alpha: float, gamma: float):
    return kernel_continuous(x, alpha) ** gamma


def check_kernel_ratio(alpha: float, gamma: float, xs) -> list[float]:
    """``(a * a^gamma)(x) / a^gamma(x)`` at each probe."""
    alpha = _check_alpha(alpha)
    if not 1.0 / (2.0 * alpha) < gamma < 1.0:
        raise ValueError("gamma must lie in (1/(2 alpha), 1)")
    out = []
    for x in xs:
        conv = kernel_convolution(lambda z: kernel_power(z, alpha, gamma), float(x), alpha)
        out.append(conv / kernel_power(float(x), alpha, gamma))
    return out


def capped_weight(x, alpha: float, gamma: float, lam: float):
    """``omega(x) = min(lambda, a(x)^gamma)``."""
    return np.minimum(lam, kernel_power(x, alpha, gamma))


def weight_ratio(x: float, alpha: float, gamma: float, lam: float) -> float:
    """``(a * omega)(x) / omega(x)``."""
    c = normalization_constant(alpha)
    # a^gamma(z) = lam at |z| = z_lam; the cap bites inside
    z_lam = math.sqrt(max((c**gamma / lam) ** (1.0 / (alpha * gamma)) - 1.0, 0.0))
    conv = kernel_convolution(
        lambda z: float(capped_weight(z, alpha, gamma, lam)), x, alpha, centres=(-z_lam, z_lam)
    )
    return conv / float(capped_weight(x, alpha, gamma, lam))


def _weight_ok(alpha, gamma, lam, delta, probes) -> bool:
    return all(weight_ratio(float(x), alpha, gamma, lam) <= 1.0 + delta for x in probes)


def lambda_probes(n: int = 120, x_max: float = 1e6) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-2, math.log10(x_max), n)])


@dataclass
class LambdaResult:
    lam: float
    halvings: int
    probes: int
    reverified: bool


def find_lambda(alpha: float, gamma: float, delta: float, n_probes: int = 120, lam_min: float = 1e-12) -> LambdaResult:
    """Halve ``lambda`` from ``a(0)^gamma`` until ``a * omega <= (1 + delta) omega`` at every probe.

    The probes are log-spaced up to ``1e6``; the value found is then
    re-checked on a grid twice as dense.
    """
    alpha = _check_alpha(alpha)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 1.0 / (2.0 * alpha) < gamma < 1.0:
        raise ValueError("gamma must lie in (1/(2 alpha), 1)")
    lam = normalization_constant(alpha) ** gamma
    probes = lambda_probes(n_probes)
    k = 0
    while True:
        if _weight_ok(alpha, gamma, lam, delta, probes):
            if _weight_ok(alpha, gamma, lam, delta, lambda_probes(2 * n_probes)):
                return LambdaResult(lam, k, probes.size, True)
        lam *= 0.5
        k += 1
        if lam < lam_min:
            raise ArithmeticError(f"no lambda >= {lam_min} found for delta={delta}")


# -- solver-level checks -------------------------------------------------------------


@dataclass
class CheckResult:
    check: str
    params: dict
    max_violation: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"check": self.check, "params": self.params, "max_violation": self.max_violation, "pass": self.passed}


def comparison_check(grid: GridSpec, u1_init, u2_init, horizon: float, alpha: float, dt: float = 0.1, frame_every: float = 1.0, conv=None) -> float:
    """Largest ``(u1 - u2)^+`` over stored frames for ordered initial data."""
    u1_init, u2_init = np.asarray(u1_init, float), np.asarray(u2_init, float)
    if np.any(u1_init > u2_init):
        raise ValueError("initial data must satisfy u1 <= u2")
    conv = conv if conv is not None else Convolver(grid, alpha)
    r1 = solve(MesoField(grid, u1_init.copy()), horizon, alpha, dt=dt, frame_every=frame_every, conv=conv)
    r2 = solve(MesoField(grid, u2_init.copy()), horizon, alpha, dt=dt, frame_every=frame_every, conv=conv)
    return max(float(np.max(np.maximum(f1.u - f2.u, 0.0))) for f1, f2 in zip(r1.frames, r2.frames))


def weighted_norm(u, weight) -> float:
    """``sup |u| / weight`` over cells where the weight is positive."""
    weight = np.asarray(weight, float)
    keep = weight > 0
    return float(np.max(np.abs(np.asarray(u)[keep]) / weight[keep]))


def growth_bound_check(frames, weight, nu: float) -> float:
    """``max_t ( ||u_t||_w - ||u_0||_w e^(nu t) )^+``; zero-weight cells are excluded."""
    n0 = weighted_norm(frames[0].u, weight)
    t0 = frames[0].t
    worst = 0.0
    for f in frames:
        bound = n0 * math.exp(nu * (f.t - t0))
        worst = max(worst, weighted_norm(f.u, weight) - bound)
    return worst


def hair_trigger_check(frames, radius: float, threshold: float) -> Optional[float]:
    """First frame time with ``min_{|x| <= radius} u >= threshold`` (``None`` if never)."""
    for f in frames:
        inside = np.abs(f.grid.x) <= radius
        if inside.any() and float(f.u[inside].min()) >= threshold:
            return f.t
    return None


def result_dict(obj) -> dict:
    return asdict(obj)
